#include "multilasso/hidden.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "multilasso/parallel.hpp"
#include "multilasso/rng.hpp"

namespace multilasso {

namespace {

constexpr int kStateCap = 65536;
constexpr double kLog2Pi = 1.8378770664093454836;

double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

}  // namespace

HiddenModelSpec::HiddenModelSpec(int n_in, int L_in, double sigma_in, Eigen::VectorXd pi0_in,
                                 Eigen::VectorXd theta_in, BoxDomain domain_in)
    : n(n_in), L(L_in), sigma(sigma_in), pi0(std::move(pi0_in)), theta(std::move(theta_in)),
      domain(std::move(domain_in)) {
  if (n < 1 || L < 1) throw std::invalid_argument("HiddenModelSpec: n and L must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("HiddenModelSpec: sigma must be > 0");
  double states = 1.0;
  for (int t = 0; t < n; ++t) states *= double(L + 1);
  if (states > double(kStateCap))
    throw std::invalid_argument("HiddenModelSpec: (L+1)^n exceeds the enumeration cap");
  const int S = int(states);
  if (int(pi0.size()) != S) throw std::invalid_argument("HiddenModelSpec: pi0 has wrong length");
  double sum = 0.0;
  for (int s = 0; s < S; ++s) {
    if (!(pi0[s] > 0.0)) throw std::invalid_argument("HiddenModelSpec: pi0 must be positive");
    sum += pi0[s];
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("HiddenModelSpec: pi0 must sum to 1");
  if (int(theta.size()) != p()) throw std::invalid_argument("HiddenModelSpec: theta length != nL");
  if (domain.dim() != p()) throw std::invalid_argument("HiddenModelSpec: domain dim != nL");

  features_.resize(S, p());
  for (int s = 0; s < S; ++s) {
    std::vector<int> z(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) z[size_t(t)] = letter(s, t);
    features_.row(s) = feature(z, n, L).transpose();
  }
}

int HiddenModelSpec::num_states() const {
  int s = 1;
  for (int t = 0; t < n; ++t) s *= (L + 1);
  return s;
}

int HiddenModelSpec::letter(int state, int position) const {
  for (int t = 0; t < position; ++t) state /= (L + 1);
  return state % (L + 1) + 1;
}

Eigen::VectorXd HiddenModelSpec::uniform_pi0(int n, int L) {
  int S = 1;
  for (int t = 0; t < n; ++t) S *= (L + 1);
  return Eigen::VectorXd::Constant(S, 1.0 / double(S));
}

Eigen::VectorXd feature(const std::vector<int>& z, int n, int L) {
  if (int(z.size()) != n) throw std::invalid_argument("feature: sequence length != n");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(std::int64_t(n) * L);
  for (int t = 0; t < n; ++t) {
    const int a = z[size_t(t)];
    if (a < 1 || a > L + 1) throw std::invalid_argument("feature: letter out of range");
    if (a <= L) x[std::int64_t(t) * L + (a - 1)] = 1.0;
  }
  return x;
}

Eigen::VectorXd tilted_law(const HiddenModelSpec& spec, const Eigen::VectorXd& u) {
  if (u.size() != spec.p()) throw std::invalid_argument("tilted_law: u has wrong length");
  const int S = spec.num_states();
  Eigen::VectorXd logw(S);
  for (int s = 0; s < S; ++s) logw[s] = std::log(spec.pi0[s]) + spec.features().row(s).dot(u);
  const double lse = logsumexp(logw);
  Eigen::VectorXd out(S);
  for (int s = 0; s < S; ++s) out[s] = std::exp(logw[s] - lse);
  return out;
}

HiddenDataset sample_hidden(const HiddenModelSpec& spec, int N, std::uint64_t seed) {
  const Eigen::VectorXd law = tilted_law(spec, spec.theta);
  const int S = spec.num_states();
  Eigen::VectorXd cdf(S);
  double acc = 0.0;
  for (int s = 0; s < S; ++s) {
    acc += law[s];
    cdf[s] = acc;
  }
  HiddenDataset ds;
  ds.omega.resize(static_cast<size_t>(N));
  ds.Y.resize(N, spec.n);
  for (int i = 0; i < N; ++i) {
    CounterRng rng(seed, std::uint64_t(i));
    const double v = rng.uniform01();
    int state = S - 1;
    for (int s = 0; s < S; ++s)
      if (v < cdf[s]) {
        state = s;
        break;
      }
    ds.omega[size_t(i)].resize(static_cast<size_t>(spec.n));
    for (int t = 0; t < spec.n; ++t) {
      const int a = spec.letter(state, t);
      ds.omega[size_t(i)][size_t(t)] = a;
      ds.Y(i, t) = double(a) + spec.sigma * rng.normal();
    }
  }
  return ds;
}

namespace {

// log emission kernel ln k(z, y) for every state (proper Gaussian density)
Eigen::VectorXd log_kernel(const HiddenModelSpec& spec, const Eigen::VectorXd& y_row) {
  const int S = spec.num_states();
  Eigen::VectorXd lk = Eigen::VectorXd::Zero(S);
  const double inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
  const double lnorm = -std::log(spec.sigma) - 0.5 * kLog2Pi;
  for (int s = 0; s < S; ++s) {
    double v = 0.0;
    for (int t = 0; t < spec.n; ++t) {
      const double d = y_row[t] - double(spec.letter(s, t));
      v += -d * d * inv2s2 + lnorm;
    }
    lk[s] = v;
  }
  return lk;
}

}  // namespace

double hidden_loglik(const HiddenModelSpec& spec, const Eigen::VectorXd& u,
                     const Eigen::MatrixXd& Y, Eigen::VectorXd* grad) {
  if (u.size() != spec.p()) throw std::invalid_argument("hidden_loglik: u has wrong length");
  if (Y.cols() != spec.n) throw std::invalid_argument("hidden_loglik: Y has wrong width");
  if (!u.allFinite()) throw std::invalid_argument("hidden_loglik: non-finite parameter");
  const int S = spec.num_states();
  const int N = int(Y.rows());

  Eigen::VectorXd log_prior(S);
  for (int s = 0; s < S; ++s) log_prior[s] = std::log(spec.pi0[s]) + spec.features().row(s).dot(u);
  const double lse_prior = logsumexp(log_prior);

  double ll = double(N) * lse_prior;
  if (grad) {
    grad->setZero(spec.p());
    Eigen::VectorXd w(S);
    for (int s = 0; s < S; ++s) w[s] = std::exp(log_prior[s] - lse_prior);
    grad->noalias() += double(N) * (spec.features().transpose() * w);
  }
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd lw = log_prior + log_kernel(spec, Y.row(i).transpose());
    const double lse = logsumexp(lw);
    ll -= lse;
    if (grad) {
      Eigen::VectorXd w(S);
      for (int s = 0; s < S; ++s) w[s] = std::exp(lw[s] - lse);
      grad->noalias() -= spec.features().transpose() * w;
    }
  }
  return ll;
}

Eigen::VectorXd hidden_posterior_mean(const HiddenModelSpec& spec, const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& y_row) {
  const int S = spec.num_states();
  Eigen::VectorXd lw(S);
  for (int s = 0; s < S; ++s) lw[s] = std::log(spec.pi0[s]) + spec.features().row(s).dot(u);
  lw += log_kernel(spec, y_row);
  const double lse = logsumexp(lw);
  Eigen::VectorXd w(S);
  for (int s = 0; s < S; ++s) w[s] = std::exp(lw[s] - lse);
  return spec.features().transpose() * w;
}

GapEstimate expected_loglik_gap(const HiddenModelSpec& spec, const Eigen::VectorXd& u, int N,
                                long long replicates, std::uint64_t seed) {
  if (replicates < 2) throw std::invalid_argument("expected_loglik_gap: too few replicates");
  std::vector<double> gaps(static_cast<size_t>(replicates));
  parallel_for(replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      const HiddenDataset ds = sample_hidden(spec, N, mix64(seed) + std::uint64_t(r));
      gaps[size_t(r)] = hidden_loglik(spec, u, ds.Y) - hidden_loglik(spec, spec.theta, ds.Y);
    }
  });
  GapEstimate g;
  g.replicates = replicates;
  g.mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / double(replicates);
  double s2 = 0.0;
  for (double x : gaps) s2 += (x - g.mean) * (x - g.mean);
  g.se = std::sqrt(s2 / double(replicates - 1) / double(replicates));
  return g;
}

CEllEstimate estimate_C_ell(const HiddenModelSpec& spec, int N, long long replicates,
                            std::uint64_t seed) {
  if (replicates < spec.p() + 2)
    throw std::invalid_argument("estimate_C_ell: need more replicates than dimensions");
  const int p = spec.p();
  std::vector<Eigen::VectorXd> post(static_cast<size_t>(replicates));
  parallel_for(replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      const HiddenDataset one = sample_hidden(spec, 1, mix64(seed + 0x0E11) + std::uint64_t(r));
      post[size_t(r)] = hidden_posterior_mean(spec, spec.theta, one.Y.row(0).transpose());
    }
  });
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (const auto& v : post) mean += v;
  mean /= double(replicates);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
  for (const auto& v : post) {
    const Eigen::VectorXd d = v - mean;
    H.noalias() += d * d.transpose();
  }
  H /= double(replicates - 1);
  H = 0.5 * (H + H.transpose()).eval();

  CEllEstimate est;
  est.H = H;
  est.replicates = replicates;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  est.lambda_min = es.eigenvalues().minCoeff();
  // covariance entries carry sampling error of order tr(H)/sqrt(R); reported
  // as a noise scale, not a rigorous eigenvalue CI
  est.lambda_min_se = H.trace() / std::sqrt(double(replicates));
  if (est.lambda_min <= 0.0)
    throw std::runtime_error(
        "estimate_C_ell: smallest eigenvalue not positive; identifiability may "
        "fail (pi0 zeros?) or replicates are too few");
  est.C_ell = double(N) * est.lambda_min / 2.0;
  return est;
}

CEllCalibration calibrate_C_ell(const HiddenModelSpec& spec, int N, double local_C_ell,
                                const std::vector<Eigen::VectorXd>& grid,
                                long long gap_replicates, std::uint64_t seed) {
  CEllCalibration cal;
  cal.local = local_C_ell;
  cal.implied = std::numeric_limits<double>::infinity();
  std::uint64_t stream = 0;
  for (const auto& u : grid) {
    const double d2 = (u - spec.theta).squaredNorm();
    if (d2 < 1e-18) continue;
    const GapEstimate g = expected_loglik_gap(spec, u, N, gap_replicates,
                                              mix64(seed + 0xCA11) + stream++);
    cal.implied = std::min(cal.implied, g.mean / d2);
  }
  if (!std::isfinite(cal.implied))
    throw std::invalid_argument("calibrate_C_ell: grid has no point distinct from theta");
  cal.shrunk = cal.implied < cal.local;
  cal.value = cal.shrunk ? cal.implied : cal.local;
  if (!(cal.value > 0.0))
    throw std::runtime_error("calibrate_C_ell: grid-implied constant is not positive");
  return cal;
}

HiddenAssumptionBounds hidden_assumption_bounds(const HiddenModelSpec& spec) {
  // x(z)^T u picks at most one coordinate per position block
  double lo = 0.0, hi = 0.0;
  for (int t = 0; t < spec.n; ++t) {
    double block_lo = 0.0, block_hi = 0.0;  // baseline letter contributes 0
    for (int a = 0; a < spec.L; ++a) {
      block_lo = std::min(block_lo, spec.domain.lo[std::int64_t(t) * spec.L + a]);
      block_hi = std::max(block_hi, spec.domain.hi[std::int64_t(t) * spec.L + a]);
    }
    lo += block_lo;
    hi += block_hi;
  }
  HiddenAssumptionBounds b;
  b.M_X = 1.0;
  b.A_g = std::exp(lo);
  b.B_g = std::exp(hi);
  b.F1 = b.B_g;  // derivative of exp on the reachable interval
  b.F2 = b.B_g;
  return b;
}

HiddenLipVerifyResult verify_hidden_lip(const HiddenModelSpec& spec, int N,
                                        const std::vector<Eigen::VectorXd>& grid, double q0,
                                        double q1, long long pilot_replicates,
                                        long long outer_replicates, std::uint64_t seed) {
  if (!(q0 > 0.0 && q0 < 1.0) || !(q1 > 0.0 && q1 < 1.0) || q0 + q1 >= 1.0)
    throw std::invalid_argument("verify_hidden_lip: need q0, q1 in (0,1) with q0 + q1 < 1");
  if (pilot_replicates < 2 || outer_replicates < 2)
    throw std::invalid_argument("verify_hidden_lip: too few replicates");

  // usable grid points (theta excluded)
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> l1d;
  for (const auto& u : grid) {
    const double d = (u - spec.theta).lpNorm<1>();
    if (d > 1e-12) {
      pts.push_back(u);
      l1d.push_back(d);
    }
  }
  HiddenLipVerifyResult out;
  out.quantile_level = 1.0 - q0 - q1;
  const int G = int(pts.size());

  const HiddenAssumptionBounds ab = hidden_assumption_bounds(spec);
  const double R_D = spec.domain.l1_radius_at(spec.theta);
  const HiddenConstants hc = hidden_constants(ab.F1, ab.F2, ab.A_g, ab.B_g, ab.M_X, R_D);

  // E S_X by Monte Carlo over fresh latent draws
  const long long sx_reps = std::min<long long>(outer_replicates, 1024);
  std::vector<double> sx(static_cast<size_t>(sx_reps));
  parallel_for(sx_reps, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      const HiddenDataset ds = sample_hidden(spec, N, mix64(seed + 0x5A) + std::uint64_t(r));
      Eigen::VectorXd colsq = Eigen::VectorXd::Zero(spec.p());
      for (int i = 0; i < N; ++i) {
        const Eigen::VectorXd x = feature(ds.omega[size_t(i)], spec.n, spec.L);
        colsq += x.cwiseProduct(x);
      }
      sx[size_t(r)] = std::sqrt(colsq.maxCoeff());
    }
  });
  out.E_SX_hat = std::accumulate(sx.begin(), sx.end(), 0.0) / double(sx_reps);

  out.threshold =
      hidden_lip_threshold(hc, ab.M_X, R_D, out.E_SX_hat, N, spec.p(), q0, q1);

  if (G == 0) {
    // supremum over an empty set: nothing can exceed the threshold
    out.verdict.pass = true;
    out.verdict.seed = seed;
    out.verdict.rhs = out.threshold;
    out.verdict.detail = "empty grid after excluding theta";
    return out;
  }

  // pilot centering: common random datasets across grid points
  Eigen::MatrixXd pilot_gaps(pilot_replicates, G);
  parallel_for(pilot_replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      const HiddenDataset ds = sample_hidden(spec, N, mix64(seed + 0x7B) + std::uint64_t(r));
      const double base = hidden_loglik(spec, spec.theta, ds.Y);
      for (int g = 0; g < G; ++g)
        pilot_gaps(r, g) = hidden_loglik(spec, pts[size_t(g)], ds.Y) - base;
    }
  });
  Eigen::VectorXd gap_hat(G), gap_se(G);
  for (int g = 0; g < G; ++g) {
    const double mean = pilot_gaps.col(g).mean();
    gap_hat[g] = mean;
    double s2 = 0.0;
    for (long long r = 0; r < pilot_replicates; ++r) {
      const double d = pilot_gaps(r, g) - mean;
      s2 += d * d;
    }
    gap_se[g] = std::sqrt(s2 / double(pilot_replicates - 1) / double(pilot_replicates));
  }
  out.pilot_se_max = gap_se.maxCoeff();
  out.inconclusive = out.pilot_se_max > 0.05 * out.threshold;
  double margin = 0.0;
  for (int g = 0; g < G; ++g) margin = std::max(margin, 3.0 * gap_se[g] / l1d[size_t(g)]);
  out.pilot_margin = margin;

  std::vector<double> sups(static_cast<size_t>(outer_replicates));
  parallel_for(outer_replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      const HiddenDataset ds = sample_hidden(spec, N, mix64(seed + 0x0D) + std::uint64_t(r));
      const double base = hidden_loglik(spec, spec.theta, ds.Y);
      double sup = 0.0;
      for (int g = 0; g < G; ++g) {
        const double gap = hidden_loglik(spec, pts[size_t(g)], ds.Y) - base;
        sup = std::max(sup, std::abs(gap - gap_hat[g]) / l1d[size_t(g)]);
      }
      sups[size_t(r)] = sup;
    }
  });

  const double guard = 1e-12 * std::max(1.0, out.threshold);
  long long exceed_raw = 0, exceed_margin = 0;
  for (double s : sups) {
    exceed_raw += (s > out.threshold + guard);
    exceed_margin += (s > out.threshold + margin + guard);
  }
  out.exceedance_raw = double(exceed_raw) / double(outer_replicates);
  out.verdict.seed = seed;
  out.verdict.replicates = outer_replicates;
  out.verdict.rhs = out.threshold;
  {
    double mean = std::accumulate(sups.begin(), sups.end(), 0.0) / double(outer_replicates);
    out.verdict.lhs = mean;
    double s2 = 0.0;
    for (double s : sups) s2 += (s - mean) * (s - mean);
    out.verdict.lhs_se =
        std::sqrt(s2 / double(outer_replicates - 1) / double(outer_replicates));
  }
  out.verdict.exceedance = double(exceed_margin) / double(outer_replicates);
  const double nominal = q0 + q1;
  out.verdict.exceedance_allowed =
      nominal + 3.0 * std::sqrt(nominal * (1.0 - nominal) / double(outer_replicates));
  out.pilot_inflation = out.exceedance_raw - out.verdict.exceedance;
  out.verdict.pass = !out.inconclusive && out.verdict.exceedance <= out.verdict.exceedance_allowed;
  out.verdict.detail = out.inconclusive
                           ? "inconclusive: pilot SE above 5% of the threshold"
                           : "exceedance counted at the pilot-margin-inflated threshold";
  // quantile of the raw sups doubles as an empirical M_q
  std::vector<double> sorted = sups;
  std::sort(sorted.begin(), sorted.end());
  size_t idx = size_t(std::ceil(out.quantile_level * double(sorted.size())));
  if (idx > 0) --idx;
  if (idx >= sorted.size()) idx = sorted.size() - 1;
  out.empirical_Mq = sorted[idx];
  out.sups = std::move(sups);
  return out;
}

HiddenFitResult fit_hidden_lasso(const HiddenModelSpec& spec, const Eigen::MatrixXd& Y,
                                 double K, double M_q, double C_ell,
                                 const SolverOptions& opts, int restarts,
                                 std::uint64_t restart_seed) {
  if (!(K > 1.0)) throw std::invalid_argument("fit_hidden_lasso: K must be > 1");
  HiddenFitResult fit;
  fit.lambda = K * M_q;
  Objective obj = [&spec, &Y](const Eigen::VectorXd& u, Eigen::VectorXd* grad) {
    return hidden_loglik(spec, u, Y, grad);
  };
  fit.result = solve_with_restarts(obj, fit.lambda, spec.domain, opts, restarts, restart_seed);
  long long S = 0;
  for (int h = 0; h < spec.theta.size(); ++h) S += (spec.theta[h] != 0.0);
  fit.error_bound = report_prop_hidden_error(K, M_q, std::max<long long>(S, 1), C_ell);
  return fit;
}

}  // namespace multilasso
