#include "multilasso/mc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "multilasso/parallel.hpp"
#include "multilasso/rng.hpp"

namespace multilasso {

TestFunction tanh_product(double M, int k) {
  TestFunction f;
  f.M = M;
  f.vanishing = true;
  f.h = [M, k](const Eigen::VectorXd& t) {
    double v = M;
    for (int j = 0; j < k; ++j) v *= std::tanh(t[j]);
    return v;
  };
  return f;
}

TestFunction tanh_mean(double M, int k) {
  TestFunction f;
  f.M = M;
  f.vanishing = false;
  f.h = [M, k](const Eigen::VectorXd& t) { return M * std::tanh(t.sum() / double(k)); };
  return f;
}

double apply_G(GTransform g, double scale, double x) {
  switch (g) {
    case GTransform::Identity:
      return x;
    case GTransform::Relu:
      return std::max(x, 0.0);
    case GTransform::Exp:
      return std::exp(x / scale);
  }
  return x;
}

namespace {

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  const double n = double(v.size());
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double s2 = 0.0;
    for (double x : v) s2 += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(s2 / (n - 1.0) / n);
  }
  return r;
}

double binomial_allowance(double nominal, long long replicates) {
  return nominal + 3.0 * std::sqrt(nominal * (1.0 - nominal) / double(replicates));
}

// strict exceedance with a double-rounding guard; a genuine exceedance clears
// the threshold by far more than this
bool exceeds(double stat, double threshold) {
  return stat > threshold + 1e-12 * std::max(1.0, threshold);
}

// Iterates every sign pattern over n variables in Gray-code order.
// visit(signs) is called once per pattern, with signs[i] in {-1, +1}.
template <class Visit>
void for_each_sign_pattern(int n, Visit&& visit) {
  std::vector<double> signs(static_cast<size_t>(n), 1.0);
  visit(signs, -1);
  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t g = 1; g < total; ++g) {
    const int bit = std::countr_zero(g);
    signs[size_t(bit)] = -signs[size_t(bit)];
    visit(signs, bit);
  }
}

void check_family(const TestFunctionFamily& family, const IndexSet& T, bool need_vanishing) {
  if (family.empty() || T.empty())
    throw std::invalid_argument("comparison verify: empty family or index set");
  const int N = int(family.size());
  for (const auto& pt : T)
    if (int(pt.rows()) != N)
      throw std::invalid_argument("comparison verify: index set row count != family size");
  if (need_vanishing)
    for (const auto& f : family)
      if (!f.vanishing)
        throw std::invalid_argument(
            "verify_multivariate_contraction: every function must carry the vanishing flag");
}

}  // namespace

MCVerdict verify_multivariate_contraction(const TestFunctionFamily& family, const IndexSet& T,
                                          GTransform G, double g_scale, long long replicates,
                                          std::uint64_t seed, bool force_sampling) {
  check_family(family, T, /*need_vanishing=*/true);
  const int N = int(family.size());
  const int k = int(T.front().cols());
  const int nT = int(T.size());

  // h values per (grid point, observation)
  Eigen::MatrixXd H(nT, N);
  for (int g = 0; g < nT; ++g)
    for (int i = 0; i < N; ++i) H(g, i) = family[size_t(i)].h(T[size_t(g)].row(i));

  MCVerdict v;
  v.seed = seed;
  v.exact = !force_sampling && std::int64_t(N) * k <= 20;

  if (v.exact) {
    // lhs: 2^N patterns over eps_i
    double acc = 0.0;
    std::vector<double> dots(static_cast<size_t>(nT));
    for_each_sign_pattern(N, [&](const std::vector<double>& signs, int flipped) {
      if (flipped < 0) {
        for (int g = 0; g < nT; ++g) dots[size_t(g)] = H.row(g).sum();
      } else {
        for (int g = 0; g < nT; ++g)
          dots[size_t(g)] += 2.0 * signs[size_t(flipped)] * H(g, flipped);
      }
      acc += apply_G(G, g_scale, *std::max_element(dots.begin(), dots.end()));
    });
    v.lhs = acc / double(1ULL << N);

    // rhs: 2^{N k} patterns over eps_ij; variable index i*k + j
    acc = 0.0;
    Eigen::MatrixXd MT(nT, N * k);
    for (int g = 0; g < nT; ++g)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < k; ++j)
          MT(g, i * k + j) = family[size_t(i)].M * T[size_t(g)](i, j);
    for_each_sign_pattern(N * k, [&](const std::vector<double>& signs, int flipped) {
      if (flipped < 0) {
        for (int g = 0; g < nT; ++g) dots[size_t(g)] = MT.row(g).sum();
      } else {
        for (int g = 0; g < nT; ++g)
          dots[size_t(g)] += 2.0 * signs[size_t(flipped)] * MT(g, flipped);
      }
      acc += apply_G(G, g_scale, *std::max_element(dots.begin(), dots.end()));
    });
    v.rhs = acc / double(1ULL << (N * k));
    v.pass = v.lhs <= v.rhs + 1e-12 * std::max(1.0, std::abs(v.rhs));
    v.detail = "exact sign enumeration";
    return v;
  }

  if (replicates < 2)
    throw std::invalid_argument("verify_multivariate_contraction: too few replicates");
  std::vector<double> lhs_vals(static_cast<size_t>(replicates)), rhs_vals(static_cast<size_t>(replicates));
  parallel_for(replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      CounterRng rng(seed, std::uint64_t(r));
      double best = -std::numeric_limits<double>::infinity();
      std::vector<double> eps(static_cast<size_t>(N));
      for (int i = 0; i < N; ++i) eps[size_t(i)] = rng.rademacher();
      for (int g = 0; g < nT; ++g) {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += eps[size_t(i)] * H(g, i);
        best = std::max(best, s);
      }
      lhs_vals[size_t(r)] = apply_G(G, g_scale, best);

      CounterRng rng2(seed, std::uint64_t(r), 1);
      std::vector<double> eps2(static_cast<size_t>(N) * k);
      for (auto& x : eps2) x = rng2.rademacher();
      best = -std::numeric_limits<double>::infinity();
      for (int g = 0; g < nT; ++g) {
        double s = 0.0;
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < k; ++j)
            s += eps2[size_t(i) * k + j] * family[size_t(i)].M * T[size_t(g)](i, j);
        best = std::max(best, s);
      }
      rhs_vals[size_t(r)] = apply_G(G, g_scale, best);
    }
  });
  const auto ml = mean_se(lhs_vals);
  const auto mr = mean_se(rhs_vals);
  v.lhs = ml.mean;
  v.lhs_se = ml.se;
  v.rhs = mr.mean;
  v.rhs_se = mr.se;
  v.replicates = replicates;
  v.pass = v.lhs <= v.rhs + 3.0 * std::hypot(v.lhs_se, v.rhs_se);
  v.detail = "sampled";
  return v;
}

MCVerdict verify_l1_comparison(const TestFunctionFamily& family, const IndexSet& T,
                               long long replicates, std::uint64_t seed, bool force_sampling) {
  check_family(family, T, /*need_vanishing=*/false);
  const int N = int(family.size());
  const int k = int(T.front().cols());
  const int nT = int(T.size());
  const double beta = double(beta_k(k));

  Eigen::MatrixXd H(nT, N);
  for (int g = 0; g < nT; ++g)
    for (int i = 0; i < N; ++i) H(g, i) = family[size_t(i)].h(T[size_t(g)].row(i));
  // per coordinate j: M_i t_ij over grid
  std::vector<Eigen::MatrixXd> col(static_cast<size_t>(k), Eigen::MatrixXd(nT, N));
  for (int j = 0; j < k; ++j)
    for (int g = 0; g < nT; ++g)
      for (int i = 0; i < N; ++i) col[size_t(j)](g, i) = family[size_t(i)].M * T[size_t(g)](i, j);

  MCVerdict v;
  v.seed = seed;
  v.exact = !force_sampling && N <= 20;

  if (v.exact) {
    double acc_lhs = 0.0;
    std::vector<double> acc_rhs(static_cast<size_t>(k), 0.0);
    std::vector<double> dots(static_cast<size_t>(nT));
    std::vector<std::vector<double>> dots_j(static_cast<size_t>(k), std::vector<double>(static_cast<size_t>(nT)));
    for_each_sign_pattern(N, [&](const std::vector<double>& signs, int flipped) {
      if (flipped < 0) {
        for (int g = 0; g < nT; ++g) dots[size_t(g)] = H.row(g).sum();
        for (int j = 0; j < k; ++j)
          for (int g = 0; g < nT; ++g) dots_j[size_t(j)][size_t(g)] = col[size_t(j)].row(g).sum();
      } else {
        const double d = 2.0 * signs[size_t(flipped)];
        for (int g = 0; g < nT; ++g) dots[size_t(g)] += d * H(g, flipped);
        for (int j = 0; j < k; ++j)
          for (int g = 0; g < nT; ++g) dots_j[size_t(j)][size_t(g)] += d * col[size_t(j)](g, flipped);
      }
      double mx = 0.0;
      for (double x : dots) mx = std::max(mx, std::abs(x));
      acc_lhs += mx;
      for (int j = 0; j < k; ++j) {
        mx = 0.0;
        for (double x : dots_j[size_t(j)]) mx = std::max(mx, std::abs(x));
        acc_rhs[size_t(j)] += mx;
      }
    });
    const double total = double(1ULL << N);
    v.lhs = acc_lhs / total;
    v.rhs = 0.0;
    for (int j = 0; j < k; ++j) v.rhs += acc_rhs[size_t(j)] / total;
    v.rhs *= beta;
    v.pass = v.lhs <= v.rhs + 1e-12 * std::max(1.0, std::abs(v.rhs));
    v.detail = "exact sign enumeration";
    return v;
  }

  if (replicates < 2) throw std::invalid_argument("verify_l1_comparison: too few replicates");
  std::vector<double> lhs_vals(static_cast<size_t>(replicates)), rhs_vals(static_cast<size_t>(replicates));
  parallel_for(replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      CounterRng rng(seed, std::uint64_t(r));
      std::vector<double> eps(static_cast<size_t>(N));
      for (auto& x : eps) x = rng.rademacher();
      double mx = 0.0;
      for (int g = 0; g < nT; ++g) {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += eps[size_t(i)] * H(g, i);
        mx = std::max(mx, std::abs(s));
      }
      lhs_vals[size_t(r)] = mx;
      double rhs = 0.0;
      for (int j = 0; j < k; ++j) {
        CounterRng rj(seed, std::uint64_t(r), std::uint64_t(j) + 1);
        std::vector<double> ej(static_cast<size_t>(N));
        for (auto& x : ej) x = rj.rademacher();
        double mj = 0.0;
        for (int g = 0; g < nT; ++g) {
          double s = 0.0;
          for (int i = 0; i < N; ++i) s += ej[size_t(i)] * col[size_t(j)](g, i);
          mj = std::max(mj, std::abs(s));
        }
        rhs += mj;
      }
      rhs_vals[size_t(r)] = beta * rhs;
    }
  });
  const auto ml = mean_se(lhs_vals);
  const auto mr = mean_se(rhs_vals);
  v.lhs = ml.mean;
  v.lhs_se = ml.se;
  v.rhs = mr.mean;
  v.rhs_se = mr.se;
  v.replicates = replicates;
  v.pass = v.lhs <= v.rhs + 3.0 * std::hypot(v.lhs_se, v.rhs_se);
  v.detail = "sampled";
  return v;
}

MCVerdict verify_univariate_contraction(const Eigen::MatrixXd& gamma_values,
                                        const std::vector<std::function<double(double)>>& f,
                                        double M, long long replicates, std::uint64_t seed,
                                        bool force_sampling) {
  const int nG = int(gamma_values.rows());
  const int N = int(gamma_values.cols());
  if (N == 0 || nG == 0 || int(f.size()) != N)
    throw std::invalid_argument("verify_univariate_contraction: bad inputs");

  Eigen::MatrixXd F(nG, N);
  for (int g = 0; g < nG; ++g)
    for (int i = 0; i < N; ++i) F(g, i) = f[size_t(i)](gamma_values(g, i));

  MCVerdict v;
  v.seed = seed;
  v.exact = !force_sampling && N <= 20;
  auto sup_abs = [&](const Eigen::MatrixXd& vals, const std::vector<double>& signs) {
    double mx = 0.0;
    for (int g = 0; g < nG; ++g) {
      double s = 0.0;
      for (int i = 0; i < N; ++i) s += signs[size_t(i)] * vals(g, i);
      mx = std::max(mx, std::abs(s));
    }
    return mx;
  };
  if (v.exact) {
    double acc_l = 0.0, acc_r = 0.0;
    for_each_sign_pattern(N, [&](const std::vector<double>& signs, int) {
      acc_l += sup_abs(F, signs);
      acc_r += sup_abs(gamma_values, signs);
    });
    const double total = double(1ULL << N);
    v.lhs = acc_l / total;
    v.rhs = 2.0 * M * acc_r / total;
    v.pass = v.lhs <= v.rhs + 1e-12 * std::max(1.0, std::abs(v.rhs));
    v.detail = "exact sign enumeration";
    return v;
  }
  std::vector<double> lv(static_cast<size_t>(replicates)), rv(static_cast<size_t>(replicates));
  parallel_for(replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      CounterRng rng(seed, std::uint64_t(r));
      std::vector<double> signs(static_cast<size_t>(N));
      for (auto& x : signs) x = rng.rademacher();
      lv[size_t(r)] = sup_abs(F, signs);
      rv[size_t(r)] = 2.0 * M * sup_abs(gamma_values, signs);
    }
  });
  const auto ml = mean_se(lv);
  const auto mr = mean_se(rv);
  v.lhs = ml.mean;
  v.lhs_se = ml.se;
  v.rhs = mr.mean;
  v.rhs_se = mr.se;
  v.replicates = replicates;
  v.pass = v.lhs <= v.rhs + 3.0 * std::hypot(v.lhs_se, v.rhs_se);
  v.detail = "sampled";
  return v;
}

MCVerdict verify_massart(const std::vector<Eigen::VectorXd>& A, long long replicates,
                         std::uint64_t seed, bool force_sampling) {
  if (A.empty()) throw std::invalid_argument("verify_massart: empty set");
  const int N = int(A.front().size());
  for (const auto& a : A)
    if (int(a.size()) != N) throw std::invalid_argument("verify_massart: ragged vectors");

  MCVerdict v;
  v.seed = seed;
  v.rhs = massart_bound(A);
  v.exact = !force_sampling && N <= 20;
  const int nA = int(A.size());

  if (v.exact) {
    double acc = 0.0;
    std::vector<double> dots(static_cast<size_t>(nA));
    for_each_sign_pattern(N, [&](const std::vector<double>& signs, int flipped) {
      if (flipped < 0) {
        for (int a = 0; a < nA; ++a) dots[size_t(a)] = A[size_t(a)].sum();
      } else {
        for (int a = 0; a < nA; ++a)
          dots[size_t(a)] += 2.0 * signs[size_t(flipped)] * A[size_t(a)][flipped];
      }
      double mx = 0.0;
      for (double x : dots) mx = std::max(mx, std::abs(x));
      acc += mx;
    });
    v.lhs = acc / double(1ULL << N);
    v.pass = v.lhs <= v.rhs + 1e-12 * std::max(1.0, v.rhs);
    v.detail = "exact sign enumeration";
    return v;
  }
  std::vector<double> vals(static_cast<size_t>(replicates));
  parallel_for(replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      CounterRng rng(seed, std::uint64_t(r));
      std::vector<double> signs(static_cast<size_t>(N));
      for (auto& x : signs) x = rng.rademacher();
      double mx = 0.0;
      for (int a = 0; a < nA; ++a) {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += signs[size_t(i)] * A[size_t(a)][i];
        mx = std::max(mx, std::abs(s));
      }
      vals[size_t(r)] = mx;
    }
  });
  const auto m = mean_se(vals);
  v.lhs = m.mean;
  v.lhs_se = m.se;
  v.replicates = replicates;
  v.pass = v.lhs <= v.rhs + 3.0 * m.se;
  v.detail = "sampled";
  return v;
}

namespace {

double process_W(const BoundedProcess& proc, CounterRng& rng) {
  const int N = int(proc.coeff.rows());
  const int G = int(proc.coeff.cols());
  double mx = 0.0;
  Eigen::VectorXd B(N);
  for (int i = 0; i < N; ++i)
    B[i] = proc.mult == BoundedProcess::Mult::Rademacher ? rng.rademacher()
                                                         : rng.uniform(-1.0, 1.0);
  for (int g = 0; g < G; ++g) {
    const double s = proc.coeff.col(g).dot(B);
    mx = std::max(mx, std::abs(s));
  }
  return mx;
}

}  // namespace

ConcentrationVerdict verify_functional_concentration(const BoundedProcess& proc,
                                                     const std::vector<double>& s_grid,
                                                     long long pilot_replicates,
                                                     long long replicates,
                                                     std::uint64_t seed) {
  const int N = int(proc.coeff.rows());
  if (N == 0 || proc.coeff.cols() == 0)
    throw std::invalid_argument("verify_functional_concentration: empty process");
  if (pilot_replicates < 2 || replicates < 2)
    throw std::invalid_argument("verify_functional_concentration: too few replicates");

  ConcentrationVerdict out;
  out.seed = seed;
  out.replicates = replicates;

  // pilot estimate of E W on an independent stream block
  std::vector<double> pilot(static_cast<size_t>(pilot_replicates));
  parallel_for(pilot_replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      CounterRng rng(seed, std::uint64_t(r), 0xA11CE);
      pilot[size_t(r)] = process_W(proc, rng);
    }
  });
  const auto pe = mean_se(pilot);
  out.EW_hat = pe.mean;
  out.EW_se = pe.se;

  // range = largest possible |sum_i f_i|
  double range = 0.0;
  for (int g = 0; g < proc.coeff.cols(); ++g)
    range = std::max(range, proc.coeff.col(g).cwiseAbs().sum() * proc.mult_bound());
  if (out.EW_se > 0.01 * range)
    throw std::runtime_error(
        "verify_functional_concentration: pilot batch too small (SE above 1% of range)");

  // deviation constants
  double sum_sq_range = 0.0;  // sum_i (b_i - a_i)^2
  double M = 0.0;             // sup_i sup_u |f_i(u)|
  double S2 = 0.0;            // sup_u sum_i var f_i(u)
  for (int i = 0; i < N; ++i) {
    const double ci = proc.coeff.row(i).cwiseAbs().maxCoeff() * proc.mult_bound();
    sum_sq_range += 4.0 * ci * ci;
    M = std::max(M, ci);
  }
  for (int g = 0; g < proc.coeff.cols(); ++g)
    S2 = std::max(S2, proc.coeff.col(g).squaredNorm() * proc.mult_var());

  std::vector<double> W(static_cast<size_t>(replicates));
  parallel_for(replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      CounterRng rng(seed, std::uint64_t(r), 0xB0B);
      W[size_t(r)] = process_W(proc, rng);
    }
  });

  out.pass = true;
  for (double s : s_grid) {
    if (!(s > 0.0)) throw std::invalid_argument("verify_functional_concentration: s must be > 0");
    const double nominal = std::exp(-s);
    ConcentrationRow dev;
    dev.s = s;
    dev.threshold = out.EW_hat + std::sqrt(2.0 * s * sum_sq_range);
    long long cnt = 0;
    for (double w : W) cnt += (w > dev.threshold);
    dev.freq = double(cnt) / double(replicates);
    dev.allowed = binomial_allowance(nominal, replicates);
    dev.pass = dev.freq <= dev.allowed;
    out.deviation_rows.push_back(dev);

    ConcentrationRow bern;
    bern.s = s;
    bern.threshold = 2.0 * out.EW_hat + std::sqrt(S2) * std::sqrt(2.0 * s) + 4.0 * M * s;
    cnt = 0;
    for (double w : W) cnt += (w > bern.threshold);
    bern.freq = double(cnt) / double(replicates);
    bern.allowed = binomial_allowance(nominal, replicates);
    bern.pass = bern.freq <= bern.allowed;
    out.bernstein_rows.push_back(bern);

    out.pass = out.pass && dev.pass && bern.pass;
  }
  out.W = std::move(W);
  return out;
}

ResidualProcess::ResidualProcess(LossFamily loss, DesignSet design, Eigen::VectorXd theta)
    : loss_(std::move(loss)), design_(std::move(design)), theta_(std::move(theta)) {
  if (!loss_.discrete())
    throw std::invalid_argument("ResidualProcess: discrete response family required");
  if (theta_.size() != design_.p())
    throw std::invalid_argument("ResidualProcess: theta dimension mismatch");
  const int N = design_.N();
  const int k = loss_.k;
  c_.resize(N, k);
  for (int i = 0; i < N; ++i) c_.row(i) = design_.apply(i, theta_).transpose();
  grad_at_c_.resize(loss_.response_support.size());
  for (size_t yi = 0; yi < loss_.response_support.size(); ++yi) {
    grad_at_c_[yi].resize(N, k);
    for (int i = 0; i < N; ++i)
      grad_at_c_[yi].row(i) =
          loss_.gradient(c_.row(i).transpose(), loss_.response_support[yi]).transpose();
  }
}

double ResidualProcess::phi(int i, int j, const Eigen::VectorXd& s, int y) const {
  const int k = loss_.k;
  Eigen::VectorXd lo = c_.row(i).transpose();  // c_i + bar_pi_{j-1} s
  for (int l = 0; l < j; ++l) lo[l] += s[l];
  const double dj = grad_at_c_[size_t(y)](i, j);
  if (std::abs(s[j]) < 1e-12) return loss_.gradient(lo, loss_.response_support[size_t(y)])[j] - dj;
  Eigen::VectorXd hi = lo;
  hi[j] += s[j];
  const int yy = loss_.response_support[size_t(y)];
  (void)k;
  return (loss_.value(hi, yy) - loss_.value(lo, yy)) / s[j] - dj;
}

double ResidualProcess::dev_phi(int i, int j, const Eigen::VectorXd& s, int y_obs) const {
  double e = 0.0;
  for (size_t yi = 0; yi < loss_.response_support.size(); ++yi) {
    const double pr = loss_.response_prob(c_.row(i).transpose(), loss_.response_support[yi]);
    e += pr * phi(i, j, s, int(yi));
  }
  return phi(i, j, s, y_obs) - e;
}

Eigen::VectorXd ResidualProcess::xi(const Eigen::VectorXd& u, const std::vector<int>& Y) const {
  const int N = design_.N();
  const int k = loss_.k;
  const int m = design_.m();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(design_.p());
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd t = design_.apply(i, u) - c_.row(i).transpose();
    int y_index = -1;
    for (size_t yi = 0; yi < loss_.response_support.size(); ++yi)
      if (loss_.response_support[yi] == Y[size_t(i)]) y_index = int(yi);
    if (y_index < 0) throw std::invalid_argument("ResidualProcess::xi: response out of support");
    for (int j = 0; j < k; ++j) {
      const double d = dev_phi(i, j, t, y_index);
      out.segment(std::int64_t(j) * m, m) += d * design_.X.row(i).transpose();
    }
  }
  return out;
}

double ResidualProcess::decomposition_gap(int i, const Eigen::VectorXd& u, int y) const {
  const Eigen::VectorXd t = design_.apply(i, u) - c_.row(i).transpose();
  int y_index = -1;
  for (size_t yi = 0; yi < loss_.response_support.size(); ++yi)
    if (loss_.response_support[yi] == y) y_index = int(yi);
  if (y_index < 0) throw std::invalid_argument("decomposition_gap: response out of support");
  const Eigen::VectorXd cu = c_.row(i).transpose() + t;
  double lhs = loss_.value(cu, y) - loss_.value(c_.row(i).transpose(), y);
  double rhs = 0.0;
  for (int j = 0; j < loss_.k; ++j)
    rhs += (grad_at_c_[size_t(y_index)](i, j) + phi(i, j, t, y_index)) * t[j];
  return lhs - rhs;
}

namespace {

struct GridTables {
  // diff(g)(i, y) = gamma(Z_i u_g, y) - gamma(Z_i theta, y); ediff its mean
  std::vector<Eigen::MatrixXd> diff;
  std::vector<Eigen::VectorXd> ediff;  // per g: length N
  // phi(g)(i, j*Y + y) and ephi(g)(i, j)
  std::vector<Eigen::MatrixXd> phi;
  std::vector<Eigen::MatrixXd> ephi;
  Eigen::MatrixXd probs;     // N x Y response law at theta
  Eigen::MatrixXd cdf;       // N x Y cumulative law for sampling
  std::vector<double> l1d;   // ||u_g - theta||_1
};

GridTables build_tables(const ResidualProcess& rp, const std::vector<Eigen::VectorXd>& grid,
                        bool with_phi) {
  const auto& loss = rp.loss();
  const auto& design = rp.design();
  const int N = design.N();
  const int k = loss.k;
  const int nY = int(loss.response_support.size());
  const int G = int(grid.size());

  GridTables tb;
  tb.probs.resize(N, nY);
  tb.cdf.resize(N, nY);
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd ci = design.apply(i, rp.theta());
    double acc = 0.0;
    for (int y = 0; y < nY; ++y) {
      tb.probs(i, y) = loss.response_prob(ci, loss.response_support[size_t(y)]);
      acc += tb.probs(i, y);
      tb.cdf(i, y) = acc;
    }
  }
  tb.diff.resize(static_cast<size_t>(G));
  tb.ediff.resize(static_cast<size_t>(G));
  if (with_phi) {
    tb.phi.resize(static_cast<size_t>(G));
    tb.ephi.resize(static_cast<size_t>(G));
  }
  tb.l1d.resize(static_cast<size_t>(G));
  for (int g = 0; g < G; ++g) {
    tb.l1d[size_t(g)] = (grid[size_t(g)] - rp.theta()).lpNorm<1>();
    auto& D = tb.diff[size_t(g)];
    D.resize(N, nY);
    tb.ediff[size_t(g)].resize(N);
    Eigen::MatrixXd* P = with_phi ? &tb.phi[size_t(g)] : nullptr;
    if (with_phi) {
      P->resize(N, k * nY);
      tb.ephi[size_t(g)].resize(N, k);
    }
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd ci = design.apply(i, rp.theta());
      const Eigen::VectorXd t = design.apply(i, grid[size_t(g)]) - ci;
      double e = 0.0;
      for (int y = 0; y < nY; ++y) {
        const int yy = loss.response_support[size_t(y)];
        D(i, y) = loss.value(ci + t, yy) - loss.value(ci, yy);
        e += tb.probs(i, y) * D(i, y);
      }
      tb.ediff[size_t(g)][i] = e;
      if (with_phi) {
        for (int j = 0; j < k; ++j) {
          double ep = 0.0;
          for (int y = 0; y < nY; ++y) {
            const double ph = rp.phi(i, j, t, y);
            (*P)(i, j * nY + y) = ph;
            ep += tb.probs(i, y) * ph;
          }
          tb.ephi[size_t(g)](i, j) = ep;
        }
      }
    }
  }
  return tb;
}

void sample_from_cdf(const Eigen::MatrixXd& cdf, CounterRng& rng, std::vector<int>& y_idx) {
  const int N = int(cdf.rows());
  const int nY = int(cdf.cols());
  for (int i = 0; i < N; ++i) {
    const double v = rng.uniform01();
    int pick = nY - 1;
    for (int y = 0; y < nY; ++y)
      if (v < cdf(i, y)) {
        pick = y;
        break;
      }
    y_idx[size_t(i)] = pick;
  }
}

double quantile_sorted(std::vector<double> v, double level) {
  std::sort(v.begin(), v.end());
  const double pos = level * double(v.size());
  size_t idx = size_t(std::ceil(pos));
  if (idx > 0) --idx;
  if (idx >= v.size()) idx = v.size() - 1;
  return v[idx];
}

}  // namespace

TailVerifyResult verify_local_tail(const LossFamily& loss, const DesignSet& design,
                                   const Eigen::VectorXd& theta, const BoxDomain& domain,
                                   const std::vector<Eigen::VectorXd>& grid, double q,
                                   long long replicates, std::uint64_t seed) {
  if (!loss.discrete()) throw std::invalid_argument("verify_local_tail: discrete loss required");
  if (grid.empty() || grid.size() > 512)
    throw std::invalid_argument("verify_local_tail: grid must have 1..512 points");
  ResidualProcess rp(loss, design, theta);
  const auto consts =
      local_lip_constants(loss.F1, loss.F2, design.M_Z, domain.l1_diameter(), loss.k);
  const auto stats = ColumnStats::from_design(design);
  const double threshold = tail_threshold(stats, consts, q);

  const GridTables tb = build_tables(rp, grid, /*with_phi=*/true);
  const int N = design.N();
  const int k = loss.k;
  const int m = design.m();
  const int nY = int(loss.response_support.size());
  const int G = int(grid.size());

  std::vector<double> sups(static_cast<size_t>(replicates));
  parallel_for(replicates, [&](std::int64_t b, std::int64_t e) {
    std::vector<int> y_idx(static_cast<size_t>(N));
    Eigen::VectorXd dev(N);
    Eigen::VectorXd block(m);
    for (std::int64_t r = b; r < e; ++r) {
      CounterRng rng(seed, std::uint64_t(r));
      sample_from_cdf(tb.cdf, rng, y_idx);
      double sup = 0.0;
      for (int g = 0; g < G; ++g) {
        for (int j = 0; j < k; ++j) {
          for (int i = 0; i < N; ++i)
            dev[i] = tb.phi[size_t(g)](i, j * nY + y_idx[size_t(i)]) - tb.ephi[size_t(g)](i, j);
          block.noalias() = design.X.transpose() * dev;
          sup = std::max(sup, block.lpNorm<Eigen::Infinity>());
        }
      }
      sups[size_t(r)] = sup;
    }
  });

  TailVerifyResult out;
  long long cnt = 0;
  for (double s : sups) cnt += exceeds(s, threshold);
  const auto ms = mean_se(sups);
  out.mean_sup = ms.mean;
  out.verdict.seed = seed;
  out.verdict.replicates = replicates;
  out.verdict.lhs = ms.mean;
  out.verdict.lhs_se = ms.se;
  out.verdict.rhs = threshold;
  out.verdict.exceedance = double(cnt) / double(replicates);
  out.verdict.exceedance_allowed = binomial_allowance(q, replicates);
  out.verdict.pass = out.verdict.exceedance <= out.verdict.exceedance_allowed;
  out.verdict.detail = "grid sup is a lower bound for the domain sup (necessary condition)";
  out.sups = std::move(sups);
  return out;
}

namespace {

LipVerifyResult lip_verify_impl(const LossFamily& loss, const DesignSet& design,
                                const Eigen::VectorXd& theta, const BoxDomain& domain,
                                const std::vector<Eigen::VectorXd>& grid, double q,
                                double q_prime, long long replicates, std::uint64_t seed,
                                bool global) {
  if (!loss.discrete()) throw std::invalid_argument("verify_lip: discrete loss required");
  if (grid.empty() || grid.size() > 512)
    throw std::invalid_argument("verify_lip: grid must have 1..512 points");
  ResidualProcess rp(loss, design, theta);
  const auto consts =
      global ? global_lip_constants(loss.F1, loss.F2, design.M_Z, domain.l1_diameter(), loss.k)
             : local_lip_constants(loss.F1, loss.F2, design.M_Z, domain.l1_diameter(), loss.k);
  const auto stats = ColumnStats::from_design(design);
  const double threshold = lip_threshold(stats, consts, loss.F1, loss.k, q, q_prime);

  const GridTables tb = build_tables(rp, grid, /*with_phi=*/false);
  const int N = design.N();
  const int G = int(grid.size());

  // pair list: local = (g, theta); global = all grid pairs
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> pair_dist;
  if (global) {
    for (int a = 0; a < G; ++a)
      for (int b = a + 1; b < G; ++b) {
        const double d = (grid[size_t(a)] - grid[size_t(b)]).lpNorm<1>();
        if (d > 1e-12) {
          pairs.emplace_back(a, b);
          pair_dist.push_back(d);
        }
      }
  } else {
    for (int g = 0; g < G; ++g)
      if (tb.l1d[size_t(g)] > 1e-12) {
        pairs.emplace_back(g, -1);
        pair_dist.push_back(tb.l1d[size_t(g)]);
      }
  }
  if (pairs.empty()) throw std::invalid_argument("verify_lip: grid has no usable points");

  std::vector<double> sups(static_cast<size_t>(replicates));
  parallel_for(replicates, [&](std::int64_t b, std::int64_t e) {
    std::vector<int> y_idx(static_cast<size_t>(N));
    std::vector<double> dev_sum(static_cast<size_t>(G));
    for (std::int64_t r = b; r < e; ++r) {
      CounterRng rng(seed, std::uint64_t(r));
      sample_from_cdf(tb.cdf, rng, y_idx);
      for (int g = 0; g < G; ++g) {
        double s = 0.0;
        const auto& D = tb.diff[size_t(g)];
        const auto& E = tb.ediff[size_t(g)];
        for (int i = 0; i < N; ++i) s += D(i, y_idx[size_t(i)]) - E[i];
        dev_sum[size_t(g)] = s;
      }
      double sup = 0.0;
      for (size_t pi = 0; pi < pairs.size(); ++pi) {
        const double da = dev_sum[size_t(pairs[pi].first)];
        const double db = pairs[pi].second < 0 ? 0.0 : dev_sum[size_t(pairs[pi].second)];
        sup = std::max(sup, std::abs(da - db) / pair_dist[pi]);
      }
      sups[size_t(r)] = sup;
    }
  });

  LipVerifyResult out;
  long long cnt = 0;
  for (double s : sups) cnt += exceeds(s, threshold);
  const auto ms = mean_se(sups);
  out.mean_sup = ms.mean;
  out.quantile_level = 1.0 - q - q_prime;
  out.empirical_Mq = quantile_sorted(sups, out.quantile_level);
  out.verdict.seed = seed;
  out.verdict.replicates = replicates;
  out.verdict.lhs = ms.mean;
  out.verdict.lhs_se = ms.se;
  out.verdict.rhs = threshold;
  out.verdict.exceedance = double(cnt) / double(replicates);
  out.verdict.exceedance_allowed = binomial_allowance(q + q_prime, replicates);
  out.verdict.pass = out.verdict.exceedance <= out.verdict.exceedance_allowed;
  out.verdict.detail = "grid sup is a lower bound for the domain sup (necessary condition)";
  out.sups = std::move(sups);
  return out;
}

}  // namespace

LipVerifyResult verify_local_lip(const LossFamily& loss, const DesignSet& design,
                                 const Eigen::VectorXd& theta, const BoxDomain& domain,
                                 const std::vector<Eigen::VectorXd>& grid, double q,
                                 double q_prime, long long replicates, std::uint64_t seed) {
  return lip_verify_impl(loss, design, theta, domain, grid, q, q_prime, replicates, seed,
                         /*global=*/false);
}

LipVerifyResult verify_global_lip(const LossFamily& loss, const DesignSet& design,
                                  const Eigen::VectorXd& theta, const BoxDomain& domain,
                                  const std::vector<Eigen::VectorXd>& grid, double q,
                                  double q_prime, long long replicates, std::uint64_t seed) {
  return lip_verify_impl(loss, design, theta, domain, grid, q, q_prime, replicates, seed,
                         /*global=*/true);
}

}  // namespace multilasso
