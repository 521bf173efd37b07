#include "multilasso/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "multilasso/parallel.hpp"
#include "multilasso/rng.hpp"

namespace multilasso {

namespace {

long long choose(int m, int l) {
  long long c = 1;
  for (int i = 1; i <= l; ++i) {
    c = c * (m - l + i) / i;
    if (c < 0 || c > (1LL << 62)) return 1LL << 62;
  }
  return c;
}

}  // namespace

double sigma_Xl(const Eigen::MatrixXd& X, int l, long long enumeration_cap) {
  const int m = int(X.cols());
  if (l < 1 || l > m) throw std::invalid_argument("sigma_Xl: need 1 <= l <= m");
  if (choose(m, l) > enumeration_cap)
    throw std::invalid_argument("sigma_Xl: C(m,l) exceeds the enumeration cap");

  const Eigen::MatrixXd gram = X.transpose() * X;
  std::vector<int> J(l);
  for (int i = 0; i < l; ++i) J[i] = i;
  double best = 0.0;
  Eigen::MatrixXd sub(l, l);
  for (;;) {
    for (int a = 0; a < l; ++a)
      for (int b = 0; b < l; ++b) sub(a, b) = gram(J[a], J[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub, Eigen::EigenvaluesOnly);
    best = std::max(best, es.eigenvalues().maxCoeff());
    // next combination in lexicographic order
    int i = l - 1;
    while (i >= 0 && J[i] == m - l + i) --i;
    if (i < 0) break;
    ++J[i];
    for (int j = i + 1; j < l; ++j) J[j] = J[j - 1] + 1;
  }
  return std::sqrt(std::max(best, 0.0));
}

namespace {

struct Candidate {
  double ratio = std::numeric_limits<double>::infinity();
  Eigen::VectorXd v;
  std::vector<int> J;
  long long sample_index = -1;  // deterministic tie-break
};

double cone_ratio(const Eigen::MatrixXd& X, const Eigen::VectorXd& v,
                  const std::vector<int>& J) {
  double pj2 = 0.0;
  for (int h : J) pj2 += v[h] * v[h];
  if (pj2 <= 0.0) return std::numeric_limits<double>::infinity();
  return (X * v).norm() / (std::sqrt(double(X.rows())) * std::sqrt(pj2));
}

// shrink off-support mass if the cone constraint is violated
void enforce_cone(Eigen::VectorXd& v, const std::vector<int>& J, double K) {
  const int m = int(v.size());
  std::vector<char> on(m, 0);
  for (int h : J) on[h] = 1;
  double l1_on = 0.0, l1_off = 0.0;
  for (int h = 0; h < m; ++h) (on[h] ? l1_on : l1_off) += std::abs(v[h]);
  if (l1_off <= K * l1_on || l1_off == 0.0) return;
  const double scale = K * l1_on / l1_off;
  for (int h = 0; h < m; ++h)
    if (!on[h]) v[h] *= scale;
}

Candidate refine(const Eigen::MatrixXd& X, Candidate c, double K, int iters) {
  const double N = double(X.rows());
  const Eigen::MatrixXd gram = X.transpose() * X;
  const int m = int(X.cols());
  std::vector<char> on(m, 0);
  for (int h : c.J) on[h] = 1;
  double step = 0.5;
  for (int it = 0; it < iters; ++it) {
    double pj2 = 0.0;
    for (int h : c.J) pj2 += c.v[h] * c.v[h];
    if (pj2 < 1e-24) break;
    const double num = (X * c.v).squaredNorm();
    const double q = num / (N * pj2);
    Eigen::VectorXd g = gram * c.v;
    for (int h : c.J) g[h] -= q * N * c.v[h];
    g *= 2.0 / (N * pj2);
    const double gn = g.norm();
    if (gn < 1e-15) break;
    bool moved = false;
    while (step > 1e-12) {
      Eigen::VectorXd w = c.v - (step / gn) * g;
      enforce_cone(w, c.J, K);
      const double r = cone_ratio(X, w, c.J);
      if (r < c.ratio) {
        c.v = w / w.norm();
        c.ratio = cone_ratio(X, c.v, c.J);
        moved = true;
        step = std::min(step * 2.0, 1.0);
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return c;
}

}  // namespace

REEstimate kappa_RE(const Eigen::MatrixXd& X, int s, double K, long long budget,
                    std::uint64_t seed) {
  const int m = int(X.cols());
  if (!(K > 1.0)) throw std::invalid_argument("kappa_RE: K must be > 1");
  if (s < 1 || 2 * s > m) throw std::invalid_argument("kappa_RE: need 1 <= s <= m/2");
  if (budget < 1) throw std::invalid_argument("kappa_RE: budget must be >= 1");

  // budget partitioned across workers; each sample draws from its own stream
  // (seed, index), and pools merge by (ratio, index), so the outcome does not
  // depend on the partition
  const size_t pool_cap = 10;
  const int workers = std::max(1, thread_count());
  std::vector<std::vector<Candidate>> pools(static_cast<size_t>(workers));
  const long long chunk = (budget + workers - 1) / workers;
  parallel_for(workers, [&](std::int64_t wb, std::int64_t we) {
    for (std::int64_t w = wb; w < we; ++w) {
      auto& pool = pools[size_t(w)];
      std::vector<int> idx(static_cast<size_t>(m));
      const long long lo = w * chunk;
      const long long hi = std::min(budget, lo + chunk);
      for (long long b = lo; b < hi; ++b) {
        CounterRng rng(seed, std::uint64_t(b));
        // support: partial Fisher-Yates
        for (int i = 0; i < m; ++i) idx[size_t(i)] = i;
        for (int i = 0; i < s; ++i)
          std::swap(idx[size_t(i)], idx[size_t(i) + rng.uniform_int(m - i)]);
        Candidate c;
        c.sample_index = b;
        c.J.assign(idx.begin(), idx.begin() + s);
        std::sort(c.J.begin(), c.J.end());
        c.v = Eigen::VectorXd::Zero(m);
        double n2 = 0.0;
        for (int h : c.J) {
          c.v[h] = rng.normal();
          n2 += c.v[h] * c.v[h];
        }
        if (n2 < 1e-300) continue;
        double l1_on = 0.0;
        for (int h : c.J) {
          c.v[h] /= std::sqrt(n2);
          l1_on += std::abs(c.v[h]);
        }
        // off-support l1 mass on the cone boundary region, spread over a few coords
        const double mass = rng.uniform01() * K * l1_on;
        if (m > s && mass > 0.0) {
          const int spread = 1 + int(rng.uniform_int(std::min(m - s, 8)));
          std::vector<double> wgt(static_cast<size_t>(spread));
          double wsum = 0.0;
          for (int i = 0; i < spread; ++i) {
            wgt[size_t(i)] = -std::log(std::max(rng.uniform01(), 1e-300));
            wsum += wgt[size_t(i)];
          }
          for (int i = 0; i < spread; ++i) {
            const int off = int(rng.uniform_int(m - s));
            c.v[idx[size_t(s + off)]] += rng.rademacher() * mass * wgt[size_t(i)] / wsum;
          }
        }
        enforce_cone(c.v, c.J, K);
        c.ratio = cone_ratio(X, c.v, c.J);
        if (!std::isfinite(c.ratio)) continue;
        pool.push_back(std::move(c));
        std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b2) {
          return a.ratio != b2.ratio ? a.ratio < b2.ratio : a.sample_index < b2.sample_index;
        });
        if (pool.size() > pool_cap) pool.pop_back();
      }
    }
  });
  std::vector<Candidate> best_pool;
  for (auto& pool : pools)
    for (auto& c : pool) best_pool.push_back(std::move(c));
  std::sort(best_pool.begin(), best_pool.end(), [](const Candidate& a, const Candidate& b2) {
    return a.ratio != b2.ratio ? a.ratio < b2.ratio : a.sample_index < b2.sample_index;
  });
  if (best_pool.size() > pool_cap) best_pool.resize(pool_cap);
  if (best_pool.empty()) throw std::runtime_error("kappa_RE: no feasible sample drawn");

  REEstimate est;
  est.samples_used = budget;
  Candidate best = best_pool.front();
  est.method = "random_search";
  for (const auto& c : best_pool) {
    Candidate r = refine(X, c, K, 200);
    if (r.ratio < best.ratio) {
      best = r;
      est.method = "descent_refined";
    }
  }
  est.kappa_hat = cone_ratio(X, best.v, best.J);  // recompute from the witness
  est.witness_v = best.v;
  est.witness_J = best.J;
  return est;
}

SupportStats support_stats(const ParamVector& theta) {
  SupportStats s;
  s.block_supports = theta.block_supports();
  for (const auto& b : s.block_supports) s.S = std::max<int>(s.S, int(b.size()));
  return s;
}

}  // namespace multilasso
