#include <doctest.h>

#include <cmath>

#include "multilasso/diagnostics.hpp"
#include "multilasso/rng.hpp"

using namespace multilasso;

TEST_CASE("sigma_Xl hand values") {
  Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK(sigma_Xl(I2, 1) == doctest::Approx(1.0));

  Eigen::MatrixXd X(3, 2);
  X << 3, 0, 4, 0, 0, 1;
  CHECK(sigma_Xl(X, 1) == doctest::Approx(5.0));

  // l = m equals the full spectral norm
  CounterRng rng(8);
  Eigen::MatrixXd R(6, 4);
  for (int i = 0; i < 6; ++i)
    for (int h = 0; h < 4; ++h) R(i, h) = rng.normal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
  CHECK(sigma_Xl(R, 4) == doctest::Approx(svd.singularValues()[0]).epsilon(1e-10));

  // nondecreasing in l, and at least the max column norm
  double prev = 0.0;
  for (int l = 1; l <= 4; ++l) {
    const double s = sigma_Xl(R, l);
    CHECK(s >= prev - 1e-12);
    prev = s;
  }
  double colmax = 0.0;
  for (int h = 0; h < 4; ++h) colmax = std::max(colmax, R.col(h).norm());
  CHECK(sigma_Xl(R, 1) == doctest::Approx(colmax).epsilon(1e-12));

  CHECK_THROWS(sigma_Xl(R, 5));
  CHECK_THROWS(sigma_Xl(R, 2, /*cap=*/3));
}

TEST_CASE("kappa_RE on an orthogonal design is essentially one") {
  // X^T X = N I  =>  ||Xv||_2 = sqrt(N) ||v||_2 >= sqrt(N) ||pi_J v||_2
  const int N = 16, m = 4;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(N, m);
  for (int h = 0; h < m; ++h)
    for (int i = 0; i < N; ++i) X(i, h) = (i % m == h ? 2.0 : 0.0);
  const auto est = kappa_RE(X, 1, 3.0, 20000, 5);
  CHECK(est.kappa_hat >= 1.0 - 1e-6);
  CHECK(est.kappa_hat <= 1.0 + 1e-6);
  // witness satisfies the cone constraint and reproduces kappa_hat
  double l1_on = 0.0, l1_off = 0.0, l2_on = 0.0;
  std::vector<char> on(m, 0);
  for (int h : est.witness_J) on[size_t(h)] = 1;
  for (int h = 0; h < m; ++h) {
    if (on[size_t(h)]) {
      l1_on += std::abs(est.witness_v[h]);
      l2_on += est.witness_v[h] * est.witness_v[h];
    } else {
      l1_off += std::abs(est.witness_v[h]);
    }
  }
  CHECK(l1_off <= 3.0 * l1_on + 1e-9);
  CHECK(int(est.witness_J.size()) <= 1);
  const double recomputed = (X * est.witness_v).norm() / (std::sqrt(double(N)) * std::sqrt(l2_on));
  CHECK(std::abs(recomputed - est.kappa_hat) <= 1e-10);
}

TEST_CASE("duplicated column collapses kappa to zero") {
  CounterRng rng(33);
  const int N = 12, m = 4;
  Eigen::MatrixXd X(N, m);
  for (int i = 0; i < N; ++i)
    for (int h = 0; h < m; ++h) X(i, h) = rng.normal();
  X.col(2) = X.col(0);  // exact duplicate
  const auto est = kappa_RE(X, 1, 50.0, 40000, 7);
  CHECK(est.kappa_hat <= 1e-3);
  // the oracle direction e_0 - e_2 certifies the exact value 0
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
  v[0] = 1.0;
  v[2] = -1.0;
  CHECK((X * v).norm() == doctest::Approx(0.0));
}

TEST_CASE("kappa scales with the design and shrinks with s and K") {
  CounterRng rng(44);
  const int N = 24, m = 6;
  Eigen::MatrixXd X(N, m);
  for (int i = 0; i < N; ++i)
    for (int h = 0; h < m; ++h) X(i, h) = rng.normal();
  const auto base = kappa_RE(X, 1, 2.0, 20000, 9);
  const auto doubled = kappa_RE(2.0 * X, 1, 2.0, 20000, 9);
  CHECK(doubled.kappa_hat == doctest::Approx(2.0 * base.kappa_hat).epsilon(1e-9));

  for (std::uint64_t seed : {9ULL, 10ULL, 11ULL}) {
    const auto ref = kappa_RE(X, 1, 2.0, 20000, seed);
    const auto wider_cone = kappa_RE(X, 1, 4.0, 20000, seed);
    const auto larger_support = kappa_RE(X, 2, 2.0, 20000, seed);
    CHECK(wider_cone.kappa_hat <= ref.kappa_hat + 1e-9);
    CHECK(larger_support.kappa_hat <= ref.kappa_hat + 1e-9);
  }

  CHECK_THROWS(kappa_RE(X, 1, 1.0, 100, 1));
  CHECK_THROWS(kappa_RE(X, 4, 2.0, 100, 1));
}

TEST_CASE("kappa_RE matches a deterministic fine search on a small design") {
  CounterRng rng(55);
  const int N = 20, m = 5;
  Eigen::MatrixXd X(N, m);
  for (int i = 0; i < N; ++i)
    for (int h = 0; h < m; ++h) X(i, h) = rng.normal() + (i % m == h ? 1.5 : 0.0);
  const int s = 2;
  const double K = 2.0;
  const auto est = kappa_RE(X, s, K, 100000, 123);

  // deterministic oracle: 10^6 seeded cone directions, no descent
  double oracle = std::numeric_limits<double>::infinity();
  for (long long b = 0; b < 1000000; ++b) {
    CounterRng r2(987654321ULL, std::uint64_t(b));
    int j0 = int(r2.uniform_int(m)), j1 = int(r2.uniform_int(m));
    if (j0 == j1) j1 = (j1 + 1) % m;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    v[j0] = r2.normal();
    v[j1] = r2.normal();
    double l1_on = std::abs(v[j0]) + std::abs(v[j1]);
    if (l1_on < 1e-12) continue;
    const double mass = r2.uniform01() * K * l1_on;
    for (int h = 0; h < m; ++h)
      if (h != j0 && h != j1) v[h] = r2.rademacher() * mass * r2.uniform01();
    // rescale off-support if infeasible
    double l1_off = 0.0;
    for (int h = 0; h < m; ++h)
      if (h != j0 && h != j1) l1_off += std::abs(v[h]);
    if (l1_off > K * l1_on)
      for (int h = 0; h < m; ++h)
        if (h != j0 && h != j1) v[h] *= K * l1_on / l1_off;
    const double pj2 = v[j0] * v[j0] + v[j1] * v[j1];
    oracle = std::min(oracle, (X * v).norm() / std::sqrt(double(N) * pj2));
  }
  CHECK(est.kappa_hat <= oracle * 1.02);
  CHECK(est.kappa_hat >= oracle * 0.7);  // descent may find a better (smaller) point
}

TEST_CASE("support stats") {
  Eigen::VectorXd u(6);
  u << 0, 1, 3, 0, 2, 0;
  ParamVector pv(u, 2);
  const auto s = support_stats(pv);
  CHECK(s.S == 2);
  CHECK(s.block_supports[0] == (std::vector<int>{1, 2}));
  CHECK(s.block_supports[1] == (std::vector<int>{1}));

  ParamVector zero(Eigen::VectorXd::Zero(4), 2);
  CHECK(support_stats(zero).S == 0);

  // permuting within a block leaves S unchanged
  Eigen::VectorXd v(6);
  v << 1, 0, 3, 2, 0, 0;
  CHECK(support_stats(ParamVector(v, 2)).S == 2);
}
