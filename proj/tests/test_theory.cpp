#include <doctest.h>

#include <cmath>

#include "multilasso/rng.hpp"
#include "multilasso/theory.hpp"

using namespace multilasso;

TEST_CASE("beta values and monotonicity") {
  CHECK(beta_k(1) == 2);
  CHECK(beta_k(2) == 8);
  CHECK(beta_k(3) == 28);
  for (int k = 1; k < 20; ++k) CHECK(beta_k(k + 1) > beta_k(k));
  CHECK_THROWS(beta_k(0));
}

TEST_CASE("local constants by direct substitution") {
  const auto c = local_lip_constants(1, 1, 1, 8, 2);
  CHECK(c.phi == doctest::Approx(2.0));
  CHECK(c.psi == doctest::Approx(16.0));
  CHECK(c.A == doctest::Approx(1024.0));
  CHECK(c.B == doctest::Approx(4.0));
  CHECK(c.C == doctest::Approx(32.0));

  // linear loss: no residual term
  const auto lin = local_lip_constants(1, 0, 1, 8, 2);
  CHECK(lin.phi == 0.0);
  CHECK(lin.psi == 0.0);
  CHECK(lin.A == 0.0);
  CHECK(lin.B == 0.0);
  CHECK(lin.C == 0.0);

  // point domain
  const auto pt = local_lip_constants(1, 1, 1, 0, 2);
  CHECK(pt.phi == 0.0);
  CHECK(pt.A == 0.0);

  // min resolved the other way: 2 F1 <= F2 M_Z R_D
  const auto small = local_lip_constants(0.5, 10, 1, 8, 2);
  CHECK(small.phi == doctest::Approx(1.0));  // M_Z * 2 F1
}

TEST_CASE("global constants use the doubled comparison index") {
  const auto c = global_lip_constants(1, 1, 1, 8, 1);
  CHECK(c.phi == doctest::Approx(2.0));   // 2 min(1, 8)
  CHECK(c.psi == doctest::Approx(16.0));  // 2 * beta_2 = 2 * 8
  const auto z = global_lip_constants(0, 0, 0, 0, 3);
  CHECK(z.phi == 0.0);
  CHECK(z.psi == 0.0);
  CHECK(z.A == 0.0);
}

TEST_CASE("column stats for block designs") {
  Eigen::MatrixXd X(2, 3);
  X << 1, 2, 0, 2, 0, 1;
  DesignSet d(X, 2);
  const auto s = ColumnStats::from_design(d);
  // column squared sums of X: (5, 4, 1)
  CHECK(s.max_h_total() == doctest::Approx(5.0));
  CHECK(s.sum_j_max_h() == doctest::Approx(10.0));
  // generic route agrees
  std::vector<Eigen::MatrixXd> Z;
  for (int i = 0; i < 2; ++i) {
    Eigen::MatrixXd Zi = Eigen::MatrixXd::Zero(2, 6);
    Zi.block(0, 0, 1, 3) = X.row(i);
    Zi.block(1, 3, 1, 3) = X.row(i);
    Z.push_back(Zi);
  }
  const auto s2 = ColumnStats::from_matrices(Z);
  CHECK(s2.max_h_total() == doctest::Approx(s.max_h_total()));
  CHECK(s2.sum_j_max_h() == doctest::Approx(s.sum_j_max_h()));
}

TEST_CASE("tail threshold hand value and monotonicity in q") {
  // p = 1, q = 1/e, A = 0, B = C = 1, max_h sum Z^2 = 1 -> 1 + 1 = 2
  ColumnStats s;
  s.col_sq = Eigen::MatrixXd::Constant(1, 1, 1.0);
  LipConstants c;
  c.A = 0;
  c.B = 1;
  c.C = 1;
  CHECK(tail_threshold(s, c, std::exp(-1.0)) == doctest::Approx(2.0).epsilon(1e-12));

  c.A = 0.3;
  CHECK(tail_threshold(s, c, 0.05) > tail_threshold(s, c, 0.1));
  LipConstants zero;
  CHECK(tail_threshold(s, zero, 0.1) == 0.0);
  CHECK_THROWS(tail_threshold(s, c, 0.0));
  CHECK_THROWS(tail_threshold(s, c, 1.0));
}

TEST_CASE("lip threshold: zero case, scaling, split validity") {
  ColumnStats s;
  s.col_sq = Eigen::MatrixXd::Constant(2, 4, 0.5);
  LipConstants zero;
  CHECK(lip_threshold(s, zero, 0.0, 2, 0.05, 0.05) == 0.0);

  // doubling all design entries quadruples column sums, doubling sqrt terms
  const auto c = local_lip_constants(1, 1, 1, 4, 2);
  ColumnStats s4 = s;
  s4.col_sq *= 4.0;
  const double t1 = tail_threshold(s, LipConstants{0, 0, c.A, c.B, 0}, 0.1);
  const double t2 = tail_threshold(s4, LipConstants{0, 0, c.A, c.B, 0}, 0.1);
  CHECK(t2 == doctest::Approx(2.0 * t1).epsilon(1e-12));

  CHECK_THROWS(lip_threshold(s, c, 1.0, 2, 0.6, 0.5));
}

TEST_CASE("lasso tuning and error bound hand values") {
  const auto t = lasso_tuning(3, 10, 100, 1, 1);
  CHECK(t.lambda == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(t.L_N == doctest::Approx(0.3).epsilon(1e-15));
  const auto t0 = lasso_tuning(3, 0, 100, 1, 1);
  CHECK(t0.lambda == 0.0);
  CHECK(t0.L_N == 0.0);
  CHECK_THROWS(lasso_tuning(1, 10, 100, 1, 1));
  CHECK_THROWS(lasso_tuning(3, 10, 100, 0, 1));
  CHECK_THROWS(lasso_tuning(3, 10, 100, 1, 0));

  CHECK(lasso_error_bound(1, 3, 0.3, 2, 100, 1, 1) == doctest::Approx(1.98).epsilon(1e-12));
  CHECK(lasso_error_bound(2, 3, 0.3, 2, 100, 1, 1) == doctest::Approx(11.304).epsilon(1e-12));
  // sigma_XS = 0 removes the isometry inflation
  CHECK(lasso_error_bound(2, 3, 0.3, 2, 100, 1, 0) ==
        doctest::Approx(2 * 0.09 * 2 * 31.0).epsilon(1e-12));
}

TEST_CASE("mean max bound") {
  CHECK(mean_max_bound(1, 2, 3, 1) == doctest::Approx(6.0));
  CHECK(mean_max_bound(5, 0, 0, 10) == doctest::Approx(5.0));
  CHECK(mean_max_bound(0, 1, 1, std::exp(1.0)) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS(mean_max_bound(1, 1, 1, 0.5));
}

TEST_CASE("massart bound") {
  std::vector<Eigen::VectorXd> A;
  A.push_back(Eigen::Vector2d(1, 0));
  A.push_back(Eigen::Vector2d(0, 1));
  CHECK(massart_bound(A) == doctest::Approx(std::sqrt(2.0 * std::log(4.0))).epsilon(1e-12));
  std::vector<Eigen::VectorXd> Z{Eigen::Vector3d::Zero()};
  CHECK(massart_bound(Z) == 0.0);
  // scaling the set scales the bound
  std::vector<Eigen::VectorXd> A2;
  for (const auto& a : A) A2.push_back(3.0 * a);
  CHECK(massart_bound(A2) == doctest::Approx(3.0 * massart_bound(A)).epsilon(1e-12));
  CHECK_THROWS(massart_bound({}));
}

TEST_CASE("rho and hidden constants") {
  CHECK(rho(0.0) == 0.0);
  CHECK(rho(1.0) == doctest::Approx(std::log(2.0) - 1.0).epsilon(1e-12));
  CHECK(rho(-0.5) == doctest::Approx(2.0 * std::log(0.5) / -1.0 - 1.0).epsilon(1e-12));
  // strictly decreasing on a scan
  double prev = rho(-0.9);
  for (double z = -0.8; z < 4.0; z += 0.1) {
    CHECK(rho(z) < prev);
    prev = rho(z);
  }
  // series branch is continuous with the direct branch
  CHECK(rho(1e-8) == doctest::Approx(rho(1.0000001e-8)).epsilon(1e-6));
  // derivative matches finite differences
  for (double z : {-0.5, -0.1, 0.3, 1.0, 2.5}) {
    const double fd = (rho(z + 1e-6) - rho(z - 1e-6)) / 2e-6;
    CHECK(rho_prime(z) == doctest::Approx(fd).epsilon(1e-5));
  }

  const auto c = hidden_constants(1, 1, 1, 2, 1, 4);
  CHECK(c.I_lo == doctest::Approx(0.5));
  CHECK(c.I_hi == doctest::Approx(2.0));
  // rho0 = max(|rho(-0.5)|, |rho(1)|) = 2 ln 2 - 1
  CHECK(c.rho0 == doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-14));
  // dense-grid oracle agrees to grid accuracy
  double grid_sup = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    const double t = 0.5 + 1.5 * i / 100000.0;
    grid_sup = std::max(grid_sup, std::abs(rho(t - 1.0)));
  }
  CHECK(c.rho0 == doctest::Approx(grid_sup).epsilon(1e-12));
  // rho1 covers the dense-grid derivative sup with its 1% margin
  double dsup = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    const double t = 0.5 + 1.5 * i / 100000.0;
    dsup = std::max(dsup, std::abs(rho_prime(t - 1.0)));
  }
  CHECK(c.rho1 >= dsup);
  CHECK(c.rho1 <= 1.011 * dsup);

  CHECK(hidden_constants(2, 1, 1, 2, 1, 4).psi1 == doctest::Approx(2.0));
  CHECK_THROWS(hidden_constants(1, 1, 0, 2, 1, 4));
  CHECK_THROWS(hidden_constants(1, 1, 2, 2, 1, 4));
}

TEST_CASE("hidden lip threshold: zeros and monotonicity") {
  const auto c = hidden_constants(1, 1, 1, 2, 1, 4);
  HiddenConstants zero = c;
  zero.psi1 = zero.psi2 = zero.psi3 = zero.psi4 = zero.psi5 = zero.psi6 = 0.0;
  CHECK(hidden_lip_threshold(zero, 1, 4, 10, 50, 6, 0.05, 0.05) == 0.0);
  const double base = hidden_lip_threshold(c, 1, 4, 10, 50, 6, 0.05, 0.05);
  CHECK(hidden_lip_threshold(c, 1, 4, 10, 200, 6, 0.05, 0.05) > base);
  CHECK(hidden_lip_threshold(c, 1, 4, 10, 50, 6, 0.01, 0.05) > base);
  CHECK_THROWS(hidden_lip_threshold(c, 1, 4, 10, 50, 6, 0.6, 0.5));
}

TEST_CASE("hidden proposition error bound") {
  const auto b = prop_hidden_error(3, 1, 1, 1);
  CHECK(b.lambda == doctest::Approx(3.0));
  CHECK(b.value == doctest::Approx(4.0 * std::sqrt(6.0)).epsilon(1e-12));
  CHECK(prop_hidden_error(3, 0, 1, 1).value == 0.0);
  // scales as sqrt(S)
  CHECK(prop_hidden_error(3, 1, 4, 1).value ==
        doctest::Approx(2.0 * prop_hidden_error(3, 1, 1, 1).value).epsilon(1e-12));
  CHECK_THROWS(prop_hidden_error(1, 1, 1, 1));
  CHECK_THROWS(prop_hidden_error(3, 1, 1, 0));
}

TEST_CASE("threshold evaluators are monotone in the driving constants") {
  CounterRng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const double F1 = rng.uniform(0.1, 2.0);
    const double F2 = rng.uniform(0.1, 2.0);
    const double MZ = rng.uniform(0.1, 2.0);
    const double RD = rng.uniform(0.1, 4.0);
    const int k = 1 + int(rng.uniform_int(3));
    ColumnStats s;
    s.col_sq = Eigen::MatrixXd::Constant(k, 4 * k, rng.uniform(0.2, 2.0));
    const double q = rng.uniform(0.02, 0.3), qp = rng.uniform(0.02, 0.3);
    const double base = lip_threshold(s, local_lip_constants(F1, F2, MZ, RD, k), F1, k, q, qp);
    const double bumped =
        lip_threshold(s, local_lip_constants(F1 * 1.3, F2 * 1.2, MZ * 1.1, RD * 1.4, k),
                      F1 * 1.3, k, q, qp);
    CHECK(bumped >= base - 1e-12);
    const double smaller_q =
        lip_threshold(s, local_lip_constants(F1, F2, MZ, RD, k), F1, k, q * 0.5, qp * 0.5);
    CHECK(smaller_q >= base - 1e-12);
  }
}
