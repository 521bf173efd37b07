#include "multilasso/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace multilasso {

double ColumnStats::max_h_total() const {
  double best = 0.0;
  for (int h = 0; h < p(); ++h) best = std::max(best, col_sq.col(h).sum());
  return best;
}

double ColumnStats::sum_j_max_h() const {
  double s = 0.0;
  for (int j = 0; j < k(); ++j) s += col_sq.row(j).maxCoeff();
  return s;
}

ColumnStats ColumnStats::from_design(const DesignSet& design) {
  // Z_ijh = X_i,h-(j-1)m on block j, zero elsewhere
  const int k = design.k, m = design.m(), p = design.p();
  Eigen::VectorXd colsq = design.X.array().square().colwise().sum();
  ColumnStats s;
  s.col_sq = Eigen::MatrixXd::Zero(k, p);
  for (int j = 0; j < k; ++j) s.col_sq.row(j).segment(std::int64_t(j) * m, m) = colsq;
  return s;
}

ColumnStats ColumnStats::from_matrices(const std::vector<Eigen::MatrixXd>& Z) {
  if (Z.empty()) throw std::invalid_argument("ColumnStats: empty matrix list");
  ColumnStats s;
  s.col_sq = Eigen::MatrixXd::Zero(Z.front().rows(), Z.front().cols());
  for (const auto& Zi : Z) {
    if (Zi.rows() != s.col_sq.rows() || Zi.cols() != s.col_sq.cols())
      throw std::invalid_argument("ColumnStats: ragged matrix list");
    s.col_sq += Zi.array().square().matrix();
  }
  return s;
}

long long beta_k(int k) {
  if (k < 1) throw std::invalid_argument("beta_k: k must be >= 1");
  if (k > 38) throw std::invalid_argument("beta_k: k too large for exact integer arithmetic");
  long long p3 = 1, p2 = 1;
  for (int i = 0; i < k - 1; ++i) p3 *= 3;
  for (int i = 0; i < k; ++i) p2 *= 2;
  return 3 * p3 + p3 - p2;
}

namespace {
void check_nonneg(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(name) + " must be finite and >= 0");
}
}  // namespace

LipConstants local_lip_constants(double F1, double F2, double M_Z, double R_D, int k) {
  check_nonneg(F1, "F1");
  check_nonneg(F2, "F2");
  check_nonneg(M_Z, "M_Z");
  check_nonneg(R_D, "R_D");
  if (k < 1) throw std::invalid_argument("local_lip_constants: k must be >= 1");
  LipConstants c;
  c.phi = M_Z * std::min(2.0 * F1, F2 * M_Z * R_D);
  c.psi = double(k) * double(beta_k(k)) * M_Z * F2;
  c.A = 4.0 * std::sqrt(2.0 * k) * R_D * c.psi;
  c.B = std::sqrt(2.0 * k) * c.phi;
  c.C = 8.0 * k * c.phi;
  return c;
}

LipConstants global_lip_constants(double F1, double F2, double M_Z, double R_D, int k) {
  check_nonneg(F1, "F1");
  check_nonneg(F2, "F2");
  check_nonneg(M_Z, "M_Z");
  check_nonneg(R_D, "R_D");
  if (k < 1) throw std::invalid_argument("global_lip_constants: k must be >= 1");
  LipConstants c;
  c.phi = 2.0 * M_Z * std::min(F1, F2 * M_Z * R_D);
  c.psi = 2.0 * k * double(beta_k(2 * k)) * M_Z * F2;
  c.A = 4.0 * std::sqrt(2.0 * k) * R_D * c.psi;
  c.B = std::sqrt(2.0 * k) * c.phi;
  c.C = 8.0 * k * c.phi;
  return c;
}

double tail_threshold(const ColumnStats& stats, const LipConstants& c, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("tail_threshold: q must be in (0,1)");
  const double p = double(stats.p());
  return c.A * std::sqrt(std::log(2.0 * p) * stats.sum_j_max_h()) +
         c.B * std::sqrt(std::log(p / q) * stats.max_h_total()) + c.C * std::log(p / q);
}

double lip_threshold(const ColumnStats& stats, const LipConstants& c, double F1, int k,
                     double q, double q_prime) {
  if (!(q > 0.0 && q < 1.0) || !(q_prime > 0.0 && q_prime < 1.0))
    throw std::invalid_argument("lip_threshold: q and q' must be in (0,1)");
  if (q + q_prime >= 1.0) throw std::invalid_argument("lip_threshold: q + q' must be < 1");
  const double p = double(stats.p());
  return std::sqrt(2.0 * k) * F1 *
             std::sqrt(std::log(2.0 * p / q_prime) * stats.max_h_total()) +
         tail_threshold(stats, c, q);
}

LassoTuning lasso_tuning(double K, double M_q, long long N, double kappa, double C_gamma) {
  if (!(K > 1.0)) throw std::invalid_argument("lasso_tuning: K must be > 1");
  check_nonneg(M_q, "M_q");
  if (N < 1) throw std::invalid_argument("lasso_tuning: N must be >= 1");
  if (!(kappa > 0.0)) throw std::invalid_argument("lasso_tuning: kappa must be > 0");
  if (!(C_gamma > 0.0)) throw std::invalid_argument("lasso_tuning: C_gamma must be > 0");
  LassoTuning t;
  t.lambda = (K + 1.0) * M_q / (K - 1.0);
  t.L_N = 2.0 * M_q * K / (double(N) * kappa * kappa * C_gamma * (K - 1.0));
  return t;
}

double lasso_error_bound(int k, double K, double L_N, long long S, long long N, double kappa,
                         double sigma_XS) {
  if (k < 1) throw std::invalid_argument("lasso_error_bound: k must be >= 1");
  if (S < 1) throw std::invalid_argument("lasso_error_bound: S must be >= 1");
  const double nk2 = double(N) * kappa * kappa;
  double bracket = 2.0 + K * K;
  if (k > 1) bracket += 2.0 * (1.0 + K * K) * (nk2 + sigma_XS * sigma_XS * k) / nk2;
  return double(k) * L_N * L_N * double(S) * bracket;
}

double mean_max_bound(double a, double b, double c, double d) {
  check_nonneg(a, "a");
  check_nonneg(b, "b");
  check_nonneg(c, "c");
  if (!(d >= 1.0)) throw std::invalid_argument("mean_max_bound: d must be >= 1");
  const double ld = std::log(d);
  return a + b * (std::sqrt(ld) + 1.0) + c * (ld + 1.0);
}

double massart_bound(const std::vector<Eigen::VectorXd>& A) {
  if (A.empty()) throw std::invalid_argument("massart_bound: empty vector set");
  double mx = 0.0;
  for (const auto& a : A) mx = std::max(mx, a.norm());
  return mx * std::sqrt(2.0 * std::log(2.0 * double(A.size())));
}

double rho(double z) {
  if (z <= -1.0) throw std::invalid_argument("rho: z must be > -1");
  if (std::abs(z) < 1e-8) return -z / 2.0 + z * z / 3.0;  // series, avoids 0/0
  return std::log1p(z) / z - 1.0;
}

double rho_prime(double z) {
  if (z <= -1.0) throw std::invalid_argument("rho_prime: z must be > -1");
  if (std::abs(z) < 1e-6) return -0.5 + 2.0 * z / 3.0 - 0.75 * z * z;
  return (z / (1.0 + z) - std::log1p(z)) / (z * z);
}

HiddenConstants hidden_constants(double F1, double F2, double A_g, double B_g, double M_X,
                                 double R_D) {
  if (!(A_g > 0.0) || !(A_g < B_g))
    throw std::invalid_argument("hidden_constants: requires 0 < A_g < B_g");
  check_nonneg(F1, "F1");
  check_nonneg(F2, "F2");
  check_nonneg(M_X, "M_X");
  check_nonneg(R_D, "R_D");
  HiddenConstants c;
  c.I_lo = A_g / B_g;
  c.I_hi = B_g / A_g;
  // rho decreases through 0 on I_g - 1, so |rho| peaks at an endpoint
  c.rho0 = std::max(std::abs(rho(c.I_lo - 1.0)), std::abs(rho(c.I_hi - 1.0)));
  const int n_grid = 10000;
  double r1 = 0.0;
  for (int i = 0; i <= n_grid; ++i) {
    const double t = c.I_lo + (c.I_hi - c.I_lo) * double(i) / n_grid;
    r1 = std::max(r1, std::abs(rho_prime(t - 1.0)));
  }
  c.rho1 = 1.01 * r1;  // grid sup plus safety margin
  c.psi1 = F1 / A_g;
  c.psi2 = F2 * M_X / (2.0 * A_g);
  c.psi3 = std::min(2.0 * F1, F2 * M_X * R_D / 2.0) / A_g;
  c.psi4 = (c.psi1 * c.rho0 + c.psi3 * (1.0 + c.rho0)) * M_X;
  c.psi5 = 2.0 * c.psi1 * M_X * c.rho1;
  c.psi6 = 2.0 * (c.rho0 + c.psi3 * M_X * c.rho1);
  return c;
}

double hidden_lip_threshold(const HiddenConstants& c, double M_X, double R_D, double E_SX,
                            long long N, long long p, double q0, double q1) {
  if (!(q0 > 0.0 && q0 < 1.0) || !(q1 > 0.0 && q1 < 1.0) || q0 + q1 >= 1.0)
    throw std::invalid_argument("hidden_lip_threshold: need q0, q1 in (0,1), q0 + q1 < 1");
  check_nonneg(E_SX, "E_SX");
  if (N < 0 || p < 1) throw std::invalid_argument("hidden_lip_threshold: bad N or p");
  const double A =
      2.0 * c.psi2 * (1.0 + c.psi6) + (c.psi1 + 2.0 * c.psi2 * R_D + 2.0 * c.psi3) * (c.psi5 + c.psi6);
  const double pp = double(p);
  return 2.0 * std::sqrt(2.0) * R_D * E_SX *
             (A * std::sqrt(std::log(2.0 * pp)) + 2.0 * c.psi3 * (c.psi5 + c.psi6)) +
         std::sqrt(2.0 * double(N)) *
             (c.psi1 * M_X * std::sqrt(std::log(2.0 * pp / q0)) +
              2.0 * c.psi4 * std::sqrt(std::log(pp / q1)));
}

HiddenErrorBound prop_hidden_error(double K, double M_q, long long S, double C_ell) {
  if (!(K > 1.0)) throw std::invalid_argument("prop_hidden_error: K must be > 1");
  if (!(C_ell > 0.0)) throw std::invalid_argument("prop_hidden_error: C_ell must be > 0");
  if (S < 1) throw std::invalid_argument("prop_hidden_error: S must be >= 1");
  check_nonneg(M_q, "M_q");
  HiddenErrorBound b;
  b.lambda = K * M_q;
  const double r = (K + 1.0) / (K - 1.0);
  b.value = std::sqrt(2.0 + r * r) * (K + 1.0) * M_q * std::sqrt(double(S)) / C_ell;
  return b;
}

BoundReport report_beta(int k) {
  BoundReport r;
  r.name = "beta";
  r.inputs["k"] = double(k);
  r.value = double(beta_k(k));
  r.formula = "3^k + 3^(k-1) - 2^k";
  return r;
}

namespace {
BoundReport lip_constants_report(const char* name, const LipConstants& c, double F1, double F2,
                                 double M_Z, double R_D, int k) {
  BoundReport r;
  r.name = name;
  r.inputs = {{"F1", F1}, {"F2", F2}, {"M_Z", M_Z}, {"R_D", R_D}, {"k", double(k)},
              {"phi", c.phi}, {"psi", c.psi}, {"A", c.A}, {"B", c.B}, {"C", c.C}};
  r.value = c.A;
  return r;
}
}  // namespace

BoundReport report_local_lip_constants(double F1, double F2, double M_Z, double R_D, int k) {
  auto r = lip_constants_report("local_lip_constants",
                                local_lip_constants(F1, F2, M_Z, R_D, k), F1, F2, M_Z, R_D, k);
  r.formula =
      "phi = M_Z min(2F1, F2 M_Z R_D); psi = k beta_k M_Z F2; "
      "A = 4 sqrt(2k) R_D psi; B = sqrt(2k) phi; C = 8k phi";
  return r;
}

BoundReport report_global_lip_constants(double F1, double F2, double M_Z, double R_D, int k) {
  auto r = lip_constants_report("global_lip_constants",
                                global_lip_constants(F1, F2, M_Z, R_D, k), F1, F2, M_Z, R_D, k);
  r.formula =
      "phi = 2 M_Z min(F1, F2 M_Z R_D); psi = 2k beta_2k M_Z F2; "
      "A = 4 sqrt(2k) R_D psi; B = sqrt(2k) phi; C = 8k phi";
  return r;
}

BoundReport report_tail_threshold(const ColumnStats& stats, const LipConstants& c, double q,
                                  bool global) {
  BoundReport r;
  r.name = global ? "global_tail_threshold" : "local_tail_threshold";
  r.inputs = {{"A", c.A},
              {"B", c.B},
              {"C", c.C},
              {"p", double(stats.p())},
              {"q", q},
              {"sum_j_max_h_colsq", stats.sum_j_max_h()},
              {"max_h_total_colsq", stats.max_h_total()}};
  r.value = tail_threshold(stats, c, q);
  r.formula =
      "A sqrt(ln(2p) sum_j max_h sum_i Z^2) + B sqrt(ln(p/q) max_h sum_ij Z^2) + C ln(p/q)";
  return r;
}

BoundReport report_lip_threshold(const ColumnStats& stats, const LipConstants& c, double F1,
                                 int k, double q, double q_prime, bool global) {
  BoundReport r;
  r.name = global ? "global_lip_threshold" : "local_lip_threshold";
  r.inputs = {{"A", c.A},
              {"B", c.B},
              {"C", c.C},
              {"F1", F1},
              {"k", double(k)},
              {"p", double(stats.p())},
              {"q", q},
              {"q_prime", q_prime},
              {"sum_j_max_h_colsq", stats.sum_j_max_h()},
              {"max_h_total_colsq", stats.max_h_total()}};
  r.value = lip_threshold(stats, c, F1, k, q, q_prime);
  r.formula =
      "sqrt(2k) F1 sqrt(ln(2p/q') max_h sum_ij Z^2) + tail threshold at level q";
  return r;
}

BoundReport report_lasso_tuning(double K, double M_q, long long N, double kappa,
                                double C_gamma) {
  const auto t = lasso_tuning(K, M_q, N, kappa, C_gamma);
  BoundReport r;
  r.name = "lasso_tuning";
  r.inputs = {{"K", K},         {"M_q", M_q},           {"N", double(N)},
              {"kappa", kappa}, {"C_gamma", C_gamma},   {"lambda", t.lambda},
              {"L_N", t.L_N}};
  r.value = t.lambda;
  r.formula = "lambda = (K+1) M_q/(K-1); L_N = 2 M_q K/(N kappa^2 C_gamma (K-1))";
  return r;
}

BoundReport report_lasso_error_bound(int k, double K, double L_N, long long S, long long N,
                                     double kappa, double sigma_XS) {
  BoundReport r;
  r.name = "lasso_error_bound";
  r.inputs = {{"k", double(k)}, {"K", K},           {"L_N", L_N},
              {"S", double(S)}, {"N", double(N)},   {"kappa", kappa},
              {"sigma_XS", sigma_XS}};
  r.value = lasso_error_bound(k, K, L_N, S, N, kappa, sigma_XS);
  r.formula =
      "k L_N^2 S [2 + K^2 + 2(1+K^2)(N kappa^2 + sigma_XS^2 k)/(N kappa^2) 1{k>1}]";
  return r;
}

BoundReport report_mean_max_bound(double a, double b, double c, double d) {
  BoundReport r;
  r.name = "mean_max_bound";
  r.inputs = {{"a", a}, {"b", b}, {"c", c}, {"d", d}};
  r.value = mean_max_bound(a, b, c, d);
  r.formula = "a + b (sqrt(ln d) + 1) + c (ln d + 1)";
  return r;
}

BoundReport report_massart_bound(const std::vector<Eigen::VectorXd>& A) {
  BoundReport r;
  r.name = "massart_bound";
  double mx = 0.0;
  for (const auto& a : A) mx = std::max(mx, a.norm());
  r.inputs = {{"set_size", double(A.size())}, {"max_l2_norm", mx}};
  r.value = massart_bound(A);
  r.formula = "max_a ||a||_2 sqrt(2 ln(2 |A|))";
  return r;
}

BoundReport report_hidden_constants(double F1, double F2, double A_g, double B_g, double M_X,
                                    double R_D) {
  const auto c = hidden_constants(F1, F2, A_g, B_g, M_X, R_D);
  BoundReport r;
  r.name = "hidden_constants";
  r.inputs = {{"F1", F1},       {"F2", F2},       {"A_g", A_g},     {"B_g", B_g},
              {"M_X", M_X},     {"R_D", R_D},     {"I_lo", c.I_lo}, {"I_hi", c.I_hi},
              {"rho0", c.rho0}, {"rho1", c.rho1}, {"psi1", c.psi1}, {"psi2", c.psi2},
              {"psi3", c.psi3}, {"psi4", c.psi4}, {"psi5", c.psi5}, {"psi6", c.psi6}};
  r.value = c.rho0;
  r.formula =
      "rho0 = sup_I |rho(t-1)|; rho1 = sup_I |rho'(t-1)| (grid + 1% margin); "
      "psi1 = F1/A_g; psi2 = F2 M_X/(2A_g); psi3 = min(2F1, F2 M_X R_D/2)/A_g; "
      "psi4 = [psi1 rho0 + psi3(1+rho0)] M_X; psi5 = 2 psi1 M_X rho1; "
      "psi6 = 2(rho0 + psi3 M_X rho1)";
  return r;
}

BoundReport report_hidden_lip_threshold(const HiddenConstants& c, double M_X, double R_D,
                                        double E_SX, long long N, long long p, double q0,
                                        double q1) {
  BoundReport r;
  r.name = "hidden_lip_threshold";
  r.inputs = {{"M_X", M_X},     {"R_D", R_D},     {"E_SX", E_SX},   {"N", double(N)},
              {"p", double(p)}, {"q0", q0},       {"q1", q1},       {"rho0", c.rho0},
              {"rho1", c.rho1}, {"psi1", c.psi1}, {"psi2", c.psi2}, {"psi3", c.psi3},
              {"psi4", c.psi4}, {"psi5", c.psi5}, {"psi6", c.psi6}};
  r.value = hidden_lip_threshold(c, M_X, R_D, E_SX, N, p, q0, q1);
  r.formula =
      "2 sqrt(2) R_D E_SX (A sqrt(ln 2p) + 2 psi3(psi5+psi6)) + sqrt(2N)(psi1 M_X "
      "sqrt(ln(2p/q0)) + 2 psi4 sqrt(ln(p/q1))), A = 2 psi2(1+psi6) + (psi1 + 2 psi2 R_D + "
      "2 psi3)(psi5+psi6)";
  return r;
}

BoundReport report_prop_hidden_error(double K, double M_q, long long S, double C_ell) {
  const auto b = prop_hidden_error(K, M_q, S, C_ell);
  BoundReport r;
  r.name = "prop_hidden_error";
  r.inputs = {{"K", K},           {"M_q", M_q},       {"S", double(S)},
              {"C_ell", C_ell},   {"lambda", b.lambda}};
  r.value = b.value;
  r.formula = "sqrt(2 + (K+1)^2/(K-1)^2) (K+1) M_q sqrt(S) / C_ell; lambda = K M_q";
  return r;
}

}  // namespace multilasso
