#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "multilasso/model.hpp"

namespace multilasso {

// A named bound or threshold with every input that entered the formula.
struct BoundReport {
  std::string name;
  std::map<std::string, double> inputs;
  double value = 0.0;
  std::string formula;
};

// Column aggregates of the stacked k x p matrices Z_1..Z_N used by the tail
// thresholds: col_sq(j,h) = sum_i Z_ijh^2.
struct ColumnStats {
  Eigen::MatrixXd col_sq;  // k x p

  int k() const { return int(col_sq.rows()); }
  int p() const { return int(col_sq.cols()); }
  // max_h sum_{i,j} Z_ijh^2
  double max_h_total() const;
  // sum_j max_h sum_i Z_ijh^2
  double sum_j_max_h() const;

  static ColumnStats from_design(const DesignSet& design);
  static ColumnStats from_matrices(const std::vector<Eigen::MatrixXd>& Z);
};

// 3^k + 3^{k-1} - 2^k, the multivariate comparison constant.
long long beta_k(int k);

struct LipConstants {
  double phi = 0.0;
  double psi = 0.0;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
};

// phi = M_Z min(2 F1, F2 M_Z R_D), psi = k beta_k M_Z F2,
// A = 4 sqrt(2k) R_D psi, B = sqrt(2k) phi, C = 8k phi.
LipConstants local_lip_constants(double F1, double F2, double M_Z, double R_D, int k);

// Barred variant: phi = 2 M_Z min(F1, F2 M_Z R_D), psi = 2k beta_{2k} M_Z F2,
// A = 4 sqrt(2k) R_D psi, B = sqrt(2k) phi, C = 8k phi.
LipConstants global_lip_constants(double F1, double F2, double M_Z, double R_D, int k);

// A sqrt(ln(2p) sum_j max_h sum_i Z^2) + B sqrt(ln(p/q) max_h sum_ij Z^2)
// + C ln(p/q); the residual-process sup-norm tail level at q.
double tail_threshold(const ColumnStats& stats, const LipConstants& c, double q);

// Adds sqrt(2k) F1 sqrt(ln(2p/q') max_h sum_ij Z^2) on top of
// tail_threshold(q): the (1 - q - q')-confidence level for the local (or
// global, with barred constants) stochastic Lipschitz coefficient.
double lip_threshold(const ColumnStats& stats, const LipConstants& c, double F1, int k,
                     double q, double q_prime);

struct LassoTuning {
  double lambda = 0.0;
  double L_N = 0.0;
};

// lambda = (K+1) M_q / (K-1); L_N = 2 M_q K / (N kappa^2 C_gamma (K-1)).
LassoTuning lasso_tuning(double K, double M_q, long long N, double kappa, double C_gamma);

// k L_N^2 S [2 + K^2 + 2 (1+K^2)(N kappa^2 + sigma_XS^2 k) / (N kappa^2) 1{k>1}],
// the l2-squared error level of the block Lasso.
double lasso_error_bound(int k, double K, double L_N, long long S, long long N, double kappa,
                         double sigma_XS);

// a + b (sqrt(ln d) + 1) + c (ln d + 1): mean bound implied by the tail
// P{xi > a + b sqrt(s) + c s} <= d e^{-s}.
double mean_max_bound(double a, double b, double c, double d);

// max_a ||a||_2 * sqrt(2 ln(2 |A|)): expected maximum of sign-randomized dot
// products over a finite vector set.
double massart_bound(const std::vector<Eigen::VectorXd>& A);

// rho(z) = z^{-1} ln(1+z) - 1 (0 at z = 0); smooth, strictly decreasing on
// (-1, inf). Used by the hidden-model constants.
double rho(double z);
double rho_prime(double z);

struct HiddenConstants {
  double I_lo = 0.0, I_hi = 0.0;  // I_g = [A_g/B_g, B_g/A_g]
  double rho0 = 0.0, rho1 = 0.0;
  double psi1 = 0.0, psi2 = 0.0, psi3 = 0.0, psi4 = 0.0, psi5 = 0.0, psi6 = 0.0;
};

// rho0 = sup_{t in I_g} |rho(t-1)| (endpoint evaluation; |rho| is largest at
// an endpoint since rho decreases through 0), rho1 = sup |rho'(t-1)| by a
// 10^4-point grid with a 1% safety margin, then
//   psi1 = F1/A_g, psi2 = F2 M_X/(2 A_g), psi3 = min(2F1, F2 M_X R_D/2)/A_g,
//   psi4 = [psi1 rho0 + psi3 (1+rho0)] M_X, psi5 = 2 psi1 M_X rho1,
//   psi6 = 2 (rho0 + psi3 M_X rho1).
HiddenConstants hidden_constants(double F1, double F2, double A_g, double B_g, double M_X,
                                 double R_D);

// 2 sqrt(2) R_D E_SX (A sqrt(ln 2p) + 2 psi3 (psi5+psi6))
//   + sqrt(2N) (psi1 M_X sqrt(ln(2p/q0)) + 2 psi4 sqrt(ln(p/q1))),
// with A = 2 psi2 (1+psi6) + (psi1 + 2 psi2 R_D + 2 psi3)(psi5+psi6);
// the (1 - q0 - q1)-level for the hidden-likelihood Lipschitz coefficient.
double hidden_lip_threshold(const HiddenConstants& c, double M_X, double R_D, double E_SX,
                            long long N, long long p, double q0, double q1);

struct HiddenErrorBound {
  double lambda = 0.0;  // K * M_q
  double value = 0.0;   // sqrt(2 + (K+1)^2/(K-1)^2) (K+1) M_q sqrt(S) / C_ell
};

HiddenErrorBound prop_hidden_error(double K, double M_q, long long S, double C_ell);

// Report builders used by the CLI and serialization tests.
BoundReport report_beta(int k);
BoundReport report_local_lip_constants(double F1, double F2, double M_Z, double R_D, int k);
BoundReport report_global_lip_constants(double F1, double F2, double M_Z, double R_D, int k);
BoundReport report_tail_threshold(const ColumnStats& stats, const LipConstants& c, double q,
                                  bool global);
BoundReport report_lip_threshold(const ColumnStats& stats, const LipConstants& c, double F1,
                                 int k, double q, double q_prime, bool global);
BoundReport report_lasso_tuning(double K, double M_q, long long N, double kappa,
                                double C_gamma);
BoundReport report_lasso_error_bound(int k, double K, double L_N, long long S, long long N,
                                     double kappa, double sigma_XS);
BoundReport report_mean_max_bound(double a, double b, double c, double d);
BoundReport report_massart_bound(const std::vector<Eigen::VectorXd>& A);
BoundReport report_hidden_constants(double F1, double F2, double A_g, double B_g, double M_X,
                                    double R_D);
BoundReport report_hidden_lip_threshold(const HiddenConstants& c, double M_X, double R_D,
                                        double E_SX, long long N, long long p, double q0,
                                        double q1);
BoundReport report_prop_hidden_error(double K, double M_q, long long S, double C_ell);

}  // namespace multilasso
