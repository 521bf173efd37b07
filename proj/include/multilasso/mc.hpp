#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "multilasso/model.hpp"
#include "multilasso/theory.hpp"

namespace multilasso {

// One test function h: R^k -> R with its declared sup-norm Lipschitz
// constant. `vanishing` marks the stronger property h(t) = 0 whenever some
// coordinate t_j = 0 (required by the G-form comparison); the l1-form only
// needs h(0) = 0.
struct TestFunction {
  std::function<double(const Eigen::VectorXd&)> h;
  double M = 1.0;
  bool vanishing = false;
};
using TestFunctionFamily = std::vector<TestFunction>;

// M * prod_j tanh(t_j): vanishing, (M, l_inf)-Lipschitz.
TestFunction tanh_product(double M, int k);
// M * tanh(mean(t)): maps 0 to 0 but does not vanish on axes.
TestFunction tanh_mean(double M, int k);

enum class GTransform { Identity, Relu, Exp };
double apply_G(GTransform g, double scale, double x);

struct MCVerdict {
  double lhs = 0.0, lhs_se = 0.0;
  double rhs = 0.0, rhs_se = 0.0;  // comparison rhs, or tail threshold
  long long replicates = 0;
  bool exact = false;  // exhaustive sign enumeration instead of sampling
  bool pass = false;
  std::uint64_t seed = 0;
  double exceedance = 0.0;          // tail verdicts: observed frequency
  double exceedance_allowed = 0.0;  // nominal level + 3 binomial SE
  std::string detail;
};

// Index sets T subset (R^k)^N are passed as one N x k matrix per point.
using IndexSet = std::vector<Eigen::MatrixXd>;

// E G(sup_T sum_i eps_i h_i(t_i)) <= E G(sup_T sum_{i,j} M_i eps_ij t_ij)
// for vanishing families. Exact enumeration of all sign patterns when
// N*k <= 20, Monte Carlo with lhs <= rhs + 3 SE otherwise.
MCVerdict verify_multivariate_contraction(const TestFunctionFamily& family, const IndexSet& T,
                                          GTransform G, double g_scale, long long replicates,
                                          std::uint64_t seed, bool force_sampling = false);

// E sup_T |sum_i eps_i h_i(t_i)| <= beta_k sum_j E sup_{T_j} |sum_i eps_i M_i s_i|
// for families with h_i(0) = 0.
MCVerdict verify_l1_comparison(const TestFunctionFamily& family, const IndexSet& T,
                               long long replicates, std::uint64_t seed,
                               bool force_sampling = false);

// E sup_grid |sum_i eps_i f_i(gamma_i(u))| <= 2 M E sup_grid |sum_i eps_i gamma_i(u)|
// for univariate f_i with f_i(0) = 0, all M-Lipschitz. gamma_values(g, i) is
// gamma_i evaluated at grid point g.
MCVerdict verify_univariate_contraction(const Eigen::MatrixXd& gamma_values,
                                        const std::vector<std::function<double(double)>>& f,
                                        double M, long long replicates, std::uint64_t seed,
                                        bool force_sampling = false);

// Exact (N <= 20) or sampled E max_{a in A} |sum_i eps_i a_i| against
// massart_bound(A).
MCVerdict verify_massart(const std::vector<Eigen::VectorXd>& A, long long replicates,
                         std::uint64_t seed, bool force_sampling = false);

// Independent bounded process f_i(u) = coeff(i, g) * B_i over a finite index
// grid, with B_i i.i.d. centered multipliers.
struct BoundedProcess {
  enum class Mult { Rademacher, Uniform };  // Uniform = U[-1, 1]
  Eigen::MatrixXd coeff;                    // N x G
  Mult mult = Mult::Rademacher;

  double mult_bound() const { return 1.0; }
  double mult_var() const { return mult == Mult::Rademacher ? 1.0 : 1.0 / 3.0; }
};

struct ConcentrationRow {
  double s = 0.0;
  double threshold = 0.0;
  double freq = 0.0;
  double allowed = 0.0;  // e^{-s} + 3 binomial SE
  bool pass = false;
};

struct ConcentrationVerdict {
  double EW_hat = 0.0, EW_se = 0.0;
  std::vector<ConcentrationRow> deviation_rows;   // W >= EW + sqrt(2 s sum (b-a)^2)
  std::vector<ConcentrationRow> bernstein_rows;   // W >= 2 EW + S sqrt(2s) + 4 M s
  bool pass = false;
  long long replicates = 0;
  std::uint64_t seed = 0;
  std::vector<double> W;  // per-replicate suprema
};

// Empirical exceedance of both tail inequalities for W = sup_g |sum_i f_i(g)|
// at each s in s_grid; E W comes from an independent pilot batch whose SE
// must stay below 1% of the process range.
ConcentrationVerdict verify_functional_concentration(const BoundedProcess& proc,
                                                     const std::vector<double>& s_grid,
                                                     long long pilot_replicates,
                                                     long long replicates,
                                                     std::uint64_t seed);

// Exact first-order remainder of the loss increment around theta:
//   gamma(Z_i u, y) - gamma(Z_i theta, y) = sum_j (d_j f_i(c_i) + phi_ij(t_i)) t_ij
// with t_i = Z_i (u - theta) and the remainder coefficients phi_ij built from
// difference quotients (derivative form when the increment coordinate
// vanishes). Centered over the discrete response law these drive the process
// xi(u) whose sup-norm the tail theorem controls.
class ResidualProcess {
 public:
  ResidualProcess(LossFamily loss, DesignSet design, Eigen::VectorXd theta);

  double phi(int i, int j, const Eigen::VectorXd& s, int y) const;
  // phi minus its exact expectation over the response law at Z_i theta
  double dev_phi(int i, int j, const Eigen::VectorXd& s, int y_obs) const;
  Eigen::VectorXd xi(const Eigen::VectorXd& u, const std::vector<int>& Y) const;
  // decomposition identity residual (should vanish to numerical precision)
  double decomposition_gap(int i, const Eigen::VectorXd& u, int y) const;

  const Eigen::VectorXd& theta() const { return theta_; }
  const DesignSet& design() const { return design_; }
  const LossFamily& loss() const { return loss_; }

 private:
  LossFamily loss_;
  DesignSet design_;
  Eigen::VectorXd theta_;
  Eigen::MatrixXd c_;                        // N x k rows Z_i theta
  std::vector<Eigen::MatrixXd> grad_at_c_;   // per response y: N x k rows grad gamma(c_i, y)
};

struct TailVerifyResult {
  MCVerdict verdict;
  double mean_sup = 0.0;
  std::vector<double> sups;  // per-replicate grid suprema
};

// Per replicate draws responses at theta and compares the grid supremum of
// ||xi(u)||_inf to the closed-form tail threshold at level q. The grid sup
// lower-bounds the continuous sup, so the check is a necessary condition.
TailVerifyResult verify_local_tail(const LossFamily& loss, const DesignSet& design,
                                   const Eigen::VectorXd& theta, const BoxDomain& domain,
                                   const std::vector<Eigen::VectorXd>& grid, double q,
                                   long long replicates, std::uint64_t seed);

struct LipVerifyResult {
  MCVerdict verdict;
  double empirical_Mq = 0.0;  // (1 - q - q') sample quantile of the sups
  double quantile_level = 0.0;
  double mean_sup = 0.0;
  std::vector<double> sups;
};

// Local stochastic Lipschitz coefficient at theta over the grid, against the
// (1 - q - q') closed-form level. Grid points at theta are excluded. The
// observed quantile doubles as an empirical M_q for the Lasso tuning.
LipVerifyResult verify_local_lip(const LossFamily& loss, const DesignSet& design,
                                 const Eigen::VectorXd& theta, const BoxDomain& domain,
                                 const std::vector<Eigen::VectorXd>& grid, double q,
                                 double q_prime, long long replicates, std::uint64_t seed);

// Same over grid pairs u != v with the barred (two-sided) constants.
LipVerifyResult verify_global_lip(const LossFamily& loss, const DesignSet& design,
                                  const Eigen::VectorXd& theta, const BoxDomain& domain,
                                  const std::vector<Eigen::VectorXd>& grid, double q,
                                  double q_prime, long long replicates, std::uint64_t seed);

}  // namespace multilasso
