#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "multilasso/diagnostics.hpp"
#include "multilasso/mc.hpp"
#include "multilasso/model.hpp"
#include "multilasso/solver.hpp"

namespace multilasso {

// One full Lasso experiment: design generation, restricted-eigenvalue and
// quadratic-lower-bound diagnostics, empirical or fixed M_q, tuning, and
// repeated sample -> fit -> error-vs-bound comparison.
struct E2EConfig {
  int m = 6;
  int k = 2;
  int N = 50;
  int S = 1;                        // per-block sparsity of the generated theta
  std::string design = "gaussian";  // "gaussian" or "orthogonalized"
  std::uint64_t design_seed = 1;
  std::optional<Eigen::VectorXd> theta;  // generated when absent
  double theta_magnitude = 0.8;
  double box_halfwidth = 1.0;
  double q = 0.1;
  double K = 3.0;
  // M_q: fixed value, or empirical (1-q)-quantile from a pilot run
  std::optional<double> M_q_fixed;
  long long Mq_pilot_replicates = 2000;
  int Mq_grid_points = 256;
  std::uint64_t Mq_grid_seed = 2;
  int C_gamma_grid_size = 5;
  int kappa_s = 0;  // 0 => 2S
  long long kappa_budget = 20000;
  int kappa_seeds = 5;
  long long replicates = 100;
  std::uint64_t seed = 3;
  SolverOptions solver;
};

struct E2EReport {
  Eigen::VectorXd theta;
  std::vector<double> kappa_estimates;
  double kappa_used = 0.0;
  double sigma_XS = 0.0;
  double C_gamma = 0.0;
  double M_q = 0.0;
  double lambda = 0.0;
  double L_N = 0.0;
  double bound = 0.0;
  std::vector<double> sq_errors;  // per replicate ||theta_hat - theta||_2^2
  double fraction_within_bound = 0.0;
  long long solver_iterations_total = 0;
  bool all_monotone = true;
};

Eigen::MatrixXd make_design_matrix(int N, int m, const std::string& kind, std::uint64_t seed);

E2EReport run_e2e_lasso(const E2EConfig& cfg);

}  // namespace multilasso
