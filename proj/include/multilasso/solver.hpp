#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "multilasso/model.hpp"
#include "multilasso/theory.hpp"

namespace multilasso {

struct SolverOptions {
  int max_iters = 10000;
  double tol_kkt = 1e-7;
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  std::optional<Eigen::VectorXd> init_point;  // default: box center
};

struct SolveResult {
  Eigen::VectorXd theta_hat;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool objective_monotone = true;
};

// Exact minimizer of 1/2 (x - v)^2 + tau_lambda |x| over [lo_h, hi_h],
// coordinatewise: clamp(soft(v_h, tau_lambda), lo_h, hi_h).
Eigen::VectorXd prox_l1_box(const Eigen::VectorXd& v, double tau_lambda,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

// Smooth part: returns f(u); fills *grad when non-null.
using Objective = std::function<double(const Eigen::VectorXd& u, Eigen::VectorXd* grad)>;

// Proximal gradient with backtracking on the quadratic upper-bound condition
// for min_u f(u) + lambda ||u||_1 over the box. Stops when the unit-step
// fixed-point residual ||u - prox(u - grad f(u), lambda)||_inf falls below
// tol_kkt. For non-convex f the result is a stationary point.
SolveResult solve(const Objective& f, double lambda, const BoxDomain& domain,
                  const SolverOptions& opts = {});

// Same, keeping the best of `restarts` extra runs from seeded random interior
// starting points. Restart r uses stream r of the seed; runs execute on the
// worker pool, so the objective must be safe to call concurrently (the
// built-in objectives are pure).
SolveResult solve_with_restarts(const Objective& f, double lambda, const BoxDomain& domain,
                                const SolverOptions& opts, int restarts, std::uint64_t seed);

struct MultiLassoFit {
  SolveResult result;
  LassoTuning tuning;
  BoundReport error_bound;
};

// Tunes lambda, solves the penalized multi-combination loss, and attaches the
// l2-squared error level evaluated at the given sparsity S and sigma_XS.
MultiLassoFit fit_multi_lasso(const LossFamily& loss, const DesignSet& design,
                              const std::vector<int>& Y, double K, double M_q, double kappa,
                              double C_gamma, const BoxDomain& domain, long long S,
                              double sigma_XS, const SolverOptions& opts = {});

}  // namespace multilasso
