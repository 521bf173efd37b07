#include "multilasso/solver.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "multilasso/parallel.hpp"
#include "multilasso/rng.hpp"

namespace multilasso {

Eigen::VectorXd prox_l1_box(const Eigen::VectorXd& v, double tau_lambda,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (v.size() != lo.size() || v.size() != hi.size())
    throw std::invalid_argument("prox_l1_box: dimension mismatch");
  if (!(tau_lambda >= 0.0)) throw std::invalid_argument("prox_l1_box: tau_lambda must be >= 0");
  Eigen::VectorXd out(v.size());
  for (int h = 0; h < v.size(); ++h) {
    if (!(lo[h] <= hi[h])) throw std::invalid_argument("prox_l1_box: lo > hi");
    const double soft = std::copysign(std::max(std::abs(v[h]) - tau_lambda, 0.0), v[h]);
    out[h] = std::min(std::max(soft, lo[h]), hi[h]);
  }
  return out;
}

namespace {

double l1(const Eigen::VectorXd& v) { return v.lpNorm<1>(); }

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::runtime_error(std::string("solve: non-finite ") + what);
}

}  // namespace

SolveResult solve(const Objective& f, double lambda, const BoxDomain& domain,
                  const SolverOptions& opts) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("solve: lambda must be >= 0");
  if (!(opts.tol_kkt > 0.0)) throw std::invalid_argument("solve: tol_kkt must be > 0");
  if (!(opts.backtrack_factor > 0.0 && opts.backtrack_factor < 1.0))
    throw std::invalid_argument("solve: backtrack_factor must be in (0,1)");

  Eigen::VectorXd u = opts.init_point ? domain.project(*opts.init_point) : domain.center();
  Eigen::VectorXd grad(u.size()), grad_next(u.size());
  double fu = f(u, &grad);
  require_finite(fu, "objective");
  require_finite(grad.lpNorm<Eigen::Infinity>(), "gradient");

  SolveResult res;
  res.objective = fu + lambda * l1(u);
  double step = opts.initial_step;

  for (int it = 0; it < opts.max_iters; ++it) {
    res.iterations = it + 1;

    // backtrack until f(u+) <= f(u) + g.(u+ - u) + ||u+ - u||^2 / (2 tau);
    // the step never grows back: once it settles at the curvature scale the
    // iteration is a plain fixed-point map and the residual cannot cycle
    Eigen::VectorXd u_next;
    double f_next = 0.0;
    double tau = step;
    for (;;) {
      u_next = prox_l1_box(u - tau * grad, tau * lambda, domain.lo, domain.hi);
      const Eigen::VectorXd d = u_next - u;
      f_next = f(u_next, nullptr);
      require_finite(f_next, "objective");
      const double quad = fu + grad.dot(d) + d.squaredNorm() / (2.0 * tau);
      // slack at rounding scale only; larger slack lets the step grow near a
      // stationary point and the unit-step residual then cycles
      if (f_next <= quad + 1e-14 * (std::abs(fu) + std::abs(f_next))) break;
      tau *= opts.backtrack_factor;
      if (tau < 1e-18) throw std::runtime_error("solve: backtracking step underflow");
    }
    step = tau;

    const double obj_next = f_next + lambda * l1(u_next);
    if (obj_next > res.objective + 1e-9 * std::max(1.0, std::abs(res.objective)))
      res.objective_monotone = false;
    assert(obj_next <= res.objective + 1e-6 * std::max(1.0, std::abs(res.objective)));

    u = u_next;
    fu = f_next;
    res.objective = obj_next;

    f(u, &grad_next);
    require_finite(grad_next.lpNorm<Eigen::Infinity>(), "gradient");
    grad = grad_next;

    // unit-step fixed-point gap
    const Eigen::VectorXd fp = prox_l1_box(u - grad, lambda, domain.lo, domain.hi);
    res.kkt_residual = (u - fp).lpNorm<Eigen::Infinity>();
    if (res.kkt_residual <= opts.tol_kkt) {
      res.converged = true;
      break;
    }
  }
  res.theta_hat = u;
  return res;
}

SolveResult solve_with_restarts(const Objective& f, double lambda, const BoxDomain& domain,
                                const SolverOptions& opts, int restarts, std::uint64_t seed) {
  // run 0 starts at the configured point (box center by default); the rest at
  // seeded interior draws. Runs are independent, so they go to the workers;
  // the winner is picked by (objective, run index), which keeps the result
  // identical for every thread count.
  std::vector<SolveResult> runs(size_t(restarts) + 1);
  parallel_for(restarts + 1, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      SolverOptions o = opts;
      if (r > 0) o.init_point = domain.sample_point(seed, std::uint64_t(r));
      runs[size_t(r)] = solve(f, lambda, domain, o);
    }
  });
  size_t best = 0;
  for (size_t r = 1; r < runs.size(); ++r)
    if (runs[r].objective < runs[best].objective) best = r;
  return runs[best];
}

MultiLassoFit fit_multi_lasso(const LossFamily& loss, const DesignSet& design,
                              const std::vector<int>& Y, double K, double M_q, double kappa,
                              double C_gamma, const BoxDomain& domain, long long S,
                              double sigma_XS, const SolverOptions& opts) {
  MultiLassoFit fit;
  fit.tuning = lasso_tuning(K, M_q, design.N(), kappa, C_gamma);
  Objective obj = [&](const Eigen::VectorXd& u, Eigen::VectorXd* grad) {
    if (grad == nullptr) return total_loss(loss, design, Y, u);
    return total_loss_with_gradient(loss, design, Y, u, *grad);
  };
  fit.result = solve(obj, fit.tuning.lambda, domain, opts);
  fit.error_bound =
      report_lasso_error_bound(loss.k, K, fit.tuning.L_N, S, design.N(), kappa, sigma_XS);
  return fit;
}

}  // namespace multilasso
