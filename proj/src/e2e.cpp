#include "multilasso/e2e.hpp"

#include <cmath>
#include <stdexcept>

#include "multilasso/parallel.hpp"
#include "multilasso/rng.hpp"
#include "multilasso/theory.hpp"

namespace multilasso {

Eigen::MatrixXd make_design_matrix(int N, int m, const std::string& kind, std::uint64_t seed) {
  CounterRng rng(seed, 0xD5);
  Eigen::MatrixXd X(N, m);
  for (int i = 0; i < N; ++i)
    for (int h = 0; h < m; ++h) X(i, h) = rng.normal();
  if (kind == "gaussian") return X;
  if (kind == "orthogonalized") {
    if (N < m) throw std::invalid_argument("orthogonalized design needs N >= m");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, m);
    return std::sqrt(double(N)) * Q;
  }
  throw std::invalid_argument("unknown design kind: " + kind);
}

E2EReport run_e2e_lasso(const E2EConfig& cfg) {
  if (cfg.S < 1 || cfg.S > cfg.m / 2)
    throw std::invalid_argument("run_e2e_lasso: need 1 <= S <= m/2");
  const LossFamily loss = multinomial_logistic(cfg.k);
  const DesignSet design(make_design_matrix(cfg.N, cfg.m, cfg.design, cfg.design_seed), cfg.k);
  const int p = design.p();

  E2EReport rep;
  if (cfg.theta) {
    rep.theta = *cfg.theta;
    if (rep.theta.size() != p) throw std::invalid_argument("run_e2e_lasso: theta length != k*m");
  } else {
    rep.theta = Eigen::VectorXd::Zero(p);
    CounterRng rng(cfg.seed, 0x7E);
    for (int j = 0; j < cfg.k; ++j) {
      // S seeded positions per block, magnitudes in [mag/2, mag] with signs
      std::vector<int> idx(static_cast<size_t>(cfg.m));
      for (int h = 0; h < cfg.m; ++h) idx[size_t(h)] = h;
      for (int s = 0; s < cfg.S; ++s) {
        std::swap(idx[size_t(s)], idx[size_t(s) + rng.uniform_int(std::uint64_t(cfg.m - s))]);
        rep.theta[std::int64_t(j) * cfg.m + idx[size_t(s)]] =
            rng.rademacher() * cfg.theta_magnitude * rng.uniform(0.5, 1.0);
      }
    }
  }
  const BoxDomain box(Eigen::VectorXd::Constant(p, -cfg.box_halfwidth),
                      Eigen::VectorXd::Constant(p, cfg.box_halfwidth));
  if (!box.contains(rep.theta))
    throw std::invalid_argument("run_e2e_lasso: theta escapes the search box");

  // restricted-eigenvalue diagnostic across seeds; keep the most pessimistic
  const int s_re = cfg.kappa_s > 0 ? cfg.kappa_s : 2 * cfg.S;
  rep.kappa_used = std::numeric_limits<double>::infinity();
  for (int sd = 0; sd < cfg.kappa_seeds; ++sd) {
    const auto est = kappa_RE(design.X, s_re, cfg.K, cfg.kappa_budget, cfg.seed + sd);
    rep.kappa_estimates.push_back(est.kappa_hat);
    rep.kappa_used = std::min(rep.kappa_used, est.kappa_hat);
  }
  if (!(rep.kappa_used > 0.0))
    throw std::runtime_error("run_e2e_lasso: restricted eigenvalue estimate collapsed to zero");

  rep.sigma_XS = sigma_Xl(design.X, cfg.S);
  rep.C_gamma = estimate_C_gamma(loss, design, box, rep.theta, cfg.C_gamma_grid_size).value;
  if (!(rep.C_gamma > 0.0))
    throw std::runtime_error("run_e2e_lasso: quadratic-lower-bound estimate is not positive");

  if (cfg.M_q_fixed) {
    rep.M_q = *cfg.M_q_fixed;
  } else {
    const auto grid = evaluation_grid(box, cfg.Mq_grid_points, cfg.Mq_grid_seed);
    const auto lip = verify_local_lip(loss, design, rep.theta, box, grid, cfg.q / 2.0,
                                      cfg.q / 2.0, cfg.Mq_pilot_replicates, cfg.seed + 0x11);
    rep.M_q = lip.empirical_Mq;
  }

  const auto tuning = lasso_tuning(cfg.K, rep.M_q, cfg.N, rep.kappa_used, rep.C_gamma);
  rep.lambda = tuning.lambda;
  rep.L_N = tuning.L_N;
  rep.bound =
      lasso_error_bound(cfg.k, cfg.K, tuning.L_N, cfg.S, cfg.N, rep.kappa_used, rep.sigma_XS);

  rep.sq_errors.assign(static_cast<size_t>(cfg.replicates), 0.0);
  std::vector<long long> iters(static_cast<size_t>(cfg.replicates), 0);
  std::vector<char> monotone(static_cast<size_t>(cfg.replicates), 1);
  parallel_for(cfg.replicates, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t r = b; r < e; ++r) {
      const auto Y = sample_responses(loss, design, rep.theta, mix64(cfg.seed + 0x2F) + r);
      Objective obj = [&](const Eigen::VectorXd& u, Eigen::VectorXd* g) {
        if (g == nullptr) return total_loss(loss, design, Y, u);
        return total_loss_with_gradient(loss, design, Y, u, *g);
      };
      const auto res = solve(obj, rep.lambda, box, cfg.solver);
      rep.sq_errors[size_t(r)] = (res.theta_hat - rep.theta).squaredNorm();
      iters[size_t(r)] = res.iterations;
      monotone[size_t(r)] = res.objective_monotone ? 1 : 0;
    }
  });
  long long within = 0;
  for (size_t r = 0; r < rep.sq_errors.size(); ++r) {
    within += (rep.sq_errors[r] <= rep.bound);
    rep.solver_iterations_total += iters[r];
    rep.all_monotone = rep.all_monotone && monotone[r];
  }
  rep.fraction_within_bound = double(within) / double(cfg.replicates);
  return rep;
}

}  // namespace multilasso
