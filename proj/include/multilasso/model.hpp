#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace multilasso {

// Per-observation loss gamma(t, y) with t in R^k and a finite response
// alphabet for the discrete built-ins. F1 bounds |d_j gamma| uniformly and F2
// is the sup-norm Lipschitz constant of each partial derivative.
struct LossFamily {
  int k = 1;
  double F1 = 0.0;
  double F2 = 0.0;
  std::optional<double> C_gamma;
  std::function<double(const Eigen::VectorXd& t, int y)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& t, int y)> gradient;
  // empty => continuous response family (no exact expectations available)
  std::vector<int> response_support;
  std::function<double(const Eigen::VectorXd& t, int y)> response_prob;

  bool discrete() const { return !response_support.empty(); }
};

// Built-in multinomial logistic loss over classes {0, 1, ..., k} with class 0
// as baseline: gamma(t, y) = ln(1 + sum_j e^{t_j}) - t_y (t_0 := 0).
LossFamily multinomial_logistic(int k);

// Lookup by config name ("multinomial_logistic").
LossFamily loss_by_name(const std::string& name, int k);

// Fixed covariates X (N x m) expanded into the k x p block matrices
//   Z_i = diag(X_i^T, ..., X_i^T),  p = k*m,
// applied to a parameter made of k stacked blocks of length m.
struct DesignSet {
  Eigen::MatrixXd X;  // rows are X_i^T
  int k = 1;
  double M_Z = 0.0;  // max_{i,h} |X_{ih}| = max_i max_j ||Z_ij||_inf

  DesignSet() = default;
  DesignSet(Eigen::MatrixXd X_in, int k_in);

  int N() const { return int(X.rows()); }
  int m() const { return int(X.cols()); }
  int p() const { return k * m(); }

  // Z_i u = (X_i^T u_1, ..., X_i^T u_k)
  Eigen::VectorXd apply(int i, const Eigen::VectorXd& u) const;
  // out += Z_i^T g
  void add_adjoint(int i, const Eigen::VectorXd& g, Eigen::VectorXd& out) const;
};

// Axis-aligned compact box in R^p. The l1 diameter sup_{u,v} ||u - v||_1 is
// the coordinate range sum.
struct BoxDomain {
  Eigen::VectorXd lo, hi;

  BoxDomain() = default;
  BoxDomain(Eigen::VectorXd lo_in, Eigen::VectorXd hi_in);

  int dim() const { return int(lo.size()); }
  double l1_diameter() const { return (hi - lo).sum(); }
  // sup_{u in D} ||u - v||_1 for a reference point v
  double l1_radius_at(const Eigen::VectorXd& v) const;
  bool contains(const Eigen::VectorXd& v, double tol = 0.0) const;
  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  Eigen::VectorXd sample_point(std::uint64_t seed, std::uint64_t index) const;
};

// Deterministic finite evaluation grid: box corners first (all of them when
// 2^p fits in half the budget, otherwise a seeded corner draw), then seeded
// interior points. Used wherever a theorem's supremum over D is replaced by a
// grid supremum.
std::vector<Eigen::VectorXd> evaluation_grid(const BoxDomain& box, int count,
                                             std::uint64_t seed);

// Parameter vector made of k blocks of length m (p = k*m).
struct ParamVector {
  Eigen::VectorXd u;
  int k = 1;
  int m = 0;

  ParamVector() = default;
  ParamVector(Eigen::VectorXd flat, int k_in);

  int p() const { return k * m; }
  Eigen::VectorBlock<Eigen::VectorXd> block(int j) { return u.segment(std::int64_t(j) * m, m); }
  Eigen::VectorXd block_copy(int j) const { return u.segment(std::int64_t(j) * m, m); }
  std::vector<int> support() const;
  std::vector<std::vector<int>> block_supports() const;
};

// sum_i gamma(Z_i u, Y_i)
double total_loss(const LossFamily& loss, const DesignSet& design,
                  const std::vector<int>& Y, const Eigen::VectorXd& u);

// gradient sum_i Z_i^T grad gamma(Z_i u, Y_i); value returned too
double total_loss_with_gradient(const LossFamily& loss, const DesignSet& design,
                                const std::vector<int>& Y, const Eigen::VectorXd& u,
                                Eigen::VectorXd& grad);

// Exact L(u) = sum_i E gamma(Z_i u, Y) with Y ~ P(.|Z_i theta_true).
// Requires a discrete loss.
double expected_total_loss(const LossFamily& loss, const DesignSet& design,
                           const Eigen::VectorXd& u, const Eigen::VectorXd& theta_true);

// Y_i drawn independently from P(.|Z_i theta_true); reproducible by seed.
std::vector<int> sample_responses(const LossFamily& loss, const DesignSet& design,
                                  const Eigen::VectorXd& theta_true, std::uint64_t seed);

struct CGammaEstimate {
  double value = 0.0;
  long long pairs_evaluated = 0;
  long long grid_points = 0;
  std::string grid_description;
};

// Grid-certified estimate of the quadratic-lower-bound constant: minimum over
// grid pairs (i, u) of [E gamma(Z_i u, Y) - E gamma(Z_i theta, Y)] /
// ||Z_i(u - theta)||_2^2, skipping pairs with ||Z_i(u - theta)||_2 < 1e-9.
// The estimate is reported together with the grid resolution; it upper-bounds
// the exact infimum over the continuous domain.
CGammaEstimate estimate_C_gamma(const LossFamily& loss, const DesignSet& design,
                                const BoxDomain& domain, const Eigen::VectorXd& theta,
                                int grid_size);

}  // namespace multilasso
