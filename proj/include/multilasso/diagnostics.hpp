#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "multilasso/model.hpp"

namespace multilasso {

// Exact max over supports J with |J| <= l of the largest singular value of
// the column submatrix X_J. Enumerates all C(m, l) size-l supports (the max
// is monotone in the support), refusing when the count exceeds the cap.
double sigma_Xl(const Eigen::MatrixXd& X, int l, long long enumeration_cap = 1000000);

struct REEstimate {
  double kappa_hat = 0.0;
  Eigen::VectorXd witness_v;
  std::vector<int> witness_J;
  long long samples_used = 0;
  std::string method;  // "random_search" or "descent_refined"
};

// Upper estimate of the restricted-eigenvalue constant
//   kappa_X(s, K) = min ||Xv||_2 / (sqrt(N) ||pi_J v||_2)
// over cone directions ||pi_{J^c} v||_1 <= K ||pi_J v||_1 with |J| <= s.
// Random cone-boundary sampling plus projected local descent from the best
// candidates. Because the minimum is only searched, the true kappa may be
// smaller than the reported value; stability of the estimate across seeds is
// the practical diagnostic.
REEstimate kappa_RE(const Eigen::MatrixXd& X, int s, double K, long long budget,
                    std::uint64_t seed);

struct SupportStats {
  int S = 0;  // max over blocks of block support size
  std::vector<std::vector<int>> block_supports;
};

SupportStats support_stats(const ParamVector& theta);

}  // namespace multilasso
