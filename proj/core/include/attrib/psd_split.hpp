#pragma once

#include <Eigen/Dense>
#include <string>

namespace attrib {

/// A nonnegative diagonal D with Q - D verified negative semidefinite.
struct SplitCertificate {
  Eigen::VectorXd diagonal;  // D_ii >= 0
  std::string method;        // gershgorin | eig-shift | sdp-lite
  double max_eigenvalue = 0.0;  // lambda_max(Q - D) at verification
  double trace = 0.0;
};

inline constexpr double kSplitTolerance = 1e-8;

/// lambda_max(Q - D) via symmetric eigensolve.
double verify_split(const Eigen::MatrixXd& q, const Eigen::VectorXd& diagonal);

/// D_ii = sum_j |Q_ij| (row absolute sums). Q - D is diagonally dominant with
/// nonpositive diagonal, hence NSD.
SplitCertificate gershgorin_split(const Eigen::MatrixXd& q);

/// D = lambda_max(Q) * I, inflated by 1e-9 * (1 + lambda_max).
SplitCertificate eig_shift_split(const Eigen::MatrixXd& q);

/// Coordinate-descent shrinking of D_ii starting from the better of the two
/// seeds; feasibility re-verified by Cholesky of D - Q + eps*I after each
/// step. Always returns a verified feasible certificate with
/// trace <= min(gershgorin, eig-shift).
SplitCertificate sdp_lite_split(const Eigen::MatrixXd& q, int iter_budget = 8);

SplitCertificate split_by_method(const Eigen::MatrixXd& q,
                                 const std::string& method);

}  // namespace attrib
