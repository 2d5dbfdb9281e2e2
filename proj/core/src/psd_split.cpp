#include "attrib/psd_split.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace attrib {

namespace {

void check_symmetric(const Eigen::MatrixXd& q) {
  if (q.rows() != q.cols()) throw std::runtime_error("split: Q must be square");
  const double asym = (q - q.transpose()).cwiseAbs().maxCoeff();
  const double scale = 1.0 + q.cwiseAbs().maxCoeff();
  if (asym > 1e-9 * scale)
    throw std::runtime_error("split: Q asymmetry beyond tolerance");
}

SplitCertificate finalize(const Eigen::MatrixXd& q, Eigen::VectorXd d,
                          std::string method) {
  SplitCertificate cert;
  cert.diagonal = std::move(d);
  cert.method = std::move(method);
  cert.max_eigenvalue = verify_split(q, cert.diagonal);
  cert.trace = cert.diagonal.sum();
  if (cert.max_eigenvalue > kSplitTolerance)
    throw std::runtime_error("split verification failed: lambda_max(Q-D) = " +
                             std::to_string(cert.max_eigenvalue));
  return cert;
}

bool feasible_cholesky(const Eigen::MatrixXd& q, const Eigen::VectorXd& d,
                       double eps) {
  Eigen::MatrixXd m = -q;
  m.diagonal() += d;
  m.diagonal().array() += eps;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace

double verify_split(const Eigen::MatrixXd& q, const Eigen::VectorXd& diagonal) {
  if (diagonal.size() != q.rows())
    throw std::runtime_error("verify_split: shape mismatch");
  Eigen::MatrixXd m = q;
  m.diagonal() -= diagonal;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

SplitCertificate gershgorin_split(const Eigen::MatrixXd& q) {
  check_symmetric(q);
  Eigen::VectorXd d = q.cwiseAbs().rowwise().sum();
  return finalize(q, std::move(d), "gershgorin");
}

SplitCertificate eig_shift_split(const Eigen::MatrixXd& q) {
  check_symmetric(q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("eig_shift_split: eigensolve failed");
  const double lmax = std::max(0.0, eig.eigenvalues().maxCoeff());
  const double shift = lmax + 1e-9 * (1.0 + lmax);
  Eigen::VectorXd d = Eigen::VectorXd::Constant(q.rows(), shift);
  return finalize(q, std::move(d), "eig-shift");
}

SplitCertificate sdp_lite_split(const Eigen::MatrixXd& q, int iter_budget) {
  check_symmetric(q);
  SplitCertificate gersh = gershgorin_split(q);
  SplitCertificate eigs = eig_shift_split(q);
  Eigen::VectorXd d =
      (gersh.trace <= eigs.trace) ? gersh.diagonal : eigs.diagonal;

  const double scale = 1.0 + q.cwiseAbs().maxCoeff();
  const double eps = 1e-10 * scale;
  const int n = static_cast<int>(q.rows());

  for (int pass = 0; pass < iter_budget; ++pass) {
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      if (d[i] <= 0.0) continue;
      // bisection for the smallest feasible D_ii given the other entries
      double lo = 0.0, hi = d[i];
      Eigen::VectorXd trial = d;
      trial[i] = lo;
      if (feasible_cholesky(q, trial, eps)) {
        d[i] = 0.0;
        improved = true;
        continue;
      }
      for (int b = 0; b < 30; ++b) {
        const double mid = 0.5 * (lo + hi);
        trial[i] = mid;
        if (feasible_cholesky(q, trial, eps))
          hi = mid;
        else
          lo = mid;
      }
      if (hi < d[i] - 1e-12 * scale) improved = true;
      d[i] = hi;
    }
    if (!improved) break;
  }

  // A safety shim covering the eps slack used during shrinking, then a final
  // eigenvalue check; fall back to the better seed if it fails.
  Eigen::VectorXd shimmed = d.array() + 2.0 * eps;
  try {
    auto cert = finalize(q, shimmed, "sdp-lite");
    const SplitCertificate& best = (gersh.trace <= eigs.trace) ? gersh : eigs;
    if (cert.trace <= best.trace) return cert;
  } catch (const std::runtime_error&) {
  }
  SplitCertificate fallback = (gersh.trace <= eigs.trace) ? gersh : eigs;
  fallback.method = "sdp-lite";
  return fallback;
}

SplitCertificate split_by_method(const Eigen::MatrixXd& q,
                                 const std::string& method) {
  if (method == "gershgorin") return gershgorin_split(q);
  if (method == "eig-shift") return eig_shift_split(q);
  if (method == "sdp-lite") return sdp_lite_split(q);
  throw std::runtime_error("unknown split method '" + method + "'");
}

}  // namespace attrib
