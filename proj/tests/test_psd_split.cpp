#include "doctest.h"

#include <random>

#include "attrib/psd_split.hpp"

using namespace attrib;

namespace {

Eigen::MatrixXd random_psd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0, 1);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
  return a * a.transpose();
}

}  // namespace

TEST_SUITE_BEGIN("psd_split");

TEST_CASE("gershgorin split") {
  Eigen::Matrix2d q;
  q << 2, 1, 1, 2;
  const auto cert = gershgorin_split(q);
  CHECK(cert.diagonal == Eigen::Vector2d(3, 3));
  CHECK(cert.method == "gershgorin");
  CHECK(cert.max_eigenvalue <= kSplitTolerance);
  // eigenvalues of Q - D are {0, -2}
  const Eigen::Vector2d evals =
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(
          q - cert.diagonal.asDiagonal().toDenseMatrix())
          .eigenvalues();
  CHECK(evals[0] == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(evals[1] == doctest::Approx(0.0).epsilon(1e-12));

  const Eigen::MatrixXd diag = Eigen::Vector3d(1, 2, 3).asDiagonal();
  CHECK(gershgorin_split(diag).diagonal == Eigen::Vector3d(1, 2, 3));
  CHECK(gershgorin_split(Eigen::Matrix3d::Zero()).diagonal ==
        Eigen::Vector3d::Zero());
}

TEST_CASE("eig-shift split") {
  Eigen::Matrix2d q;
  q << 2, 1, 1, 2;
  const auto cert = eig_shift_split(q);
  CHECK(cert.diagonal[0] == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(cert.diagonal[0] == cert.diagonal[1]);
  CHECK(cert.max_eigenvalue <= kSplitTolerance);

  CHECK(eig_shift_split(2.5 * Eigen::Matrix3d::Identity()).diagonal[1] ==
        doctest::Approx(2.5).epsilon(1e-8));

  const Eigen::Vector3d v(1, 2, 2);
  const auto rank1 = eig_shift_split(v * v.transpose());
  CHECK(rank1.diagonal[0] == doctest::Approx(9.0).epsilon(1e-8));
}

TEST_CASE("sdp-lite split") {
  Eigen::Matrix2d q;
  q << 2, 1, 1, 2;
  const auto cert = sdp_lite_split(q);
  CHECK(cert.trace <= 6.0 + 1e-9);
  CHECK(verify_split(q, cert.diagonal) <= kSplitTolerance);

  const Eigen::MatrixXd diag = Eigen::Vector3d(1, 2, 3).asDiagonal();
  const auto dc = sdp_lite_split(diag);
  CHECK(dc.trace == doctest::Approx(6.0).epsilon(1e-6));
  for (int i = 0; i < 3; ++i)
    CHECK(dc.diagonal[i] == doctest::Approx(diag(i, i)).epsilon(1e-6));
}

TEST_CASE("verify_split reports the top eigenvalue") {
  Eigen::Matrix2d q;
  q << 2, 1, 1, 2;
  CHECK(verify_split(q, Eigen::Vector2d::Zero()) ==
        doctest::Approx(3.0).epsilon(1e-10));
  const Eigen::MatrixXd diag = Eigen::Vector2d(1, 4).asDiagonal();
  CHECK(verify_split(diag, Eigen::Vector2d(1, 4)) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("all methods feasible, traces ordered, binary identity holds") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 4 + rep;
    const Eigen::MatrixXd q = random_psd(n, rng);
    const auto g = gershgorin_split(q);
    const auto e = eig_shift_split(q);
    const auto s = sdp_lite_split(q);
    for (const auto& cert : {g, e, s}) {
      CHECK(cert.diagonal.minCoeff() >= 0.0);
      CHECK(verify_split(q, cert.diagonal) <= kSplitTolerance);
      // theta^T Q theta == theta^T (Q-D) theta + sum D_ii theta_i for binary theta
      for (int draw = 0; draw < 5; ++draw) {
        Eigen::VectorXd t(n);
        for (int i = 0; i < n; ++i) t[i] = coin(rng);
        const double direct = t.dot(q * t);
        const double split_form =
            t.dot((q - Eigen::MatrixXd(cert.diagonal.asDiagonal())) * t) +
            cert.diagonal.dot(t);
        CHECK(direct == doctest::Approx(split_form).epsilon(1e-12));
      }
    }
    CHECK(s.trace <= e.trace + 1e-9);
    CHECK(s.trace <= g.trace + 1e-9);
  }
}

TEST_CASE("sdp-lite improves on eig-shift for a 20x20 random PSD matrix") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd q = random_psd(20, rng);
  CHECK(sdp_lite_split(q).trace <= eig_shift_split(q).trace + 1e-9);
}

TEST_CASE("asymmetric input is rejected") {
  Eigen::Matrix2d q;
  q << 1, 0.5, -0.5, 1;
  CHECK_THROWS(gershgorin_split(q));
}

TEST_CASE("split_by_method dispatch") {
  Eigen::Matrix2d q;
  q << 2, 1, 1, 2;
  CHECK(split_by_method(q, "gershgorin").method == "gershgorin");
  CHECK(split_by_method(q, "eig-shift").method == "eig-shift");
  CHECK(split_by_method(q, "sdp-lite").method == "sdp-lite");
  CHECK_THROWS(split_by_method(q, "simplex"));
}

TEST_SUITE_END();
