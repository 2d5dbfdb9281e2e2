#include "doctest.h"

#include <cmath>
#include <vector>

#include "attrib/moments.hpp"

using namespace attrib;

namespace {

// All C(n, n1) treatment assignments, for brute-force moment oracles.
void enumerate_srs(int n, int n1, std::vector<Eigen::VectorXi>& out,
                   Eigen::VectorXi cur = {}, int pos = 0, int used = 0) {
  if (cur.size() == 0) cur = Eigen::VectorXi::Zero(n);
  if (pos == n) {
    if (used == n1) out.push_back(cur);
    return;
  }
  cur[pos] = 0;
  enumerate_srs(n, n1, out, cur, pos + 1, used);
  cur[pos] = 1;
  enumerate_srs(n, n1, out, cur, pos + 1, used + 1);
}

ExperimentData blank_data(int n) {
  ExperimentData d;
  d.n_units = n;
  d.outcomes = Eigen::VectorXd::Zero(n);
  d.treatment = Eigen::VectorXi::Zero(n);
  d.out_edges.resize(n);
  return d;
}

DesignDescriptor srs_design(int n1) {
  DesignDescriptor d;
  d.kind = DesignDescriptor::Kind::Srs;
  d.n1 = n1;
  return d;
}

}  // namespace

TEST_SUITE_BEGIN("moments");

TEST_CASE("analytic tau1 moments match full enumeration at N=4") {
  const auto m = analytic_tau1_moments(4, 2);
  CHECK(m.mean_w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.method == "analytic");

  std::vector<Eigen::VectorXi> draws;
  enumerate_srs(4, 2, draws);
  REQUIRE(draws.size() == 6);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(4, 4);
  for (const auto& x : draws) {
    const Eigen::VectorXd w = tau1_weights(x);
    mean += w / 6.0;
    second += w * w.transpose() / 6.0;
  }
  const Eigen::MatrixXd q = second - mean * mean.transpose();
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-14);
  CHECK((m.q - q).cwiseAbs().maxCoeff() < 1e-12);

  // theta = (1,1,0,0) variance through the quadratic form
  const Eigen::Vector4d theta(1, 1, 0, 0);
  double var = 0, mu = 0;
  for (const auto& x : draws) mu += tau1_weights(x).dot(theta) / 6.0;
  for (const auto& x : draws) {
    const double v = tau1_weights(x).dot(theta) - mu;
    var += v * v / 6.0;
  }
  CHECK(theta.dot(m.q * theta) == doctest::Approx(var).epsilon(1e-12));

  // constant theta: w sums to zero, so the form vanishes
  CHECK(Eigen::Vector4d::Ones().dot(m.q * Eigen::Vector4d::Ones()) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("analytic tau1 variance arithmetic at N=100") {
  const auto m = analytic_tau1_moments(100, 50);
  // theta with 50 ones: sigma^2 = 100/99 * 1/4 * ... worst binary spread
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(100);
  theta.head(50).setOnes();
  const double sigma2 = theta.squaredNorm() / 100.0 -
                        std::pow(theta.sum() / 100.0, 2);
  const double sigma2_n1 = sigma2 * 100.0 / 99.0;  // divisor N-1
  const double expect = (1.0 / 50) * (50.0 / 100) * std::pow(100.0 / 50, 2) *
                        sigma2_n1;
  CHECK(expect == doctest::Approx(0.010101010101).epsilon(1e-9));
  CHECK(theta.dot(m.q * theta) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("analytic tau1 rejects degenerate arms") {
  CHECK_THROWS(analytic_tau1_moments(4, 0));
  CHECK_THROWS(analytic_tau1_moments(4, 4));
}

TEST_CASE("monte carlo tau1 moments agree with the analytic values") {
  const int n = 4, n1 = 2;
  const long r = 100000;
  const auto mc = mc_weight_moments(make_tau1_scheme(), blank_data(n),
                                    srs_design(n1), r, 7);
  CHECK(mc.replications == r);
  CHECK(mc.failed_draws == 0);
  REQUIRE(mc.mc_standard_errors.size() == n);
  for (int i = 0; i < n; ++i)
    CHECK(std::fabs(mc.mean_w[i]) < 3 * mc.mc_standard_errors[i] + 1e-12);
  // diag(Q) ~ 1/(N1*N0) = 1/4; MC error of a variance over 1e5 draws is small
  for (int i = 0; i < n; ++i)
    CHECK(mc.q(i, i) == doctest::Approx(0.25).epsilon(0.05));
  // theta'Q theta vs the analytic variance value
  const Eigen::Vector4d theta(1, 0, 0, 0);
  const auto an = analytic_tau1_moments(n, n1);
  CHECK(theta.dot(mc.q * theta) ==
        doctest::Approx(theta.dot(an.q * theta)).epsilon(0.05));
  // symmetry and PSD after clipping
  CHECK((mc.q - mc.q.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(mc.q)
            .eigenvalues()
            .minCoeff() >= -1e-12);
}

TEST_CASE("monte carlo error decays like one over root R") {
  const int n = 6, n1 = 3;
  const auto an = analytic_tau1_moments(n, n1);
  std::vector<double> log_r, log_err;
  for (long r : {1000L, 10000L, 100000L}) {
    const auto mc = mc_weight_moments(make_tau1_scheme(), blank_data(n),
                                      srs_design(n1), r, 3);
    log_r.push_back(std::log((double)r));
    log_err.push_back(std::log((mc.q - an.q).norm()));
  }
  // least-squares slope over the three points
  const double xbar = (log_r[0] + log_r[1] + log_r[2]) / 3;
  const double ybar = (log_err[0] + log_err[1] + log_err[2]) / 3;
  double num = 0, den = 0;
  for (int i = 0; i < 3; ++i) {
    num += (log_r[i] - xbar) * (log_err[i] - ybar);
    den += (log_r[i] - xbar) * (log_r[i] - xbar);
  }
  CHECK(num / den == doctest::Approx(-0.5).epsilon(0.3));
}

TEST_CASE("bias bound") {
  Eigen::Vector3d m(0.1, -0.2, 0.05);
  const auto [lo, hi] = bias_bound(m);
  CHECK(lo == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(hi == doctest::Approx(0.15).epsilon(1e-14));
  const auto [zlo, zhi] = bias_bound(Eigen::Vector3d::Zero());
  CHECK(zlo == 0.0);
  CHECK(zhi == 0.0);
  const auto [alo, ahi] = bias_bound(analytic_tau1_moments(10, 4).mean_w);
  CHECK(alo == 0.0);
  CHECK(ahi == 0.0);
}

TEST_CASE("bias bound equals binary enumeration") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> gauss(0, 1);
  const int n = 12;
  Eigen::VectorXd m(n);
  for (int i = 0; i < n; ++i) m[i] = gauss(rng);
  const auto [lo, hi] = bias_bound(m);
  double bmin = 1e300, bmax = -1e300;
  for (int mask = 0; mask < (1 << n); ++mask) {
    double s = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) s += m[i];
    bmin = std::min(bmin, s);
    bmax = std::max(bmax, s);
  }
  CHECK(lo == doctest::Approx(bmin).epsilon(1e-12));
  CHECK(hi == doctest::Approx(bmax).epsilon(1e-12));
}

TEST_CASE("expectation controls") {
  // ring of 6: out-degree 2 everywhere
  auto d = blank_data(6);
  for (int i = 0; i < 6; ++i) d.out_edges[i] = {(i + 1) % 6, (i + 5) % 6};
  DesignDescriptor bern;
  bern.kind = DesignDescriptor::Kind::Bernoulli;
  bern.rho = 2.0 / 3;
  Term own;
  own.kind = Term::Kind::OwnTreatment;
  Term expo;
  expo.kind = Term::Kind::Exposure;
  const long r = 40000;
  const auto cols = expectation_controls(d, bern, {own, expo}, r, 11);
  REQUIRE(cols.size() == 2);
  const double se_x = std::sqrt(2.0 / 9 / r);
  const double se_z = std::sqrt(2 * 2.0 / 9 / r);
  for (int i = 0; i < 6; ++i) {
    CHECK(std::fabs(cols[0][i] - 2.0 / 3) < 3 * se_x);
    CHECK(std::fabs(cols[1][i] - 2 * 2.0 / 3) < 3 * se_z);
  }

  // E[X_i Z_i] on the triangle under bernoulli(1/2): 1/2 * (1/2 * 2) = 1/2
  auto k3 = blank_data(3);
  k3.out_edges = {{1, 2}, {0, 2}, {0, 1}};
  DesignDescriptor half;
  half.kind = DesignDescriptor::Kind::Bernoulli;
  half.rho = 0.5;
  Term inter;
  inter.kind = Term::Kind::Interaction;
  inter.factors = {own, expo};
  const auto xz = expectation_controls(k3, half, {inter}, r, 13);
  for (int i = 0; i < 3; ++i) CHECK(std::fabs(xz[0][i] - 0.5) < 3 * 0.011);
}

TEST_CASE("regression bar_w is the averaged-design least-squares form") {
  // intercept + own treatment under srs: bar_w should be group-symmetric and
  // the contrast weights recover a difference in means on average
  auto d = blank_data(6);
  WeightScheme scheme = make_regression_scheme(
      [] {
        RegressorSpec s;
        Term c, x;
        c.kind = Term::Kind::Constant;
        x.kind = Term::Kind::OwnTreatment;
        s.terms = {c, x};
        s.contrast = Eigen::Vector2d(0, 1);
        return s;
      }());
  const auto m = mc_weight_moments(scheme, d, srs_design(3), 20000, 5);
  // E[xi_i] is the same for every unit, so up to MC noise bar_w is constant
  // and the balanced slope contrast centers near zero
  for (int i = 1; i < 6; ++i)
    CHECK(m.bar_w[i] == doctest::Approx(m.bar_w[0]).epsilon(0.1).scale(1.0));
  CHECK(std::fabs(m.bar_w.sum()) < 0.2);
}

TEST_CASE("builder failures beyond half the draws abort") {
  // one class where the exposed arm is empty for most draws: N=3, n1=1, and
  // the exposure threshold needs 2 treated neighbors -> W = 0 always, so the
  // weighted scheme always drops its only class
  auto d = blank_data(3);
  d.out_edges = {{1, 2}, {0, 2}, {0, 1}};
  WeightScheme scheme = make_weighted_scheme(single_class(3), 2);
  CHECK_THROWS(mc_weight_moments(scheme, d, srs_design(1), 200, 3));
}

TEST_CASE("grouped moments match dense moments on a small aggregate") {
  AggregateTable t;
  t.rows = {{"a", true, 2, 5}, {"a", false, 1, 4}, {"b", true, 0, 3},
            {"b", false, 2, 4}};
  const auto data = expand_aggregate(t);
  const int n = data.n_units;
  std::vector<int> group_of(n);
  for (int i = 0; i < n; ++i)
    group_of[i] = static_cast<int>(data.covariates.at("group")[i]);

  const auto design = srs_design(6);
  const auto scheme = make_tau1_scheme();
  const long r = 60000;
  const auto grouped = mc_grouped_moments(scheme, data, group_of, design, r, 9);
  const auto an = analytic_tau1_moments(n, 6);

  CHECK(grouped.n_groups() == 2);
  const auto dense = expand_grouped_moments(grouped);
  CHECK((dense.mean_w - an.mean_w).cwiseAbs().maxCoeff() < 0.01);
  CHECK((dense.q - an.q).cwiseAbs().maxCoeff() < 0.02);
  // bar_w for tau1 is mean_w
  CHECK((dense.bar_w - dense.mean_w).cwiseAbs().maxCoeff() < 1e-12);

  // bias bound consistent between grouped and dense forms
  const auto [glo, ghi] = grouped_bias_bound(grouped);
  const auto [dlo, dhi] = bias_bound(dense.mean_w);
  CHECK(glo == doctest::Approx(dlo).epsilon(1e-10));
  CHECK(ghi == doctest::Approx(dhi).epsilon(1e-10));
}

TEST_CASE("grouped regression moments agree with dense monte carlo") {
  AggregateTable t;
  t.rows = {{"a", true, 1, 4}, {"a", false, 1, 3}, {"b", true, 2, 5},
            {"b", false, 0, 4}};
  const auto data = expand_aggregate(t);
  const int n = data.n_units;
  std::vector<int> group_of(n);
  for (int i = 0; i < n; ++i)
    group_of[i] = static_cast<int>(data.covariates.at("group")[i]);

  RegressorSpec spec;
  Term c, x, g;
  c.kind = Term::Kind::Constant;
  x.kind = Term::Kind::OwnTreatment;
  g.kind = Term::Kind::Covariate;
  g.column = "group:a";
  spec.terms = {c, x, g};
  spec.contrast = Eigen::Vector3d(0, 1, 0);
  const auto scheme = make_regression_scheme(spec);

  const auto design = srs_design(7);
  const auto grouped =
      mc_grouped_moments(scheme, data, group_of, design, 60000, 21);
  const auto dense_mc = mc_weight_moments(scheme, data, design, 60000, 21);
  const auto dense = expand_grouped_moments(grouped);
  CHECK((dense.mean_w - dense_mc.mean_w).cwiseAbs().maxCoeff() < 0.02);
  CHECK((dense.q - dense_mc.q).cwiseAbs().maxCoeff() < 0.05);
  CHECK((dense.bar_w - dense_mc.bar_w).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("grouped moments reject exposure-dependent terms") {
  AggregateTable t;
  t.rows = {{"a", true, 1, 3}, {"a", false, 1, 3}};
  const auto data = expand_aggregate(t);
  std::vector<int> group_of(data.n_units, 0);
  RegressorSpec spec;
  Term c, z;
  c.kind = Term::Kind::Constant;
  z.kind = Term::Kind::Exposure;
  spec.terms = {c, z};
  spec.contrast = Eigen::Vector2d(0, 1);
  CHECK_THROWS(mc_grouped_moments(make_regression_scheme(spec), data, group_of,
                                  srs_design(3), 100, 1));
}

TEST_CASE("grouped bound problem has the collapsed shape") {
  AggregateTable t;
  t.rows = {{"a", true, 1, 4}, {"a", false, 0, 3}, {"b", true, 2, 5},
            {"b", false, 1, 2}};
  const auto data = expand_aggregate(t);
  std::vector<int> group_of(data.n_units);
  for (int i = 0; i < data.n_units; ++i)
    group_of[i] = static_cast<int>(data.covariates.at("group")[i]);
  const auto grouped = mc_grouped_moments(make_tau1_scheme(), data, group_of,
                                          srs_design(7), 20000, 2);
  const auto p = grouped_bound_problem(grouped, 1.96, Sense::Max, 0.5);
  CHECK(p.dim() == 2);
  CHECK(p.upper() == Eigen::Vector2d(7, 7));
  REQUIRE(p.constraints.size() == 1);
  CHECK(p.constraints[0].b == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_NOTHROW(p.validate());
  const auto res = solve_bnb(p);
  CHECK(res.status == SolveStatus::Exact);
}

TEST_SUITE_END();
