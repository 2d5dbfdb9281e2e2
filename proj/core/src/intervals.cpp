#include "attrib/intervals.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "attrib/exposure.hpp"

namespace attrib {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Mat clip_psd(Mat q) {
  q = 0.5 * (q + q.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> eig(q);
  Vec vals = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

void apply_bias_widening(IntervalResult& r, bool widen) {
  if (!widen) return;
  r.pi_lo += r.bias_lo;  // bias_lo <= 0 <= bias_hi, so this widens
  r.pi_hi += r.bias_hi;
  r.widened_by_bias = true;
}

}  // namespace

double tau1_half_width(int n_units, int n1, double alpha,
                       std::optional<double> theta_mean_cap) {
  const int n0 = n_units - n1;
  if (n1 <= 0 || n0 <= 0)
    throw std::runtime_error("tau1_interval: degenerate arms");
  if (alpha <= 0.0 || alpha >= 0.5)
    throw std::runtime_error("tau1_interval: alpha must be in (0, 0.5)");
  double sigma2 = 0.25;
  if (theta_mean_cap) {
    const double cap = *theta_mean_cap;
    if (cap <= 0.0 || cap >= 1.0)
      throw std::runtime_error("tau1_interval: cap must be in (0, 1)");
    if (cap < 0.5) sigma2 = cap * (1.0 - cap);
  }
  const double n = n_units;
  return normal_quantile(1.0 - alpha) *
         std::sqrt((n / (n - 1.0)) * (n / (static_cast<double>(n1) * n0)) *
                   sigma2);
}

IntervalResult tau1_interval(const ExperimentData& data, double alpha,
                             std::optional<double> theta_mean_cap) {
  const int n1 = data.n_treated();
  const double hw = tau1_half_width(data.n_units, n1, alpha, theta_mean_cap);
  IntervalResult r;
  r.estimand = "tau1";
  r.alpha = alpha;
  r.point = point_estimate(tau1_weights(data.treatment), data.outcomes);
  r.bias_lo = r.bias_hi = 0.0;
  r.u = hw;
  r.l = -hw;
  r.pi_lo = r.point - hw;
  r.pi_hi = r.point + hw;
  r.n_constraints = theta_mean_cap ? 1 : 0;
  r.split_method = "closed-form";
  r.moments_method = "analytic";
  return r;
}

IntervalResult general_interval(const WeightScheme& scheme,
                                const ExperimentData& data,
                                const WeightMoments& moments, double alpha,
                                std::vector<LinearConstraint> constraints,
                                const std::string& split_method,
                                const SolverBudget& budget,
                                bool widen_by_bias) {
  if (alpha <= 0.0 || alpha >= 0.5)
    throw std::runtime_error("general_interval: alpha must be in (0, 0.5)");
  const double z = normal_quantile(1.0 - alpha);

  IntervalResult r;
  r.estimand = scheme.name;
  r.alpha = alpha;
  r.point =
      point_estimate(scheme.build(data, data.treatment), data.outcomes);
  std::tie(r.bias_lo, r.bias_hi) = bias_bound(moments.mean_w);
  r.n_constraints = static_cast<int>(constraints.size());
  r.split_method = split_method;
  r.moments_method = moments.method;

  BoundProblem up = make_bound_problem(moments.bar_w, moments.q, z, Sense::Max,
                                       constraints, split_method);
  BoundProblem low = up;
  low.sense = Sense::Min;
  const SolveResult us = solve_bnb(up, budget);
  const SolveResult ls = solve_bnb(low, budget);
  r.u = us.value;
  r.l = ls.value;
  r.u_status = us.status;
  r.l_status = ls.status;
  r.pi_lo = r.point - r.u;
  r.pi_hi = r.point - r.l;
  apply_bias_widening(r, widen_by_bias);
  return r;
}

IntervalResult grouped_interval(const WeightScheme& scheme,
                                const ExperimentData& data,
                                const GroupedMoments& moments, double alpha,
                                double theta_mean_cap,
                                const SolverBudget& budget,
                                bool widen_by_bias) {
  if (alpha <= 0.0 || alpha >= 0.5)
    throw std::runtime_error("grouped_interval: alpha must be in (0, 0.5)");
  const double z = normal_quantile(1.0 - alpha);

  IntervalResult r;
  r.estimand = scheme.name;
  r.alpha = alpha;
  r.point =
      point_estimate(scheme.build(data, data.treatment), data.outcomes);
  std::tie(r.bias_lo, r.bias_hi) = grouped_bias_bound(moments);
  r.n_constraints = theta_mean_cap >= 0.0 ? 1 : 0;
  r.split_method = "sdp-lite";
  r.moments_method = "monte-carlo";

  BoundProblem up =
      grouped_bound_problem(moments, z, Sense::Max, theta_mean_cap);
  BoundProblem low = up;
  low.sense = Sense::Min;
  const SolveResult us = solve_bnb(up, budget);
  const SolveResult ls = solve_bnb(low, budget);
  r.u = us.value;
  r.l = ls.value;
  r.u_status = us.status;
  r.l_status = ls.status;
  r.pi_lo = r.point - r.u;
  r.pi_hi = r.point - r.l;
  apply_bias_widening(r, widen_by_bias);
  return r;
}

BetaAdjMachine make_beta_adj_machine(const ExperimentData& data,
                                     const PropensityClasses& classes, int n1,
                                     long abar_replications,
                                     std::uint64_t seed) {
  const int n = data.n_units;
  if (n1 <= 0 || n1 >= n)
    throw std::runtime_error("beta_adj: degenerate arms");
  const double n1d = n1, nd = n, n0d = n - n1;

  // class-averaging projection P and adjacency A
  Mat p_proj = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (classes.class_of[i] == classes.class_of[j])
        p_proj(i, j) = 1.0 / classes.sizes[classes.class_of[i]];
  Mat a = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j : data.out_edges[i]) a(i, j) = 1.0;

  BetaAdjMachine m;
  m.n_units = n;
  m.width_floor = std::log(static_cast<double>(n)) / n;

  // E[v_i] = (N1/N)(deg_i - class mean deg)/N under srs
  Vec deg(n);
  for (int i = 0; i < n; ++i) deg[i] = data.out_degree(i);
  Vec centered_deg = deg - p_proj * deg;
  m.e_v = (n1d / nd) * centered_deg / nd;

  // Var[v^T theta] = (1/N1)(N0/N) sigma_u^2, u = (N1/N) A^T (I-P) theta
  const Mat ip = Mat::Identity(n, n) - p_proj;
  const Mat b = a.transpose() * ip;  // u = (N1/N) b theta
  const Mat center = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n);
  const double c0 = (1.0 / n1d) * (n0d / nd) * (1.0 / (nd - 1.0)) *
                    (n1d / nd) * (n1d / nd);
  m.q_v = clip_psd(c0 * b.transpose() * center * b);
  m.split = sdp_lite_split(m.q_v);

  // a_bar by re-randomization (the expectation has no simple closed form)
  DesignDescriptor design;
  design.kind = DesignDescriptor::Kind::Srs;
  design.n1 = n1;
  double sum_sq = 0.0;
  Vec class_sum = Vec::Zero(classes.n_classes());
  for (long idx = 0; idx < abar_replications; ++idx) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(idx)));
    const Eigen::VectorXi x = draw_treatment(design, n, rng, idx);
    const Eigen::VectorXi zi = compute_exposure(data.out_edges, x);
    Vec zc = zi.cast<double>() - p_proj * zi.cast<double>();
    sum_sq += zc.squaredNorm() / n;
    for (int i = 0; i < n; ++i)
      class_sum[classes.class_of[i]] += zc[i] * zc[i];
  }
  const double mean_sq = sum_sq / abar_replications;
  if (mean_sq <= 0.0)
    throw std::runtime_error(
        "beta_adj: zero expected within-class exposure variance");
  m.a_bar = 1.0 / mean_sq;
  m.class_mean_sq_dev.resize(classes.n_classes());
  for (int k = 0; k < classes.n_classes(); ++k)
    m.class_mean_sq_dev[k] =
        class_sum[k] / (static_cast<double>(abar_replications) * classes.sizes[k]);
  return m;
}

std::pair<double, double> beta_adj_bounds(const BetaAdjMachine& machine,
                                          double a_of_x, double z,
                                          const SolverBudget& budget) {
  const Vec c = a_of_x * machine.e_v;
  const double zbar = machine.a_bar * z;

  BoundProblem quad;
  quad.bar_w = c;
  quad.radicand_q = machine.q_v;
  quad.split = machine.split;
  quad.z = zbar;
  quad.sense = Sense::Max;
  const double u_quad = solve_bnb(quad, budget).value;
  quad.sense = Sense::Min;
  const double l_quad = solve_bnb(quad, budget).value;

  // floored branch: max/min of the linear part plus the fixed floor width
  const auto [lin_min, lin_max] = bias_bound(c);
  const double u = std::max(u_quad, lin_max + zbar * machine.width_floor);
  const double l = std::min(l_quad, lin_min - zbar * machine.width_floor);
  return {u, l};
}

IntervalResult beta_adj_interval(const ExperimentData& data,
                                 const PropensityClasses& classes, double alpha,
                                 const SolverBudget& budget,
                                 const BetaAdjMachine* machine) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::runtime_error("beta_adj_interval: alpha must be in (0, 1)");
  const int n = data.n_units;
  const Eigen::VectorXi zi = compute_exposure(data.out_edges, data.treatment);

  // observed a(X) and point estimate
  Vec zeta = Vec::Zero(classes.n_classes());
  for (int i = 0; i < n; ++i) zeta[classes.class_of[i]] += zi[i];
  for (int k = 0; k < classes.n_classes(); ++k) zeta[k] /= classes.sizes[k];
  double sum_sq = 0.0, sum_zy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = zi[i] - zeta[classes.class_of[i]];
    sum_sq += d * d;
    sum_zy += d * data.outcomes[i];
  }
  if (sum_sq <= 0.0) {
    bool all_singletons = true;
    for (int s : classes.sizes) all_singletons &= (s == 1);
    throw std::runtime_error(
        std::string("beta_adj_interval: zero within-class exposure variance") +
        (all_singletons ? " (every class has size 1)" : ""));
  }
  const double a_of_x = n / sum_sq;  // ((1/N) sum (Z - zeta)^2)^-1

  BetaAdjMachine local;
  if (!machine) {
    local = make_beta_adj_machine(data, classes, data.n_treated());
    machine = &local;
  }
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const auto [u, l] = beta_adj_bounds(*machine, a_of_x, z, budget);

  IntervalResult r;
  r.estimand = "beta_adj";
  r.alpha = alpha / 2.0;  // so coverage_label() == 1 - alpha
  r.point = sum_zy / sum_sq;
  std::tie(r.bias_lo, r.bias_hi) = bias_bound(a_of_x * machine->e_v);
  r.u = u;
  r.l = l;
  r.pi_lo = r.point - u;
  r.pi_hi = r.point - l;
  r.split_method = machine->split.method;
  r.moments_method = "analytic+mc-abar";
  return r;
}

}  // namespace attrib
