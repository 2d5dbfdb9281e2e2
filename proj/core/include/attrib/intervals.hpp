#pragma once

#include <optional>
#include <string>

#include "attrib/estimands.hpp"
#include "attrib/experiment.hpp"
#include "attrib/moments.hpp"

namespace attrib {

/// A prediction interval for w(X)^T(Y - theta). Coverage is labeled
/// 1 - 2*alpha: the U and L solves each use the z_{1-alpha} quantile.
struct IntervalResult {
  std::string estimand;
  double point = 0.0;
  double bias_lo = 0.0, bias_hi = 0.0;
  double alpha = 0.0;  // per side
  double u = 0.0, l = 0.0;
  SolveStatus u_status = SolveStatus::Exact;
  SolveStatus l_status = SolveStatus::Exact;
  double pi_lo = 0.0, pi_hi = 0.0;  // [point - U, point - L]
  int n_constraints = 0;
  std::string split_method;
  std::string moments_method;
  bool widened_by_bias = false;

  double coverage_label() const { return 1.0 - 2.0 * alpha; }
};

/// Closed-form tau1 interval under srs: half-width
/// z_{1-alpha} * sqrt((N/(N-1)) (N/(N1 N0)) sigma2), sigma2 = 1/4 by default
/// or cap*(1-cap) when a mean cap < 1/2 is supplied.
IntervalResult tau1_interval(const ExperimentData& data, double alpha,
                             std::optional<double> theta_mean_cap = {});

double tau1_half_width(int n_units, int n1, double alpha,
                       std::optional<double> theta_mean_cap = {});

/// General pipeline: U/L from the error-bound optimization over binary theta,
/// interval [w^T Y - U, w^T Y - L]. Bias bound reported separately unless
/// widen_by_bias adds it to the endpoints.
IntervalResult general_interval(const WeightScheme& scheme,
                                const ExperimentData& data,
                                const WeightMoments& moments, double alpha,
                                std::vector<LinearConstraint> constraints = {},
                                const std::string& split_method = "sdp-lite",
                                const SolverBudget& budget = {},
                                bool widen_by_bias = false);

/// Same pipeline over group-collapsed moments (aggregate-scale data).
/// theta_mean_cap < 0 means no cap.
IntervalResult grouped_interval(const WeightScheme& scheme,
                                const ExperimentData& data,
                                const GroupedMoments& moments, double alpha,
                                double theta_mean_cap = -1.0,
                                const SolverBudget& budget = {},
                                bool widen_by_bias = false);

/// Draw-independent pieces of the alternate beta_adj interval under srs(n1):
/// E[v(X)], the variance quadratic Q_v with its split, the a-bar plug-in, and
/// the (log N)/N width floor.
struct BetaAdjMachine {
  Eigen::VectorXd e_v;   // E[v(X)], v_i = (Z_i - zeta_{k(i)})/N
  Eigen::MatrixXd q_v;   // Var[v(X)^T theta] = theta^T q_v theta
  SplitCertificate split;
  double a_bar = 0.0;    // (E[(1/N) sum (Z_i - zeta)^2])^-1, MC plug-in
  double width_floor = 0.0;  // (log N)/N
  int n_units = 0;
  Eigen::VectorXd class_mean_sq_dev;  // per-class E[(Z_i - zeta)^2] diagnostic
};

BetaAdjMachine make_beta_adj_machine(const ExperimentData& data,
                                     const PropensityClasses& classes, int n1,
                                     long abar_replications = 2000,
                                     std::uint64_t seed = 1);

/// U and L of the beta_adj error for a given realized a(X). Each bound is the
/// max/min over binary theta of a*E[v]^T theta +/- a_bar*z*max{sqrt(Var), floor},
/// computed as two solver calls (quadratic branch and floored linear branch).
std::pair<double, double> beta_adj_bounds(const BetaAdjMachine& machine,
                                          double a_of_x, double z,
                                          const SolverBudget& budget = {});

/// Alternate interval for beta_adj (srs designs). `alpha` here is the total
/// miss probability: the interval is labeled 1 - alpha and uses z_{1-alpha/2}.
IntervalResult beta_adj_interval(const ExperimentData& data,
                                 const PropensityClasses& classes, double alpha,
                                 const SolverBudget& budget = {},
                                 const BetaAdjMachine* machine = nullptr);

}  // namespace attrib
