#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "attrib/psd_split.hpp"

namespace attrib {

/// a^T theta <= b over the optimization variable.
struct LinearConstraint {
  Eigen::VectorXd a;
  double b = 0.0;
};

/// Builds the mean-cap constraint (1/N) sum theta_i <= cap.
LinearConstraint mean_cap_constraint(int n, double cap);

enum class Sense { Max, Min };

/// The error-bound optimization: optimize bar_w^T t + s*z*sqrt(t^T Q t + lin^T t)
/// over integer t in [lo, hi]^N intersected with linear constraints, s = +1
/// for Max (U) and -1 for Min (L). The default box is binary ({0,1}); the
/// exchangeable collapse produces wider integer boxes with a nonzero `lin`.
struct BoundProblem {
  Eigen::VectorXd bar_w;
  Eigen::MatrixXd radicand_q;    // symmetric
  Eigen::VectorXd radicand_lin;  // empty means zero
  SplitCertificate split;        // for radicand_q
  double z = 1.959963984540054;
  Sense sense = Sense::Max;
  std::vector<LinearConstraint> constraints;
  Eigen::VectorXd lo, hi;  // empty means 0 / 1

  int dim() const { return static_cast<int>(bar_w.size()); }
  Eigen::VectorXd lower() const {
    return lo.size() ? lo : Eigen::VectorXd::Zero(dim());
  }
  Eigen::VectorXd upper() const {
    return hi.size() ? hi : Eigen::VectorXd::Ones(dim());
  }
  Eigen::VectorXd lin() const {
    return radicand_lin.size() ? radicand_lin : Eigen::VectorXd::Zero(dim());
  }
  void validate() const;
};

/// Convenience constructor for the binary case with a fresh split.
BoundProblem make_bound_problem(const Eigen::VectorXd& bar_w,
                                const Eigen::MatrixXd& q, double z, Sense sense,
                                std::vector<LinearConstraint> constraints = {},
                                const std::string& split_method = "sdp-lite");

enum class SolveStatus { Exact, RelaxationBound, BudgetExhaustedBound };

struct SolveResult {
  double value = 0.0;              // outer bound on the optimum
  Eigen::VectorXd incumbent;       // integer feasible point when available
  double incumbent_value = 0.0;    // exact objective at the incumbent
  SolveStatus status = SolveStatus::RelaxationBound;
  long node_count = 0;
  double gap = 0.0;
};

/// Exact objective at a point in the box: bar_w^T t + s*z*sqrt(radicand) using
/// the split form t^T(Q-D)t + sum_i chord(D_ii) + lin^T t (identical to the
/// direct radicand at integer box corners). Throws if the radicand falls
/// below -1e-10 * scale, which indicates a violated split certificate.
double objective(const Eigen::VectorXd& t, const BoundProblem& problem);

struct SolverBudget {
  long node_budget = 200000;
  double time_budget_seconds = 60.0;
  int max_pgd_iterations = 2000;
};

/// Concave box relaxation solved by projected gradient with backtracking.
/// The returned value is a certified outer bound (>= exact max / <= exact min)
/// obtained from a supergradient linearization at the final iterate.
SolveResult solve_relaxed(const BoundProblem& problem,
                          const SolverBudget& budget = {});

/// Best-first branch-and-bound using the relaxation as node bound, branching
/// on the most fractional coordinate, incumbents from rounding + 1-opt.
SolveResult solve_bnb(const BoundProblem& problem,
                      const SolverBudget& budget = {});

/// Enumeration oracle; requires the feasible lattice to be small (<= ~4M
/// points). Evaluates the radicand directly, no split needed.
SolveResult brute_force(const BoundProblem& problem);

/// Rewrites the problem over per-group counts when bar_w, the radicand, and
/// all constraints are exchangeable within groups (verified to 1e-10). The
/// collapsed optimum equals the original integer optimum.
BoundProblem collapse_exchangeable(const BoundProblem& problem,
                                   const std::vector<int>& group_of);

/// Expands a collapsed incumbent (group counts) back to a unit-level binary
/// vector, filling each group's lowest indices first.
Eigen::VectorXd expand_counts(const Eigen::VectorXd& counts,
                              const std::vector<int>& group_of);

/// JSON (de)serialization for solver regression tests.
std::string problem_to_json(const BoundProblem& problem);
BoundProblem problem_from_json(const std::string& text);

}  // namespace attrib
