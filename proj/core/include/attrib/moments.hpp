#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "attrib/bound_solver.hpp"
#include "attrib/estimands.hpp"
#include "attrib/experiment.hpp"

namespace attrib {

/// Randomization moments of a weight scheme: E[w], Q = Cov(w), and the
/// centering vector bar_w used by the error-bound optimization.
struct WeightMoments {
  Eigen::VectorXd mean_w;
  Eigen::MatrixXd q;  // symmetric, eigenvalue-clipped to >= 0
  Eigen::VectorXd bar_w;
  std::string method;  // "analytic" | "monte-carlo"
  long replications = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd mc_standard_errors;  // of mean_w entries; empty if analytic
  long failed_draws = 0;
};

/// Re-randomization Monte Carlo over `r` independent design draws. bar_w is
/// scheme-specific: regression-type schemes use the averaged-design
/// least-squares form, weighted/matched schemes the expected class-share
/// form, tau1 uses mean_w itself. Draws where the builder fails (e.g. an
/// empty class arm) are excluded and counted; more than 50% failures aborts.
WeightMoments mc_weight_moments(const WeightScheme& scheme,
                                const ExperimentData& data,
                                const DesignDescriptor& design, long r,
                                std::uint64_t seed);

/// Exact tau1 moments under srs: mean_w = 0, Var(w_i) = 1/(N1*N0),
/// Cov(w_i, w_j) = -1/((N-1)*N1*N0).
WeightMoments analytic_tau1_moments(int n_units, int n1);

/// (sum_i min(E w_i, 0), sum_i max(E w_i, 0)): the range of E[w^T theta]
/// over binary theta.
std::pair<double, double> bias_bound(const Eigen::VectorXd& mean_w);

/// Per-unit MC expectations of the given regressor terms under the design,
/// usable as control covariate columns. Returned in term order.
std::vector<Eigen::VectorXd> expectation_controls(
    const ExperimentData& data, const DesignDescriptor& design,
    const std::vector<Term>& terms, long r, std::uint64_t seed);

/// Moments reduced to group representatives for schemes whose weights are a
/// function of (group, own treatment) only. Cell-count sampling makes the
/// per-draw cost independent of N, so aggregate-scale data stays cheap.
struct GroupedMoments {
  std::vector<int> group_of;    // unit -> group index
  std::vector<int> group_sizes;
  Eigen::VectorXd mean_w;   // E[w_i] for i in group g
  Eigen::VectorXd var_w;    // Var(w_i)
  Eigen::MatrixXd cov_off;  // Cov(w_i, w_j), i != j; diagonal = within-group
  Eigen::VectorXd bar_w;    // centering value per group
  long replications = 0;
  std::uint64_t seed = 0;

  int n_groups() const { return static_cast<int>(group_sizes.size()); }
  int n_units() const { return static_cast<int>(group_of.size()); }
};

/// Requires design srs or bernoulli and a tau1 or regression scheme whose
/// terms depend only on group membership and own treatment (constant,
/// own-treatment, group-constant covariates, and their interactions).
GroupedMoments mc_grouped_moments(const WeightScheme& scheme,
                                  const ExperimentData& data,
                                  const std::vector<int>& group_of,
                                  const DesignDescriptor& design, long r,
                                  std::uint64_t seed);

/// Builds the count-collapsed error-bound problem (variables t_g in
/// [0, n_g]) directly from grouped moments. theta_mean_cap < 0 means no cap.
BoundProblem grouped_bound_problem(const GroupedMoments& moments, double z,
                                   Sense sense, double theta_mean_cap = -1.0);

std::pair<double, double> grouped_bias_bound(const GroupedMoments& moments);

/// Expands grouped moments into unit-level WeightMoments (testing aid; dense,
/// so desk scale only).
WeightMoments expand_grouped_moments(const GroupedMoments& moments);

}  // namespace attrib
