#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "attrib/estimands.hpp"
#include "attrib/experiment.hpp"
#include "attrib/intervals.hpp"
#include "attrib/moments.hpp"

namespace attrib {

/// Simulated vaccine trial: neighborhoods of participants, logistic outcome
/// and participation models, independent Bernoulli treatment. The
/// counterfactual theta uses the same latent uniforms with treatment effects
/// switched off (common-random-numbers coupling), so (Y, theta) are coherent.
struct VaccineSimParams {
  // outcome log-odds: intercept + own*a + rate*V + age*age_i + river*river_i
  //                   + interact*a*V
  double out_intercept = 0.5;
  double out_own = -0.788;
  double out_rate = -2.953;
  double out_age = -0.098;
  double out_river = -0.145;
  double out_interact = 0.35;
  // participation log-odds: intercept + age*age_i + river*river_i + b_i
  double part_intercept = 0.2727;
  double part_age = -0.0387;
  double part_river = 0.2179;
  double b_scale = 1.0;  // sd of the neighborhood random effect
  double treat_prob = 2.0 / 3.0;
  int n_neighborhoods = 40;
  int size_min = 10;
  int size_max = 30;

  void validate() const;
};

/// The population (neighborhood sizes, covariates, random effects,
/// participation, outcome latent uniforms) is drawn from structure_seed and
/// theta is a deterministic function of it; only the treatment draw and the
/// induced outcomes vary with treatment_seed.
ExperimentData gen_vaccinesim(const VaccineSimParams& params,
                              std::uint64_t structure_seed,
                              std::uint64_t treatment_seed);

/// Generic coverage-harness generator.
struct GenericConfig {
  int n_units = 200;
  enum class Network { ErdosRenyi, Ring } network = Network::ErdosRenyi;
  double er_prob = 0.05;  // Erdos-Renyi edge probability (directed)
  int ring_k = 2;         // out-neighbors per side for the ring
  enum class Theta { Bernoulli, Block, Fixed } theta = Theta::Bernoulli;
  double theta_prob = 0.5;     // Bernoulli
  double block_frac = 0.5;     // leading fraction set to 1
  Eigen::VectorXi theta_fixed; // Fixed
  enum class Effect { None, Cure, Linear } effect = Effect::None;
  double beta_x = 0.0;  // Linear: effect_i = beta_x X_i + beta_z Z_i
  double beta_z = 0.0;
  DesignDescriptor design;

  void validate() const;
};

/// Network and theta come from structure_seed; the treatment draw comes from
/// treatment_seed. Y_i = clamp(theta_i + effect_i) into [0, 1];
/// Cure: effect_i = -theta_i * X_i.
ExperimentData gen_generic(const GenericConfig& config,
                           std::uint64_t structure_seed,
                           std::uint64_t treatment_seed);

struct CoverageRow {
  long rep = 0;
  double realized = 0.0;  // w(X)^T (Y - theta)
  double pi_lo = 0.0, pi_hi = 0.0;
  bool covered = false;
  double width = 0.0;
};

struct CoverageReport {
  long reps = 0;
  long covered_count = 0;
  long failures = 0;  // interval-procedure errors, counted not dropped
  std::vector<CoverageRow> rows;

  double coverage() const {
    return reps > failures
               ? static_cast<double>(covered_count) / (reps - failures)
               : 0.0;
  }
  double binomial_se() const;
};

using Generator = std::function<ExperimentData(std::uint64_t rep_seed)>;
using IntervalProcedure = std::function<IntervalResult(const ExperimentData&)>;
using EstimandFn = std::function<double(const ExperimentData&)>;

/// Replication i uses the derived seed hash(seed, i); aggregation is
/// deterministic regardless of scheduling.
CoverageReport coverage_study(const Generator& generate,
                              const IntervalProcedure& interval,
                              const EstimandFn& realized, long reps,
                              std::uint64_t seed);

/// w(X)^T (Y - theta); requires data.counterfactual.
double realized_estimand(const WeightScheme& scheme,
                         const ExperimentData& data);

/// Stress theta: the incumbent of the U-solve at level alpha (per side).
Eigen::VectorXi adversarial_theta(const WeightMoments& moments, double alpha,
                                  std::vector<LinearConstraint> constraints = {},
                                  const SolverBudget& budget = {});

std::string coverage_csv(const CoverageReport& report);

}  // namespace attrib
