#include "attrib/simulator.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "attrib/exposure.hpp"

namespace attrib {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void VaccineSimParams::validate() const {
  if (treat_prob <= 0.0 || treat_prob >= 1.0)
    throw std::runtime_error("vaccinesim: treat_prob must be in (0, 1)");
  if (n_neighborhoods < 1 || size_min < 1 || size_max < size_min)
    throw std::runtime_error("vaccinesim: invalid neighborhood sizes");
  if (b_scale < 0.0) throw std::runtime_error("vaccinesim: b_scale < 0");
}

ExperimentData gen_vaccinesim(const VaccineSimParams& params,
                              std::uint64_t structure_seed,
                              std::uint64_t treatment_seed) {
  params.validate();
  Rng structure_rng(derive_seed(structure_seed, 0x76616363));

  // population: per-neighborhood sizes, covariates, random effect,
  // participation, and the outcome latent uniforms (shared by Y and theta)
  std::uniform_int_distribution<int> size_dist(params.size_min, params.size_max);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> neighborhood_of;
  std::vector<double> age, river, latent_u;
  for (int nb = 0; nb < params.n_neighborhoods; ++nb) {
    const int size = size_dist(structure_rng);
    const double b = params.b_scale * normal(structure_rng);
    for (int j = 0; j < size; ++j) {
      const double a = normal(structure_rng);
      const double rv = unif(structure_rng) < 0.5 ? 1.0 : 0.0;
      const double part_p = logistic(params.part_intercept +
                                     params.part_age * a +
                                     params.part_river * rv + b);
      const bool participates = unif(structure_rng) < part_p;
      const double u = unif(structure_rng);
      if (!participates) continue;
      neighborhood_of.push_back(nb);
      age.push_back(a);
      river.push_back(rv);
      latent_u.push_back(u);
    }
  }
  const int n = static_cast<int>(neighborhood_of.size());
  if (n < 2) throw std::runtime_error("vaccinesim: fewer than 2 participants");

  ExperimentData data;
  data.n_units = n;
  data.out_edges.assign(n, {});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && neighborhood_of[i] == neighborhood_of[j])
        data.out_edges[i].push_back(j);

  Rng treat_rng(derive_seed(treatment_seed, 0x74726561));
  data.treatment.resize(n);
  for (int i = 0; i < n; ++i)
    data.treatment[i] = unif(treat_rng) < params.treat_prob ? 1 : 0;

  data.outcomes.resize(n);
  Eigen::VectorXi theta(n);
  for (int i = 0; i < n; ++i) {
    double rate = 0.0;  // neighborhood vaccination rate among other members
    if (!data.out_edges[i].empty()) {
      int treated = 0;
      for (int j : data.out_edges[i]) treated += data.treatment[j];
      rate = static_cast<double>(treated) / data.out_edges[i].size();
    }
    const double base = params.out_intercept + params.out_age * age[i] +
                        params.out_river * river[i];
    const double p_y =
        logistic(base + params.out_own * data.treatment[i] +
                 params.out_rate * rate +
                 params.out_interact * data.treatment[i] * rate);
    const double p_theta = logistic(base);  // a = 0, all-placebo rate = 0
    data.outcomes[i] = latent_u[i] < p_y ? 1.0 : 0.0;
    theta[i] = latent_u[i] < p_theta ? 1 : 0;
  }
  data.counterfactual = theta;
  data.covariates["age"] = Eigen::Map<Eigen::VectorXd>(age.data(), n);
  data.covariates["river"] = Eigen::Map<Eigen::VectorXd>(river.data(), n);
  Eigen::VectorXd nb_col(n);
  for (int i = 0; i < n; ++i) nb_col[i] = neighborhood_of[i];
  data.covariates["neighborhood"] = nb_col;
  data.validate();
  return data;
}

void GenericConfig::validate() const {
  if (n_units < 2) throw std::runtime_error("gen_generic: n_units < 2");
  if (network == Network::ErdosRenyi && (er_prob < 0.0 || er_prob > 1.0))
    throw std::runtime_error("gen_generic: er_prob out of range");
  if (network == Network::Ring && (ring_k < 1 || 2 * ring_k >= n_units))
    throw std::runtime_error("gen_generic: ring_k out of range");
  if (theta == Theta::Bernoulli && (theta_prob < 0.0 || theta_prob > 1.0))
    throw std::runtime_error("gen_generic: theta_prob out of range");
  if (theta == Theta::Fixed && theta_fixed.size() != n_units)
    throw std::runtime_error("gen_generic: theta_fixed length mismatch");
  design.validate(n_units);
}

ExperimentData gen_generic(const GenericConfig& config,
                           std::uint64_t structure_seed,
                           std::uint64_t treatment_seed) {
  config.validate();
  const int n = config.n_units;
  Rng structure_rng(derive_seed(structure_seed, 0x6e657477));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  ExperimentData data;
  data.n_units = n;
  data.out_edges.assign(n, {});
  if (config.network == GenericConfig::Network::ErdosRenyi) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && unif(structure_rng) < config.er_prob)
          data.out_edges[i].push_back(j);
  } else {
    for (int i = 0; i < n; ++i)
      for (int k = 1; k <= config.ring_k; ++k) {
        data.out_edges[i].push_back((i + k) % n);
        data.out_edges[i].push_back((i - k + n) % n);
      }
    for (auto& e : data.out_edges) std::sort(e.begin(), e.end());
  }

  Eigen::VectorXi theta(n);
  switch (config.theta) {
    case GenericConfig::Theta::Bernoulli:
      for (int i = 0; i < n; ++i)
        theta[i] = unif(structure_rng) < config.theta_prob ? 1 : 0;
      break;
    case GenericConfig::Theta::Block:
      for (int i = 0; i < n; ++i)
        theta[i] = i < config.block_frac * n ? 1 : 0;
      break;
    case GenericConfig::Theta::Fixed:
      theta = config.theta_fixed;
      break;
  }

  Rng treat_rng(derive_seed(treatment_seed, 0x78647277));
  data.treatment = draw_treatment(config.design, n, treat_rng);
  const Eigen::VectorXi z = compute_exposure(data.out_edges, data.treatment);

  data.outcomes.resize(n);
  for (int i = 0; i < n; ++i) {
    double effect = 0.0;
    switch (config.effect) {
      case GenericConfig::Effect::None:
        break;
      case GenericConfig::Effect::Cure:
        effect = -static_cast<double>(theta[i]) * data.treatment[i];
        break;
      case GenericConfig::Effect::Linear:
        effect = config.beta_x * data.treatment[i] + config.beta_z * z[i];
        break;
    }
    data.outcomes[i] = std::clamp(theta[i] + effect, 0.0, 1.0);
  }
  data.counterfactual = theta;
  data.validate();
  return data;
}

double CoverageReport::binomial_se() const {
  const long effective = reps - failures;
  if (effective <= 0) return 0.0;
  const double p = coverage();
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / effective);
}

CoverageReport coverage_study(const Generator& generate,
                              const IntervalProcedure& interval,
                              const EstimandFn& realized, long reps,
                              std::uint64_t seed) {
  if (reps < 1) throw std::runtime_error("coverage_study: reps < 1");
  CoverageReport report;
  report.reps = reps;
  report.rows.reserve(reps);
  for (long rep = 0; rep < reps; ++rep) {
    const ExperimentData data =
        generate(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    CoverageRow row;
    row.rep = rep;
    try {
      const IntervalResult r = interval(data);
      row.realized = realized(data);
      row.pi_lo = r.pi_lo;
      row.pi_hi = r.pi_hi;
      row.width = r.pi_hi - r.pi_lo;
      row.covered = row.realized >= r.pi_lo - 1e-12 &&
                    row.realized <= r.pi_hi + 1e-12;
      if (row.covered) ++report.covered_count;
    } catch (const std::runtime_error&) {
      ++report.failures;
      row.covered = false;
    }
    report.rows.push_back(row);
  }
  return report;
}

double realized_estimand(const WeightScheme& scheme,
                         const ExperimentData& data) {
  if (!data.counterfactual)
    throw std::runtime_error("realized_estimand: no counterfactual stored");
  const Eigen::VectorXd w = scheme.build(data, data.treatment);
  return w.dot(data.outcomes - data.counterfactual->cast<double>());
}

Eigen::VectorXi adversarial_theta(const WeightMoments& moments, double alpha,
                                  std::vector<LinearConstraint> constraints,
                                  const SolverBudget& budget) {
  const double z = normal_quantile(1.0 - alpha);
  BoundProblem p = make_bound_problem(moments.bar_w, moments.q, z, Sense::Max,
                                      std::move(constraints));
  const SolveResult res = solve_bnb(p, budget);
  if (res.incumbent.size() == 0)
    throw std::runtime_error("adversarial_theta: no incumbent found");
  Eigen::VectorXi theta(res.incumbent.size());
  for (int i = 0; i < theta.size(); ++i)
    theta[i] = res.incumbent[i] > 0.5 ? 1 : 0;
  return theta;
}

std::string coverage_csv(const CoverageReport& report) {
  std::ostringstream out;
  out << "rep,realized,pi_lo,pi_hi,covered,width\n";
  out.precision(12);
  for (const auto& row : report.rows)
    out << row.rep << ',' << row.realized << ',' << row.pi_lo << ','
        << row.pi_hi << ',' << (row.covered ? 1 : 0) << ',' << row.width
        << '\n';
  return out.str();
}

}  // namespace attrib
