#include "attrib/estimands.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace attrib {

namespace {

Eigen::VectorXd eval_term(const Term& term, const ExperimentData& data,
                          const Eigen::VectorXi& treatment,
                          const Eigen::VectorXi& exposure) {
  const int n = data.n_units;
  switch (term.kind) {
    case Term::Kind::Constant:
      return Eigen::VectorXd::Ones(n);
    case Term::Kind::OwnTreatment:
      return treatment.cast<double>();
    case Term::Kind::Exposure:
      return exposure.cast<double>();
    case Term::Kind::Thresholded:
      return threshold_exposure(exposure, term.z_min).cast<double>();
    case Term::Kind::Covariate: {
      auto it = data.covariates.find(term.column);
      if (it == data.covariates.end())
        throw std::runtime_error("unknown covariate '" + term.column + "'");
      return it->second;
    }
    case Term::Kind::Interaction: {
      if (term.factors.size() != 2)
        throw std::runtime_error("interaction term needs exactly 2 factors");
      return eval_term(term.factors[0], data, treatment, exposure)
          .cwiseProduct(eval_term(term.factors[1], data, treatment, exposure));
    }
  }
  throw std::logic_error("unreachable");
}

bool spec_uses_exposure(const Term& term) {
  if (term.kind == Term::Kind::Exposure || term.kind == Term::Kind::Thresholded)
    return true;
  for (const auto& f : term.factors)
    if (spec_uses_exposure(f)) return true;
  return false;
}

/// Per-class counts of exposed/unexposed units.
struct ArmCounts {
  std::vector<int> n1, n0;
};

ArmCounts arm_counts(const Eigen::VectorXi& w_exposed,
                     const PropensityClasses& classes) {
  ArmCounts counts;
  counts.n1.assign(classes.n_classes(), 0);
  counts.n0.assign(classes.n_classes(), 0);
  for (int i = 0; i < w_exposed.size(); ++i) {
    if (w_exposed[i])
      counts.n1[classes.class_of[i]]++;
    else
      counts.n0[classes.class_of[i]]++;
  }
  return counts;
}

}  // namespace

Eigen::MatrixXd build_design(const ExperimentData& data,
                             const Eigen::VectorXi& treatment,
                             const RegressorSpec& spec) {
  if (spec.terms.empty()) throw std::runtime_error("empty regressor spec");
  bool needs_exposure = false;
  for (const auto& t : spec.terms) needs_exposure |= spec_uses_exposure(t);
  Eigen::VectorXi exposure =
      needs_exposure ? compute_exposure(data.out_edges, treatment)
                     : Eigen::VectorXi();
  Eigen::MatrixXd design(data.n_units, spec.terms.size());
  for (std::size_t c = 0; c < spec.terms.size(); ++c)
    design.col(c) = eval_term(spec.terms[c], data, treatment, exposure);
  return design;
}

Eigen::VectorXd tau1_weights(const Eigen::VectorXi& treatment) {
  const int n = static_cast<int>(treatment.size());
  const int n1 = treatment.sum();
  const int n0 = n - n1;
  if (n1 == 0 || n0 == 0)
    throw std::runtime_error("tau1_weights: degenerate arm (all treated or all control)");
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i)
    w[i] = treatment[i] ? 1.0 / n1 : -1.0 / n0;
  return w;
}

Eigen::VectorXd regression_weights_from_design(const Eigen::MatrixXd& design,
                                               const Eigen::VectorXd& contrast) {
  if (contrast.size() != design.cols())
    throw std::runtime_error("contrast length does not match design columns");
  const Eigen::MatrixXd gram = design.transpose() * design;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (lmin <= 0.0 || lmax / lmin > 1e12) {
    const double cond = (lmin > 0.0) ? lmax / lmin
                                     : std::numeric_limits<double>::infinity();
    throw std::runtime_error("singular design (Gram condition number " +
                             std::to_string(cond) + ")");
  }
  return design * gram.ldlt().solve(contrast);
}

Eigen::VectorXd regression_weights(const RegressorSpec& spec,
                                   const ExperimentData& data,
                                   const Eigen::VectorXi& treatment) {
  return regression_weights_from_design(build_design(data, treatment, spec),
                                        spec.contrast);
}

Eigen::VectorXd beta_adj_weights(const Eigen::VectorXi& z,
                                 const PropensityClasses& classes) {
  const int n = static_cast<int>(z.size());
  const int k = classes.n_classes();
  std::vector<double> zeta(k, 0.0);
  for (int i = 0; i < n; ++i) zeta[classes.class_of[i]] += z[i];
  for (int c = 0; c < k; ++c) zeta[c] /= classes.sizes[c];
  Eigen::VectorXd centered(n);
  for (int i = 0; i < n; ++i) centered[i] = z[i] - zeta[classes.class_of[i]];
  const double denom = centered.squaredNorm();
  if (denom <= 0.0)
    throw std::runtime_error("beta_adj_weights: zero within-class exposure variance");
  return centered / denom;
}

Eigen::VectorXd effect_curve_weights(const Eigen::VectorXi& z,
                                     const PropensityClasses& classes, int d) {
  const int n = static_cast<int>(z.size());
  if (d == 0) return Eigen::VectorXd::Zero(n);

  std::vector<int> levels(z.data(), z.data() + n);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  auto level_index = [&](int value) {
    auto it = std::lower_bound(levels.begin(), levels.end(), value);
    if (it == levels.end() || *it != value) return -1;
    return static_cast<int>(it - levels.begin());
  };
  if (level_index(d) < 0)
    throw std::runtime_error("effect_curve_weights: level " + std::to_string(d) +
                             " not occupied");
  if (level_index(0) < 0)
    throw std::runtime_error("effect_curve_weights: level 0 not occupied");

  const int n_levels = static_cast<int>(levels.size());
  const int k = classes.n_classes();
  const int n_class_cols = k - 1;  // drop the last class indicator
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, n_levels + n_class_cols);
  for (int i = 0; i < n; ++i) {
    design(i, level_index(z[i])) = 1.0;
    const int c = classes.class_of[i];
    if (c < n_class_cols) design(i, n_levels + c) = 1.0;
  }
  Eigen::VectorXd contrast = Eigen::VectorXd::Zero(n_levels + n_class_cols);
  contrast[level_index(d)] = 1.0;
  contrast[level_index(0)] = -1.0;
  return regression_weights_from_design(design, contrast);
}

Eigen::VectorXd weighted_contrast_weights(const Eigen::VectorXi& w_exposed,
                                          const PropensityClasses& classes,
                                          std::vector<std::string>* warnings) {
  const int n = static_cast<int>(w_exposed.size());
  auto counts = arm_counts(w_exposed, classes);
  long n_retained = 0;
  std::vector<bool> retained(classes.n_classes(), false);
  for (int c = 0; c < classes.n_classes(); ++c) {
    if (counts.n1[c] >= 1 && counts.n0[c] >= 1) {
      retained[c] = true;
      n_retained += classes.sizes[c];
    } else if (warnings) {
      warnings->push_back("class " + std::to_string(c) +
                          " excluded (empty exposure arm)");
    }
  }
  if (n_retained == 0)
    throw std::runtime_error("weighted_contrast_weights: no retainable class");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const int c = classes.class_of[i];
    if (!retained[c]) continue;
    const double scale = static_cast<double>(classes.sizes[c]) / n_retained;
    w[i] = scale * (w_exposed[i] ? 1.0 / counts.n1[c] : -1.0 / counts.n0[c]);
  }
  return w;
}

std::pair<Eigen::VectorXd, MatchingDescription> matched_contrast_weights(
    const Eigen::VectorXi& w_exposed, const PropensityClasses& classes,
    std::uint64_t rng_seed) {
  const int n = static_cast<int>(w_exposed.size());
  auto counts = arm_counts(w_exposed, classes);
  int m = 0;
  for (int c = 0; c < classes.n_classes(); ++c)
    m += std::min(counts.n1[c], counts.n0[c]);
  if (m == 0)
    throw std::runtime_error("matched_contrast_weights: no matched pairs (m=0)");

  Rng rng(rng_seed);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  MatchingDescription desc;
  desc.n_pairs = m;
  std::vector<std::vector<int>> exposed(classes.n_classes()),
      unexposed(classes.n_classes());
  for (int i = 0; i < n; ++i)
    (w_exposed[i] ? exposed : unexposed)[classes.class_of[i]].push_back(i);
  for (int c = 0; c < classes.n_classes(); ++c) {
    const int mk = std::min(counts.n1[c], counts.n0[c]);
    if (mk == 0) continue;
    for (auto* arm : {&exposed[c], &unexposed[c]}) {
      auto& idx = *arm;
      // select mk units uniformly without replacement
      for (int t = 0; t < mk; ++t) {
        std::uniform_int_distribution<int> pick(t, static_cast<int>(idx.size()) - 1);
        std::swap(idx[t], idx[pick(rng)]);
      }
      idx.resize(mk);
      for (int i : idx) {
        w[i] = (arm == &exposed[c]) ? 1.0 / m : -1.0 / m;
        desc.matched_units.push_back(i);
      }
    }
  }
  std::sort(desc.matched_units.begin(), desc.matched_units.end());
  return {w, desc};
}

Eigen::VectorXd expected_matched_weights(const Eigen::VectorXi& w_exposed,
                                         const PropensityClasses& classes) {
  const int n = static_cast<int>(w_exposed.size());
  auto counts = arm_counts(w_exposed, classes);
  int m = 0;
  std::vector<int> mk(classes.n_classes());
  for (int c = 0; c < classes.n_classes(); ++c) {
    mk[c] = std::min(counts.n1[c], counts.n0[c]);
    m += mk[c];
  }
  if (m == 0)
    throw std::runtime_error("expected_matched_weights: no matched pairs (m=0)");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const int c = classes.class_of[i];
    if (mk[c] == 0) continue;
    const double scale = static_cast<double>(mk[c]) / m;
    w[i] = scale * (w_exposed[i] ? 1.0 / counts.n1[c] : -1.0 / counts.n0[c]);
  }
  return w;
}

Eigen::VectorXd WeightScheme::build(const ExperimentData& data,
                                    const Eigen::VectorXi& treatment) const {
  switch (kind) {
    case Kind::Tau1:
      return tau1_weights(treatment);
    case Kind::Regression:
      return regression_weights(spec, data, treatment);
    case Kind::BetaAdj:
      return beta_adj_weights(compute_exposure(data.out_edges, treatment), classes);
    case Kind::EffectCurve:
      return effect_curve_weights(compute_exposure(data.out_edges, treatment),
                                  classes, level_d);
    case Kind::Weighted:
      return weighted_contrast_weights(
          threshold_exposure(compute_exposure(data.out_edges, treatment), z_min),
          classes);
    case Kind::Matched:
      return matched_contrast_weights(
                 threshold_exposure(compute_exposure(data.out_edges, treatment),
                                    z_min),
                 classes, match_seed)
          .first;
    case Kind::ExpectedMatched:
      return expected_matched_weights(
          threshold_exposure(compute_exposure(data.out_edges, treatment), z_min),
          classes);
  }
  throw std::logic_error("unreachable");
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> WeightScheme::design(
    const ExperimentData& data, const Eigen::VectorXi& treatment) const {
  switch (kind) {
    case Kind::Regression:
      return {build_design(data, treatment, spec), spec.contrast};
    case Kind::BetaAdj: {
      const int n = data.n_units;
      const int k = classes.n_classes();
      Eigen::VectorXi z = compute_exposure(data.out_edges, treatment);
      Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, k + 1);
      for (int i = 0; i < n; ++i) {
        design(i, classes.class_of[i]) = 1.0;
        design(i, k) = z[i];
      }
      Eigen::VectorXd contrast = Eigen::VectorXd::Zero(k + 1);
      contrast[k] = 1.0;
      return {design, contrast};
    }
    case Kind::EffectCurve: {
      const int n = data.n_units;
      int d_cap = 0;
      for (int i = 0; i < n; ++i) d_cap = std::max(d_cap, data.out_degree(i));
      Eigen::VectorXi z = compute_exposure(data.out_edges, treatment);
      const int k = classes.n_classes();
      const int n_class_cols = k - 1;
      Eigen::MatrixXd design =
          Eigen::MatrixXd::Zero(n, d_cap + 1 + n_class_cols);
      for (int i = 0; i < n; ++i) {
        design(i, z[i]) = 1.0;
        if (classes.class_of[i] < n_class_cols)
          design(i, d_cap + 1 + classes.class_of[i]) = 1.0;
      }
      Eigen::VectorXd contrast = Eigen::VectorXd::Zero(d_cap + 1 + n_class_cols);
      contrast[level_d] = 1.0;
      contrast[0] -= 1.0;
      return {design, contrast};
    }
    default:
      throw std::runtime_error("design(): scheme is not regression-type");
  }
}

WeightScheme make_tau1_scheme() {
  WeightScheme s;
  s.kind = WeightScheme::Kind::Tau1;
  s.name = "tau1";
  return s;
}

WeightScheme make_regression_scheme(RegressorSpec spec, std::string name) {
  WeightScheme s;
  s.kind = WeightScheme::Kind::Regression;
  s.name = std::move(name);
  s.spec = std::move(spec);
  return s;
}

WeightScheme make_beta_adj_scheme(PropensityClasses classes) {
  WeightScheme s;
  s.kind = WeightScheme::Kind::BetaAdj;
  s.name = "beta_adj";
  s.classes = std::move(classes);
  return s;
}

WeightScheme make_effect_curve_scheme(PropensityClasses classes, int d) {
  WeightScheme s;
  s.kind = WeightScheme::Kind::EffectCurve;
  s.name = "gamma_" + std::to_string(d) + "-gamma_0";
  s.classes = std::move(classes);
  s.level_d = d;
  return s;
}

WeightScheme make_weighted_scheme(PropensityClasses classes, int z_min) {
  WeightScheme s;
  s.kind = WeightScheme::Kind::Weighted;
  s.name = "tau_weighted";
  s.classes = std::move(classes);
  s.z_min = z_min;
  return s;
}

WeightScheme make_matched_scheme(PropensityClasses classes, int z_min,
                                 std::uint64_t seed) {
  WeightScheme s;
  s.kind = WeightScheme::Kind::Matched;
  s.name = "tau_matched";
  s.classes = std::move(classes);
  s.z_min = z_min;
  s.match_seed = seed;
  return s;
}

WeightScheme make_expected_matched_scheme(PropensityClasses classes, int z_min) {
  WeightScheme s;
  s.kind = WeightScheme::Kind::ExpectedMatched;
  s.name = "E_tau_matched";
  s.classes = std::move(classes);
  s.z_min = z_min;
  return s;
}

}  // namespace attrib
