#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "attrib/experiment.hpp"
#include "attrib/exposure.hpp"

namespace attrib {

/// One regressor term. Interaction multiplies its two factor terms
/// elementwise (factors themselves must not be interactions).
struct Term {
  enum class Kind {
    Constant,
    OwnTreatment,  // X_i
    Exposure,      // Z_i
    Thresholded,   // 1{Z_i >= z_min}
    Covariate,     // fixed column (also used for expectation-control columns)
    Interaction
  };
  Kind kind = Kind::Constant;
  std::string column;  // Covariate
  int z_min = 1;       // Thresholded
  std::vector<Term> factors;  // Interaction: exactly 2
};

struct RegressorSpec {
  std::vector<Term> terms;
  Eigen::VectorXd contrast;  // c, length = terms.size()
};

/// Evaluates the design matrix (N x d) for a treatment draw. Exposure terms
/// recompute Z from the network and the given draw.
Eigen::MatrixXd build_design(const ExperimentData& data,
                             const Eigen::VectorXi& treatment,
                             const RegressorSpec& spec);

/// w_i = X_i/N1 - (1-X_i)/N0. Errors on degenerate arms.
Eigen::VectorXd tau1_weights(const Eigen::VectorXi& treatment);

/// w_i = c^T (sum_j xi_j xi_j^T)^{-1} xi_i. Rejects designs whose Gram matrix
/// condition number exceeds 1e12.
Eigen::VectorXd regression_weights(const RegressorSpec& spec,
                                   const ExperimentData& data,
                                   const Eigen::VectorXi& treatment);

/// Weights from a precomputed design matrix and contrast.
Eigen::VectorXd regression_weights_from_design(const Eigen::MatrixXd& design,
                                               const Eigen::VectorXd& contrast);

/// w_i = (Z_i - zeta_{k(i)}) / sum_j (Z_j - zeta_{k(j)})^2, zeta_k the class
/// mean of Z.
Eigen::VectorXd beta_adj_weights(const Eigen::VectorXi& z,
                                 const PropensityClasses& classes);

/// Weights reproducing the contrast gamma_d - gamma_0 from least squares on
/// exposure-level indicators plus class indicators (last class dropped).
Eigen::VectorXd effect_curve_weights(const Eigen::VectorXi& z,
                                     const PropensityClasses& classes, int d);

/// Class-size weighted exposed/unexposed contrast. Classes with an empty arm
/// are excluded (noted in `warnings` if non-null) and the normalization is
/// recomputed over retained classes.
Eigen::VectorXd weighted_contrast_weights(const Eigen::VectorXi& w_exposed,
                                          const PropensityClasses& classes,
                                          std::vector<std::string>* warnings = nullptr);

struct MatchingDescription {
  int n_pairs = 0;
  std::vector<int> matched_units;
};

/// Random within-class pairing without replacement; matched exposed units get
/// +1/m, matched unexposed -1/m. Deterministic given the seed.
std::pair<Eigen::VectorXd, MatchingDescription> matched_contrast_weights(
    const Eigen::VectorXi& w_exposed, const PropensityClasses& classes,
    std::uint64_t rng_seed);

/// w_i = (m_{k(i)}/m) (W_i/n_{k1} - (1-W_i)/n_{k0}), m_k = min(n_{k1}, n_{k0}).
Eigen::VectorXd expected_matched_weights(const Eigen::VectorXi& w_exposed,
                                         const PropensityClasses& classes);

inline double point_estimate(const Eigen::VectorXd& w, const Eigen::VectorXd& y) {
  if (w.size() != y.size())
    throw std::runtime_error("point_estimate: length mismatch");
  return w.dot(y);
}

/// A named estimand: maps a treatment draw to its weight vector.
struct WeightScheme {
  enum class Kind {
    Tau1,
    Regression,
    BetaAdj,
    EffectCurve,
    Weighted,
    Matched,
    ExpectedMatched
  };
  Kind kind = Kind::Tau1;
  std::string name = "tau1";
  RegressorSpec spec;          // Regression
  PropensityClasses classes;   // class-based kinds
  int z_min = 1;               // Weighted / Matched / ExpectedMatched
  int level_d = 1;             // EffectCurve
  std::uint64_t match_seed = 0;

  Eigen::VectorXd build(const ExperimentData& data,
                        const Eigen::VectorXi& treatment) const;

  /// True for kinds expressible as a least-squares contrast (used by the
  /// moments module to compute the regression-form centering weights).
  bool is_regression_type() const {
    return kind == Kind::Regression || kind == Kind::BetaAdj ||
           kind == Kind::EffectCurve;
  }

  /// Design matrix and contrast for regression-type kinds. For EffectCurve
  /// the level set is fixed at 0..max out-degree so the dimension does not
  /// vary across draws (unoccupied levels give zero columns).
  std::pair<Eigen::MatrixXd, Eigen::VectorXd> design(
      const ExperimentData& data, const Eigen::VectorXi& treatment) const;
};

WeightScheme make_tau1_scheme();
WeightScheme make_regression_scheme(RegressorSpec spec, std::string name = "beta");
WeightScheme make_beta_adj_scheme(PropensityClasses classes);
WeightScheme make_effect_curve_scheme(PropensityClasses classes, int d);
WeightScheme make_weighted_scheme(PropensityClasses classes, int z_min);
WeightScheme make_matched_scheme(PropensityClasses classes, int z_min,
                                 std::uint64_t seed);
WeightScheme make_expected_matched_scheme(PropensityClasses classes, int z_min);

}  // namespace attrib
