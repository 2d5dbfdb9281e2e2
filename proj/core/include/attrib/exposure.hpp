#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "attrib/experiment.hpp"

namespace attrib {

/// Per-unit count of treated out-neighbors: Z_i = sum over edges i->j of X_j.
Eigen::VectorXi compute_exposure(const std::vector<std::vector<int>>& out_edges,
                                 const Eigen::VectorXi& treatment);

/// W_i = 1{Z_i >= z_min}.
Eigen::VectorXi threshold_exposure(const Eigen::VectorXi& z, int z_min);

/// Partition of units into propensity classes. Class indices are dense,
/// 0..K-1, ordered by sorted key tuple.
struct PropensityClasses {
  Eigen::VectorXi class_of;   // length N
  std::vector<int> sizes;     // length K
  std::string key_description;

  int n_classes() const { return static_cast<int>(sizes.size()); }
};

/// Builds classes from the distinct tuples of the given keys. A key is a
/// covariate column name or "out-degree".
PropensityClasses build_propensity_classes(const ExperimentData& data,
                                           const std::vector<std::string>& keys);

/// Trivial single-class partition.
PropensityClasses single_class(int n_units);

/// Caps in- and out-degree at d_max: keeps each unit's d_max lowest-index
/// out-edges, then drops in-edges beyond d_max by the same lowest-source rule.
std::vector<std::vector<int>> cap_degree(
    const std::vector<std::vector<int>>& out_edges, int d_max);

}  // namespace attrib
