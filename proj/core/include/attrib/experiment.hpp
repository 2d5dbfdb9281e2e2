#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attrib/stats.hpp"

namespace attrib {

/// Unit-level experiment data. Immutable after construction; row order in the
/// source file defines unit indices. The network is stored directed, edge
/// i -> j meaning j is a neighbor whose treatment i is exposed to.
struct ExperimentData {
  int n_units = 0;
  Eigen::VectorXd outcomes;   // values in [0,1]; binary in the default mode
  Eigen::VectorXi treatment;  // {0,1}
  std::vector<std::vector<int>> out_edges;  // sorted, deduplicated
  std::map<std::string, Eigen::VectorXd> covariates;
  std::optional<Eigen::VectorXi> counterfactual;  // theta, simulation only

  int n_treated() const { return treatment.sum(); }
  int out_degree(int i) const { return static_cast<int>(out_edges[i].size()); }

  /// Throws std::runtime_error on any invariant violation.
  void validate() const;

  /// Canonical byte serialization, used for determinism checks and cache keys.
  std::string canonical_bytes() const;
};

struct CsvSchema {
  std::string outcome_column = "y";
  std::string treatment_column = "x";
  std::string theta_column = "theta";  // loaded if present
  std::vector<std::string> covariate_columns;  // empty = all remaining columns
};

/// Loads unit and edge CSVs. The unit file must have a header row; the edge
/// file has columns src,dst with zero-based indices. Duplicate edges are
/// dropped with a warning pushed onto `warnings` (if non-null).
ExperimentData load_experiment(const std::string& unit_csv_path,
                               const std::string& edge_csv_path,
                               const CsvSchema& schema = {},
                               std::vector<std::string>* warnings = nullptr);

/// Expands an undirected edge list by adding both directions; applied when the
/// caller declares the input undirected.
void symmetrize_network(ExperimentData& data);

struct AggregateRow {
  std::string group;
  bool treated = false;
  long events = 0;
  long size = 0;
};

struct AggregateTable {
  std::vector<AggregateRow> rows;
  void validate() const;
};

AggregateTable load_aggregate(const std::string& csv_path);

/// Expands aggregate counts into unit-level data: group-major, treated arm
/// before control, event units first within each block. The group label is
/// stored as covariate "group" (dense codes) plus per-group indicator columns
/// "group:<label>".
ExperimentData expand_aggregate(const AggregateTable& table);

/// Inverse of expand_aggregate over (group, arm); used for round-trip checks.
AggregateTable reaggregate(const ExperimentData& data);

struct DesignDescriptor {
  enum class Kind { Bernoulli, Srs, StratifiedSrs, ExternalReplications };
  Kind kind = Kind::Srs;
  double rho = 0.5;  // Bernoulli
  int n1 = 0;        // Srs
  std::vector<int> strata;     // per-unit stratum index (StratifiedSrs)
  std::vector<int> strata_n1;  // treated count per stratum
  std::vector<Eigen::VectorXi> replications;  // ExternalReplications
  std::uint64_t seed = 0;

  void validate(int n_units) const;
};

/// Draws one treatment assignment from the design. For external replications,
/// `index` selects the replication (cyclically); other kinds consume `rng`.
Eigen::VectorXi draw_treatment(const DesignDescriptor& design, int n_units,
                               Rng& rng, long index = 0);

}  // namespace attrib
