#include "attrib/exposure.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace attrib {

Eigen::VectorXi compute_exposure(const std::vector<std::vector<int>>& out_edges,
                                 const Eigen::VectorXi& treatment) {
  const int n = static_cast<int>(out_edges.size());
  if (treatment.size() != n)
    throw std::runtime_error("compute_exposure: treatment length mismatch");
  Eigen::VectorXi z = Eigen::VectorXi::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j : out_edges[i]) z[i] += treatment[j];
  return z;
}

Eigen::VectorXi threshold_exposure(const Eigen::VectorXi& z, int z_min) {
  if (z_min < 0) throw std::runtime_error("threshold_exposure: z_min must be >= 0");
  Eigen::VectorXi w(z.size());
  for (int i = 0; i < z.size(); ++i) w[i] = (z[i] >= z_min) ? 1 : 0;
  return w;
}

PropensityClasses build_propensity_classes(const ExperimentData& data,
                                           const std::vector<std::string>& keys) {
  if (keys.empty())
    throw std::runtime_error("build_propensity_classes: empty key list");
  const int n = data.n_units;
  std::vector<std::vector<double>> tuples(n);
  std::string desc;
  for (const auto& key : keys) {
    if (!desc.empty()) desc += " x ";
    desc += key;
    if (key == "out-degree") {
      for (int i = 0; i < n; ++i) tuples[i].push_back(data.out_degree(i));
    } else {
      auto it = data.covariates.find(key);
      if (it == data.covariates.end())
        throw std::runtime_error("unknown propensity key '" + key + "'");
      for (int i = 0; i < n; ++i) tuples[i].push_back(it->second[i]);
    }
  }
  std::map<std::vector<double>, int> index;
  for (const auto& t : tuples) index.emplace(t, 0);
  int k = 0;
  for (auto& [_, idx] : index) idx = k++;

  PropensityClasses classes;
  classes.class_of.resize(n);
  classes.sizes.assign(k, 0);
  classes.key_description = desc;
  for (int i = 0; i < n; ++i) {
    classes.class_of[i] = index[tuples[i]];
    classes.sizes[classes.class_of[i]]++;
  }
  return classes;
}

PropensityClasses single_class(int n_units) {
  PropensityClasses classes;
  classes.class_of = Eigen::VectorXi::Zero(n_units);
  classes.sizes = {n_units};
  classes.key_description = "(all units)";
  return classes;
}

std::vector<std::vector<int>> cap_degree(
    const std::vector<std::vector<int>>& out_edges, int d_max) {
  if (d_max < 0) throw std::runtime_error("cap_degree: d_max must be >= 0");
  const int n = static_cast<int>(out_edges.size());
  std::vector<std::vector<int>> capped(n);
  for (int i = 0; i < n; ++i) {
    auto adj = out_edges[i];
    std::sort(adj.begin(), adj.end());
    if (static_cast<int>(adj.size()) > d_max) adj.resize(d_max);
    capped[i] = std::move(adj);
  }
  // drop in-edges beyond d_max, keeping lowest-source edges
  std::vector<int> in_degree(n, 0);
  std::vector<std::vector<int>> result(n);
  for (int src = 0; src < n; ++src)
    for (int dst : capped[src])
      if (in_degree[dst] < d_max) {
        in_degree[dst]++;
        result[src].push_back(dst);
      }
  return result;
}

}  // namespace attrib
