#include "attrib/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace attrib {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim whitespace and CR
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("cannot parse number '" + s + "' in " + context);
  }
}

}  // namespace

void ExperimentData::validate() const {
  if (outcomes.size() != n_units || treatment.size() != n_units)
    throw std::runtime_error("outcomes/treatment length does not match n_units");
  if (static_cast<int>(out_edges.size()) != n_units)
    throw std::runtime_error("network size does not match n_units");
  for (int i = 0; i < n_units; ++i) {
    if (treatment[i] != 0 && treatment[i] != 1)
      throw std::runtime_error("non-binary treatment at unit " + std::to_string(i));
    if (outcomes[i] < 0.0 || outcomes[i] > 1.0)
      throw std::runtime_error("outcome outside [0,1] at unit " + std::to_string(i));
    for (int j : out_edges[i]) {
      if (j < 0 || j >= n_units)
        throw std::runtime_error("dangling endpoint: edge " + std::to_string(i) +
                                 "->" + std::to_string(j));
      if (j == i)
        throw std::runtime_error("self-loop at unit " + std::to_string(i));
    }
  }
  if (counterfactual) {
    if (counterfactual->size() != n_units)
      throw std::runtime_error("counterfactual length does not match n_units");
    for (int i = 0; i < n_units; ++i)
      if ((*counterfactual)[i] != 0 && (*counterfactual)[i] != 1)
        throw std::runtime_error("non-binary counterfactual at unit " +
                                 std::to_string(i));
  }
  for (const auto& [name, col] : covariates)
    if (col.size() != n_units)
      throw std::runtime_error("covariate '" + name + "' length mismatch");
}

std::string ExperimentData::canonical_bytes() const {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << n_units << "\n";
  for (int i = 0; i < n_units; ++i)
    os << outcomes[i] << "," << treatment[i] << "\n";
  for (int i = 0; i < n_units; ++i) {
    os << i << ":";
    for (int j : out_edges[i]) os << j << ",";
    os << "\n";
  }
  for (const auto& [name, col] : covariates) {
    os << "cov " << name << ":";
    for (int i = 0; i < n_units; ++i) os << col[i] << ",";
    os << "\n";
  }
  if (counterfactual) {
    os << "theta:";
    for (int i = 0; i < n_units; ++i) os << (*counterfactual)[i] << ",";
    os << "\n";
  }
  return os.str();
}

ExperimentData load_experiment(const std::string& unit_csv_path,
                               const std::string& edge_csv_path,
                               const CsvSchema& schema,
                               std::vector<std::string>* warnings) {
  auto unit_rows = read_csv(unit_csv_path);
  if (unit_rows.empty()) throw std::runtime_error("empty unit file: " + unit_csv_path);
  const auto& header = unit_rows.front();
  std::map<std::string, int> col;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) col[header[c]] = c;

  auto require = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end())
      throw std::runtime_error("missing column '" + name + "' in " + unit_csv_path);
    return it->second;
  };

  const int yc = require(schema.outcome_column);
  const int xc = require(schema.treatment_column);
  const int n = static_cast<int>(unit_rows.size()) - 1;

  ExperimentData data;
  data.n_units = n;
  data.outcomes.resize(n);
  data.treatment.resize(n);
  data.out_edges.assign(n, {});

  std::vector<std::string> covariate_names = schema.covariate_columns;
  if (covariate_names.empty()) {
    for (const auto& h : header)
      if (h != schema.outcome_column && h != schema.treatment_column &&
          h != schema.theta_column)
        covariate_names.push_back(h);
  } else {
    for (const auto& name : covariate_names) require(name);
  }

  const bool has_theta = col.count(schema.theta_column) > 0;
  Eigen::VectorXi theta(n);

  for (const auto& name : covariate_names) data.covariates[name] = Eigen::VectorXd(n);

  for (int i = 0; i < n; ++i) {
    const auto& row = unit_rows[i + 1];
    auto cell = [&](int c) -> const std::string& {
      if (c >= static_cast<int>(row.size()))
        throw std::runtime_error("short row " + std::to_string(i + 2) + " in " +
                                 unit_csv_path);
      return row[c];
    };
    data.outcomes[i] = parse_double(cell(yc), "outcome column");
    double x = parse_double(cell(xc), "treatment column");
    if (x != 0.0 && x != 1.0)
      throw std::runtime_error("non-binary treatment '" + cell(xc) + "' at row " +
                               std::to_string(i + 2));
    data.treatment[i] = static_cast<int>(x);
    if (has_theta) {
      double t = parse_double(cell(col[schema.theta_column]), "theta column");
      if (t != 0.0 && t != 1.0)
        throw std::runtime_error("non-binary theta at row " + std::to_string(i + 2));
      theta[i] = static_cast<int>(t);
    }
    for (const auto& name : covariate_names)
      data.covariates[name][i] = parse_double(cell(col[name]), "covariate " + name);
  }
  if (has_theta) data.counterfactual = theta;

  auto edge_rows = read_csv(edge_csv_path);
  std::size_t start = 0;
  if (!edge_rows.empty()) {
    // optional header
    const auto& r0 = edge_rows[0];
    if (!r0.empty() && (r0[0] == "src" || r0[0] == "source")) start = 1;
  }
  std::set<std::pair<int, int>> seen;
  int duplicates = 0;
  for (std::size_t r = start; r < edge_rows.size(); ++r) {
    const auto& row = edge_rows[r];
    if (row.size() < 2)
      throw std::runtime_error("edge row " + std::to_string(r + 1) + " needs src,dst");
    int src = static_cast<int>(parse_double(row[0], "edge src"));
    int dst = static_cast<int>(parse_double(row[1], "edge dst"));
    if (src < 0 || src >= n || dst < 0 || dst >= n)
      throw std::runtime_error("dangling endpoint: edge " + std::to_string(src) +
                               "->" + std::to_string(dst));
    if (src == dst)
      throw std::runtime_error("self-loop at unit " + std::to_string(src));
    if (!seen.insert({src, dst}).second) {
      ++duplicates;
      continue;
    }
    data.out_edges[src].push_back(dst);
  }
  if (duplicates > 0 && warnings)
    warnings->push_back("dropped " + std::to_string(duplicates) + " duplicate edges");
  for (auto& adj : data.out_edges) std::sort(adj.begin(), adj.end());

  data.validate();
  return data;
}

void symmetrize_network(ExperimentData& data) {
  for (int i = 0; i < data.n_units; ++i)
    for (int j : data.out_edges[i])
      data.out_edges[j].push_back(i);
  for (auto& adj : data.out_edges) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
}

void AggregateTable::validate() const {
  if (rows.empty()) throw std::runtime_error("empty aggregate table");
  for (const auto& r : rows) {
    if (r.size <= 0)
      throw std::runtime_error("aggregate row for group '" + r.group +
                               "' has non-positive size");
    if (r.events < 0 || r.events > r.size)
      throw std::runtime_error("aggregate row for group '" + r.group +
                               "': count > size");
  }
}

AggregateTable load_aggregate(const std::string& csv_path) {
  auto rows = read_csv(csv_path);
  if (rows.size() < 2) throw std::runtime_error("empty aggregate file: " + csv_path);
  const auto& header = rows[0];
  std::map<std::string, int> col;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) col[header[c]] = c;
  for (const char* name : {"group", "arm", "events", "size"})
    if (!col.count(name))
      throw std::runtime_error(std::string("missing column '") + name + "' in " +
                               csv_path);
  AggregateTable table;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    AggregateRow a;
    a.group = row[col["group"]];
    const std::string& arm = row[col["arm"]];
    if (arm == "treated")
      a.treated = true;
    else if (arm == "control")
      a.treated = false;
    else
      throw std::runtime_error("arm must be 'treated' or 'control', got '" + arm + "'");
    a.events = static_cast<long>(parse_double(row[col["events"]], "events"));
    a.size = static_cast<long>(parse_double(row[col["size"]], "size"));
    table.rows.push_back(a);
  }
  table.validate();
  return table;
}

ExperimentData expand_aggregate(const AggregateTable& table) {
  table.validate();
  // group-major in first-appearance order; treated arm before control
  std::vector<std::string> group_order;
  for (const auto& r : table.rows)
    if (std::find(group_order.begin(), group_order.end(), r.group) ==
        group_order.end())
      group_order.push_back(r.group);

  long n = 0;
  for (const auto& r : table.rows) n += r.size;

  ExperimentData data;
  data.n_units = static_cast<int>(n);
  data.outcomes.resize(n);
  data.treatment.resize(n);
  data.out_edges.assign(n, {});
  Eigen::VectorXd group_code(n);
  std::map<std::string, Eigen::VectorXd> indicators;
  for (const auto& g : group_order)
    indicators["group:" + g] = Eigen::VectorXd::Zero(n);

  long pos = 0;
  for (std::size_t gi = 0; gi < group_order.size(); ++gi) {
    for (int arm = 1; arm >= 0; --arm) {  // treated first
      for (const auto& r : table.rows) {
        if (r.group != group_order[gi] || static_cast<int>(r.treated) != arm) continue;
        for (long u = 0; u < r.size; ++u, ++pos) {
          data.outcomes[pos] = (u < r.events) ? 1.0 : 0.0;  // events first
          data.treatment[pos] = arm;
          group_code[pos] = static_cast<double>(gi);
          indicators["group:" + r.group][pos] = 1.0;
        }
      }
    }
  }
  data.covariates["group"] = group_code;
  for (auto& [name, col_] : indicators) data.covariates[name] = col_;
  data.validate();
  return data;
}

AggregateTable reaggregate(const ExperimentData& data) {
  auto it = data.covariates.find("group");
  if (it == data.covariates.end())
    throw std::runtime_error("reaggregate: no 'group' covariate");
  const Eigen::VectorXd& g = it->second;

  // recover labels from indicator columns if present
  std::map<int, std::string> labels;
  for (const auto& [name, col] : data.covariates) {
    if (name.rfind("group:", 0) != 0) continue;
    for (int i = 0; i < data.n_units; ++i)
      if (col[i] == 1.0) {
        labels[static_cast<int>(g[i])] = name.substr(6);
        break;
      }
  }

  std::map<std::pair<int, int>, std::pair<long, long>> cells;  // (group, arm) -> (events, size)
  for (int i = 0; i < data.n_units; ++i) {
    auto& cell = cells[{static_cast<int>(g[i]), data.treatment[i]}];
    cell.first += static_cast<long>(std::lround(data.outcomes[i]));
    cell.second += 1;
  }
  AggregateTable table;
  std::set<int> groups;
  for (const auto& [key, _] : cells) groups.insert(key.first);
  for (int gi : groups) {
    for (int arm = 1; arm >= 0; --arm) {
      auto it2 = cells.find({gi, arm});
      if (it2 == cells.end()) continue;
      AggregateRow r;
      r.group = labels.count(gi) ? labels[gi] : std::to_string(gi);
      r.treated = (arm == 1);
      r.events = it2->second.first;
      r.size = it2->second.second;
      table.rows.push_back(r);
    }
  }
  return table;
}

void DesignDescriptor::validate(int n_units) const {
  switch (kind) {
    case Kind::Bernoulli:
      if (!(rho > 0.0 && rho < 1.0))
        throw std::runtime_error("bernoulli design requires rho in (0,1)");
      break;
    case Kind::Srs:
      if (!(n1 > 0 && n1 < n_units))
        throw std::runtime_error("srs design requires 0 < N1 < N");
      break;
    case Kind::StratifiedSrs: {
      if (static_cast<int>(strata.size()) != n_units)
        throw std::runtime_error("stratified design: strata length mismatch");
      std::vector<int> sizes;
      for (int s : strata) {
        if (s < 0) throw std::runtime_error("negative stratum index");
        if (s >= static_cast<int>(sizes.size())) sizes.resize(s + 1, 0);
        sizes[s]++;
      }
      if (strata_n1.size() != sizes.size())
        throw std::runtime_error("stratified design: strata_n1 size mismatch");
      for (std::size_t s = 0; s < sizes.size(); ++s)
        if (strata_n1[s] < 0 || strata_n1[s] > sizes[s])
          throw std::runtime_error("stratified design: invalid per-stratum count");
      break;
    }
    case Kind::ExternalReplications:
      if (replications.empty())
        throw std::runtime_error("external design requires at least one replication");
      for (const auto& x : replications)
        if (x.size() != n_units)
          throw std::runtime_error("external replication length mismatch");
      break;
  }
}

Eigen::VectorXi draw_treatment(const DesignDescriptor& design, int n_units,
                               Rng& rng, long index) {
  Eigen::VectorXi x = Eigen::VectorXi::Zero(n_units);
  switch (design.kind) {
    case DesignDescriptor::Kind::Bernoulli: {
      std::bernoulli_distribution coin(design.rho);
      for (int i = 0; i < n_units; ++i) x[i] = coin(rng) ? 1 : 0;
      break;
    }
    case DesignDescriptor::Kind::Srs: {
      // partial Fisher-Yates over unit indices
      std::vector<int> idx(n_units);
      std::iota(idx.begin(), idx.end(), 0);
      for (int k = 0; k < design.n1; ++k) {
        std::uniform_int_distribution<int> pick(k, n_units - 1);
        std::swap(idx[k], idx[pick(rng)]);
        x[idx[k]] = 1;
      }
      break;
    }
    case DesignDescriptor::Kind::StratifiedSrs: {
      std::vector<std::vector<int>> members(design.strata_n1.size());
      for (int i = 0; i < n_units; ++i) members[design.strata[i]].push_back(i);
      for (std::size_t s = 0; s < members.size(); ++s) {
        auto& idx = members[s];
        const int m = static_cast<int>(idx.size());
        for (int k = 0; k < design.strata_n1[s]; ++k) {
          std::uniform_int_distribution<int> pick(k, m - 1);
          std::swap(idx[k], idx[pick(rng)]);
          x[idx[k]] = 1;
        }
      }
      break;
    }
    case DesignDescriptor::Kind::ExternalReplications:
      x = design.replications[index % design.replications.size()];
      break;
  }
  return x;
}

}  // namespace attrib
