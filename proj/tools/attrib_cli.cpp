// attrib: point estimates, prediction intervals, simulation, coverage
// studies, and direct access to the error-bound solver.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "attrib/estimands.hpp"
#include "attrib/experiment.hpp"
#include "attrib/exposure.hpp"
#include "attrib/intervals.hpp"
#include "attrib/moments.hpp"
#include "attrib/simulator.hpp"

using nlohmann::json;

namespace {

[[noreturn]] void die_missing(const std::string& path) {
  std::cerr << "error: input file not found: " << path << "\n";
  std::exit(2);
}

json read_json_file(const std::string& path) {
  if (!std::filesystem::exists(path)) die_missing(path);
  std::ifstream in(path);
  json j;
  in >> j;
  return j;
}

attrib::Term parse_term(const json& j) {
  attrib::Term t;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    t.kind = attrib::Term::Kind::Constant;
  } else if (kind == "own_treatment") {
    t.kind = attrib::Term::Kind::OwnTreatment;
  } else if (kind == "exposure") {
    t.kind = attrib::Term::Kind::Exposure;
  } else if (kind == "thresholded") {
    t.kind = attrib::Term::Kind::Thresholded;
    t.z_min = j.value("z_min", 1);
  } else if (kind == "covariate") {
    t.kind = attrib::Term::Kind::Covariate;
    t.column = j.at("column").get<std::string>();
  } else if (kind == "interaction") {
    t.kind = attrib::Term::Kind::Interaction;
    for (const auto& f : j.at("factors")) t.factors.push_back(parse_term(f));
  } else {
    throw std::runtime_error("unknown term kind '" + kind + "'");
  }
  return t;
}

struct NamedContrast {
  std::string name;
  Eigen::VectorXd c;
};

struct SchemeConfig {
  attrib::WeightScheme scheme;
  std::vector<NamedContrast> contrasts;  // regression only; may be empty
};

Eigen::VectorXd to_vec(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

SchemeConfig parse_scheme(const json& j, const attrib::ExperimentData& data) {
  SchemeConfig out;
  const std::string kind = j.value("kind", "tau1");
  auto classes_from = [&] {
    std::vector<std::string> keys =
        j.value("class_keys", std::vector<std::string>{"out-degree"});
    return attrib::build_propensity_classes(data, keys);
  };
  if (kind == "tau1") {
    out.scheme = attrib::make_tau1_scheme();
  } else if (kind == "regression") {
    attrib::RegressorSpec spec;
    for (const auto& t : j.at("terms")) spec.terms.push_back(parse_term(t));
    if (j.contains("contrasts")) {
      for (const auto& c : j["contrasts"])
        out.contrasts.push_back(
            {c.at("name").get<std::string>(), to_vec(c.at("c"))});
      spec.contrast = out.contrasts.front().c;
    } else {
      spec.contrast = to_vec(j.at("contrast"));
    }
    out.scheme = attrib::make_regression_scheme(spec, j.value("name", "beta"));
  } else if (kind == "beta_adj") {
    out.scheme = attrib::make_beta_adj_scheme(classes_from());
  } else if (kind == "effect_curve") {
    out.scheme =
        attrib::make_effect_curve_scheme(classes_from(), j.value("level_d", 1));
  } else if (kind == "weighted") {
    out.scheme =
        attrib::make_weighted_scheme(classes_from(), j.value("z_min", 1));
  } else if (kind == "matched") {
    out.scheme = attrib::make_matched_scheme(
        classes_from(), j.value("z_min", 1), j.value("match_seed", 0ULL));
  } else if (kind == "expected_matched") {
    out.scheme = attrib::make_expected_matched_scheme(classes_from(),
                                                      j.value("z_min", 1));
  } else {
    throw std::runtime_error("unknown scheme kind '" + kind + "'");
  }
  return out;
}

struct CommonOpts {
  std::string units_csv, edges_csv, aggregate_csv, scheme_json;
  std::string design_kind = "srs";
  int n1 = -1;  // -1: use observed treated count
  double rho = 0.5;
  long replications = 20000;
  std::uint64_t seed = 1;
  std::string format = "raw";  // raw | percent | per-thousand
  std::string output;
  int threads = 0;  // accepted for interface stability; modules run serially
};

double display_scale(const std::string& format) {
  if (format == "percent") return 100.0;
  if (format == "per-thousand") return 1000.0;
  return 1.0;
}

struct LoadedData {
  attrib::ExperimentData data;
  bool aggregate = false;
  std::vector<int> group_of;  // aggregate only
};

LoadedData load_data(const CommonOpts& opts) {
  LoadedData out;
  if (!opts.aggregate_csv.empty()) {
    if (!std::filesystem::exists(opts.aggregate_csv))
      die_missing(opts.aggregate_csv);
    const auto table = attrib::load_aggregate(opts.aggregate_csv);
    out.data = attrib::expand_aggregate(table);
    out.aggregate = true;
    const Eigen::VectorXd& g = out.data.covariates.at("group");
    out.group_of.resize(out.data.n_units);
    for (int i = 0; i < out.data.n_units; ++i)
      out.group_of[i] = static_cast<int>(g[i]);
  } else {
    if (!std::filesystem::exists(opts.units_csv)) die_missing(opts.units_csv);
    if (!std::filesystem::exists(opts.edges_csv)) die_missing(opts.edges_csv);
    out.data = attrib::load_experiment(opts.units_csv, opts.edges_csv);
  }
  return out;
}

attrib::DesignDescriptor make_design(const CommonOpts& opts,
                                     const attrib::ExperimentData& data) {
  attrib::DesignDescriptor d;
  d.seed = opts.seed;
  if (opts.design_kind == "srs") {
    d.kind = attrib::DesignDescriptor::Kind::Srs;
    d.n1 = opts.n1 >= 0 ? opts.n1 : data.n_treated();
  } else if (opts.design_kind == "bernoulli") {
    d.kind = attrib::DesignDescriptor::Kind::Bernoulli;
    d.rho = opts.rho;
  } else {
    throw std::runtime_error("unknown design '" + opts.design_kind + "'");
  }
  return d;
}

json resolved_common(const CommonOpts& opts,
                     const attrib::DesignDescriptor& design) {
  json j;
  j["design"] = {{"kind", opts.design_kind},
                 {"n1", design.n1},
                 {"rho", design.rho},
                 {"seed", opts.seed}};
  j["replications"] = opts.replications;
  j["format"] = opts.format;
  return j;
}

std::ostream& open_output(const CommonOpts& opts, std::ofstream& file) {
  if (opts.output.empty()) {
    std::cout.precision(12);
    return std::cout;
  }
  file.open(opts.output);
  if (!file) throw std::runtime_error("cannot open output " + opts.output);
  file.precision(12);
  return file;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_data = true) {
  if (with_data) {
    cmd->add_option("--units", opts.units_csv, "unit-level CSV");
    cmd->add_option("--edges", opts.edges_csv, "edge list CSV");
    cmd->add_option("--aggregate", opts.aggregate_csv,
                    "aggregate table CSV (group,arm,events,size)");
    cmd->add_option("--scheme", opts.scheme_json, "estimand scheme JSON");
    cmd->add_option("--design", opts.design_kind, "srs | bernoulli");
    cmd->add_option("--n1", opts.n1, "treated count for srs");
    cmd->add_option("--rho", opts.rho, "bernoulli treatment probability");
  }
  cmd->add_option("--replications", opts.replications, "MC replications");
  cmd->add_option("--seed", opts.seed, "base RNG seed");
  cmd->add_option("--format", opts.format, "raw | percent | per-thousand");
  cmd->add_option("--output", opts.output, "output path (default stdout)");
  cmd->add_option("--threads", opts.threads, "worker cap");
}

struct MomentBundle {
  std::optional<attrib::WeightMoments> dense;
  std::optional<attrib::GroupedMoments> grouped;
};

MomentBundle compute_moments(const attrib::WeightScheme& scheme,
                             const LoadedData& loaded,
                             const attrib::DesignDescriptor& design,
                             const CommonOpts& opts) {
  MomentBundle b;
  const bool groupable = loaded.aggregate &&
                         (scheme.kind == attrib::WeightScheme::Kind::Tau1 ||
                          scheme.kind == attrib::WeightScheme::Kind::Regression);
  if (groupable) {
    b.grouped = attrib::mc_grouped_moments(scheme, loaded.data, loaded.group_of,
                                           design, opts.replications, opts.seed);
  } else if (scheme.kind == attrib::WeightScheme::Kind::Tau1 &&
             design.kind == attrib::DesignDescriptor::Kind::Srs) {
    b.dense = attrib::analytic_tau1_moments(loaded.data.n_units, design.n1);
  } else {
    b.dense = attrib::mc_weight_moments(scheme, loaded.data, design,
                                        opts.replications, opts.seed);
  }
  return b;
}

int run_estimate(const CommonOpts& opts) {
  const LoadedData loaded = load_data(opts);
  const auto design = make_design(opts, loaded.data);
  const json scheme_json = opts.scheme_json.empty()
                               ? json{{"kind", "tau1"}}
                               : read_json_file(opts.scheme_json);
  SchemeConfig sc = parse_scheme(scheme_json, loaded.data);
  std::ofstream file;
  std::ostream& out = open_output(opts, file);
  json cfg = resolved_common(opts, design);
  cfg["scheme"] = scheme_json;
  out << "# config " << cfg.dump() << "\n";
  const double scale = display_scale(opts.format);
  out << "estimand,point,bias_lo,bias_hi\n";

  auto emit = [&](const attrib::WeightScheme& scheme) {
    const double point = attrib::point_estimate(
        scheme.build(loaded.data, loaded.data.treatment), loaded.data.outcomes);
    const MomentBundle mb = compute_moments(scheme, loaded, design, opts);
    const auto [blo, bhi] = mb.grouped
                                ? attrib::grouped_bias_bound(*mb.grouped)
                                : attrib::bias_bound(mb.dense->mean_w);
    out << scheme.name << ',' << scale * point << ',' << scale * blo << ','
        << scale * bhi << '\n';
  };

  if (sc.contrasts.empty()) {
    emit(sc.scheme);
  } else {
    for (const auto& nc : sc.contrasts) {
      attrib::WeightScheme s = sc.scheme;
      s.spec.contrast = nc.c;
      s.name = nc.name;
      emit(s);
    }
  }
  return 0;
}

struct IntervalOpts {
  double level = 0.95;
  double theta_mean_cap = -1.0;
  std::string split_method = "sdp-lite";
  std::string constraints_json;
  bool widen_by_bias = false;
  bool compare_splits = false;
  long node_budget = 200000;
  double time_budget = 60.0;
};

std::vector<attrib::LinearConstraint> load_constraints(
    const IntervalOpts& iopts, int n) {
  std::vector<attrib::LinearConstraint> cons;
  if (!iopts.constraints_json.empty())
    for (const auto& jc : read_json_file(iopts.constraints_json))
      cons.push_back({to_vec(jc.at("a")), jc.at("b").get<double>()});
  if (iopts.theta_mean_cap >= 0.0)
    cons.push_back(attrib::mean_cap_constraint(n, iopts.theta_mean_cap));
  return cons;
}

int run_interval(const CommonOpts& opts, const IntervalOpts& iopts) {
  const LoadedData loaded = load_data(opts);
  const auto design = make_design(opts, loaded.data);
  const double alpha = (1.0 - iopts.level) / 2.0;
  const json scheme_json = opts.scheme_json.empty()
                               ? json{{"kind", "tau1"}}
                               : read_json_file(opts.scheme_json);
  SchemeConfig sc = parse_scheme(scheme_json, loaded.data);
  attrib::SolverBudget budget;
  budget.node_budget = iopts.node_budget;
  budget.time_budget_seconds = iopts.time_budget;

  std::ofstream file;
  std::ostream& out = open_output(opts, file);
  json cfg = resolved_common(opts, design);
  cfg["scheme"] = scheme_json;
  cfg["level"] = iopts.level;
  cfg["alpha_per_side"] = alpha;  // level = 1 - 2*alpha
  cfg["theta_mean_cap"] = iopts.theta_mean_cap;
  cfg["split"] = iopts.split_method;
  cfg["widen_by_bias"] = iopts.widen_by_bias;
  out << "# config " << cfg.dump() << "\n";
  const double scale = display_scale(opts.format);
  out << "estimand,point,bias_lo,bias_hi,pi_lo,pi_hi\n";

  auto emit_result = [&](const attrib::IntervalResult& r) {
    out << r.estimand << ',' << scale * r.point << ',' << scale * r.bias_lo
        << ',' << scale * r.bias_hi << ',' << scale * r.pi_lo << ','
        << scale * r.pi_hi << '\n';
  };

  auto run_one = [&](const attrib::WeightScheme& scheme) {
    if (scheme.kind == attrib::WeightScheme::Kind::BetaAdj) {
      emit_result(attrib::beta_adj_interval(loaded.data, scheme.classes,
                                            2.0 * alpha, budget));
      return;
    }
    const MomentBundle mb = compute_moments(scheme, loaded, design, opts);
    if (mb.grouped) {
      emit_result(attrib::grouped_interval(scheme, loaded.data, *mb.grouped,
                                           alpha, iopts.theta_mean_cap, budget,
                                           iopts.widen_by_bias));
      return;
    }
    const auto cons = load_constraints(iopts, loaded.data.n_units);
    std::vector<std::string> methods = {iopts.split_method};
    if (iopts.compare_splits) methods = {"gershgorin", "eig-shift", "sdp-lite"};
    for (const auto& method : methods) {
      attrib::IntervalResult r =
          attrib::general_interval(scheme, loaded.data, *mb.dense, alpha, cons,
                                   method, budget, iopts.widen_by_bias);
      if (iopts.compare_splits) r.estimand += " [" + method + "]";
      emit_result(r);
    }
  };

  if (sc.scheme.kind == attrib::WeightScheme::Kind::Tau1 && !loaded.aggregate &&
      design.kind == attrib::DesignDescriptor::Kind::Srs &&
      iopts.constraints_json.empty()) {
    std::optional<double> cap;
    if (iopts.theta_mean_cap >= 0.0) cap = iopts.theta_mean_cap;
    emit_result(attrib::tau1_interval(loaded.data, alpha, cap));
  } else if (sc.contrasts.empty()) {
    run_one(sc.scheme);
  } else {
    for (const auto& nc : sc.contrasts) {
      attrib::WeightScheme s = sc.scheme;
      s.spec.contrast = nc.c;
      s.name = nc.name;
      run_one(s);
    }
  }
  return 0;
}

void write_experiment_csv(const attrib::ExperimentData& data,
                          const std::string& units_path,
                          const std::string& edges_path) {
  std::ofstream units(units_path);
  units.precision(12);
  units << "y,x";
  if (data.counterfactual) units << ",theta";
  for (const auto& [name, col] : data.covariates) units << ',' << name;
  units << '\n';
  for (int i = 0; i < data.n_units; ++i) {
    units << data.outcomes[i] << ',' << data.treatment[i];
    if (data.counterfactual) units << ',' << (*data.counterfactual)[i];
    for (const auto& [name, col] : data.covariates) units << ',' << col[i];
    units << '\n';
  }
  std::ofstream edges(edges_path);
  edges << "src,dst\n";
  for (int i = 0; i < data.n_units; ++i)
    for (int j : data.out_edges[i]) edges << i << ',' << j << '\n';
}

attrib::GenericConfig parse_generic(const json& j) {
  attrib::GenericConfig c;
  c.n_units = j.value("n_units", 200);
  const std::string net = j.value("network", "er");
  c.network = net == "ring" ? attrib::GenericConfig::Network::Ring
                            : attrib::GenericConfig::Network::ErdosRenyi;
  c.er_prob = j.value("er_prob", 0.05);
  c.ring_k = j.value("ring_k", 2);
  const std::string th = j.value("theta", "bernoulli");
  if (th == "block")
    c.theta = attrib::GenericConfig::Theta::Block;
  else if (th == "fixed")
    c.theta = attrib::GenericConfig::Theta::Fixed;
  c.theta_prob = j.value("theta_prob", 0.5);
  c.block_frac = j.value("block_frac", 0.5);
  if (j.contains("theta_fixed")) {
    const auto& arr = j["theta_fixed"];
    c.theta_fixed.resize(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.theta_fixed[i] = arr[i].get<int>();
  }
  const std::string eff = j.value("effect", "none");
  if (eff == "cure")
    c.effect = attrib::GenericConfig::Effect::Cure;
  else if (eff == "linear")
    c.effect = attrib::GenericConfig::Effect::Linear;
  c.beta_x = j.value("beta_x", 0.0);
  c.beta_z = j.value("beta_z", 0.0);
  const json dj = j.value("design", json::object());
  if (dj.value("kind", "srs") == "bernoulli") {
    c.design.kind = attrib::DesignDescriptor::Kind::Bernoulli;
    c.design.rho = dj.value("rho", 0.5);
  } else {
    c.design.kind = attrib::DesignDescriptor::Kind::Srs;
    c.design.n1 = dj.value("n1", c.n_units / 2);
  }
  return c;
}

attrib::VaccineSimParams parse_vaccine(const json& j) {
  attrib::VaccineSimParams p;
  p.b_scale = j.value("b_scale", p.b_scale);
  p.treat_prob = j.value("treat_prob", p.treat_prob);
  p.n_neighborhoods = j.value("n_neighborhoods", p.n_neighborhoods);
  p.size_min = j.value("size_min", p.size_min);
  p.size_max = j.value("size_max", p.size_max);
  return p;
}

int run_simulate(const CommonOpts& opts, const std::string& model,
                 const std::string& params_path, const std::string& units_out,
                 const std::string& edges_out) {
  const json pj =
      params_path.empty() ? json::object() : read_json_file(params_path);
  attrib::ExperimentData data;
  if (model == "vaccinesim") {
    data = attrib::gen_vaccinesim(parse_vaccine(pj), opts.seed,
                                  attrib::derive_seed(opts.seed, 1));
  } else if (model == "generic") {
    data = attrib::gen_generic(parse_generic(pj), opts.seed,
                               attrib::derive_seed(opts.seed, 1));
  } else {
    throw std::runtime_error("unknown model '" + model + "'");
  }
  write_experiment_csv(data, units_out, edges_out);
  json cfg;
  cfg["model"] = model;
  cfg["params"] = pj;
  cfg["seed"] = opts.seed;
  cfg["n_units"] = data.n_units;
  std::cout << "# config " << cfg.dump() << "\n";
  std::cout << "wrote " << units_out << " and " << edges_out << "\n";
  return 0;
}

int run_coverage(const CommonOpts& opts, const IntervalOpts& iopts,
                 const std::string& procedure, const std::string& generator_path,
                 long reps) {
  const json gj = generator_path.empty() ? json::object()
                                         : read_json_file(generator_path);
  const attrib::GenericConfig gcfg = parse_generic(gj);
  const double alpha = (1.0 - iopts.level) / 2.0;
  attrib::SolverBudget budget;
  budget.node_budget = iopts.node_budget;
  budget.time_budget_seconds = iopts.time_budget;

  auto generate = [&](std::uint64_t rep_seed) {
    return attrib::gen_generic(gcfg, opts.seed, rep_seed);
  };
  const attrib::ExperimentData base = generate(attrib::derive_seed(opts.seed, 0));

  attrib::IntervalProcedure interval;
  attrib::WeightScheme scheme = attrib::make_tau1_scheme();
  std::optional<double> cap;
  if (iopts.theta_mean_cap >= 0.0) cap = iopts.theta_mean_cap;

  if (procedure == "tau1") {
    interval = [=](const attrib::ExperimentData& d) {
      return attrib::tau1_interval(d, alpha, cap);
    };
  } else if (procedure == "beta_adj") {
    const auto classes = attrib::build_propensity_classes(base, {"out-degree"});
    const auto machine = std::make_shared<attrib::BetaAdjMachine>(
        attrib::make_beta_adj_machine(base, classes, base.n_treated()));
    scheme = attrib::make_beta_adj_scheme(classes);
    interval = [=](const attrib::ExperimentData& d) {
      return attrib::beta_adj_interval(d, classes, 2.0 * alpha, budget,
                                       machine.get());
    };
  } else if (procedure == "general") {
    if (opts.scheme_json.empty())
      throw std::runtime_error("--procedure general requires --scheme");
    SchemeConfig sc = parse_scheme(read_json_file(opts.scheme_json), base);
    scheme = sc.scheme;
    const auto moments = std::make_shared<attrib::WeightMoments>(
        attrib::mc_weight_moments(scheme, base, gcfg.design, opts.replications,
                                  opts.seed));
    std::vector<attrib::LinearConstraint> cons =
        load_constraints(iopts, base.n_units);
    interval = [=, s = scheme](const attrib::ExperimentData& d) {
      return attrib::general_interval(s, d, *moments, alpha, cons,
                                      iopts.split_method, budget);
    };
  } else {
    throw std::runtime_error("unknown procedure '" + procedure + "'");
  }

  const attrib::WeightScheme estimand_scheme = scheme;
  const auto report = attrib::coverage_study(
      generate, interval,
      [estimand_scheme](const attrib::ExperimentData& d) {
        return attrib::realized_estimand(estimand_scheme, d);
      },
      reps, attrib::derive_seed(opts.seed, 0x636f76));

  std::ofstream file;
  std::ostream& out = open_output(opts, file);
  json cfg;
  cfg["procedure"] = procedure;
  cfg["generator"] = gj;
  cfg["level"] = iopts.level;
  cfg["alpha_per_side"] = alpha;
  cfg["reps"] = reps;
  cfg["seed"] = opts.seed;
  out << "# config " << cfg.dump() << "\n";
  out << "# coverage " << report.coverage() << " se " << report.binomial_se()
      << " failures " << report.failures << "\n";
  out << attrib::coverage_csv(report);
  return 0;
}

int run_solve(const std::string& problem_path, bool brute, bool relaxed,
              long node_budget, double time_budget) {
  const json j = read_json_file(problem_path);
  const attrib::BoundProblem problem = attrib::problem_from_json(j.dump());
  attrib::SolverBudget budget;
  budget.node_budget = node_budget;
  budget.time_budget_seconds = time_budget;
  attrib::SolveResult res;
  std::string mode;
  if (brute) {
    res = attrib::brute_force(problem);
    mode = "brute-force";
  } else if (relaxed) {
    res = attrib::solve_relaxed(problem, budget);
    mode = "relaxed";
  } else {
    res = attrib::solve_bnb(problem, budget);
    mode = "branch-and-bound";
  }
  json out;
  out["mode"] = mode;
  out["value"] = res.value;
  out["incumbent_value"] = res.incumbent_value;
  out["status"] = res.status == attrib::SolveStatus::Exact ? "exact"
                  : res.status == attrib::SolveStatus::RelaxationBound
                      ? "relaxation-bound"
                      : "budget-exhausted-bound";
  out["nodes"] = res.node_count;
  out["gap"] = res.gap;
  out["incumbent"] = std::vector<double>(
      res.incumbent.data(), res.incumbent.data() + res.incumbent.size());
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomization prediction intervals for attributable effects"};
  app.require_subcommand(1);

  CommonOpts opts;
  IntervalOpts iopts;

  auto* est = app.add_subcommand("estimate", "point estimates + bias bounds");
  add_common(est, opts);

  auto* itv = app.add_subcommand("interval", "prediction intervals");
  add_common(itv, opts);
  itv->add_option("--level", iopts.level, "coverage level (1 - 2*alpha)");
  itv->add_option("--theta-mean-cap", iopts.theta_mean_cap,
                  "mean cap on theta (negative disables)");
  itv->add_option("--split", iopts.split_method,
                  "gershgorin | eig-shift | sdp-lite");
  itv->add_option("--constraints", iopts.constraints_json,
                  "JSON list of {a, b} constraints");
  itv->add_flag("--widen-by-bias", iopts.widen_by_bias,
                "add the bias bound to the interval endpoints");
  itv->add_flag("--compare-splits", iopts.compare_splits,
                "report intervals under all three split methods");
  itv->add_option("--node-budget", iopts.node_budget, "solver node budget");
  itv->add_option("--time-budget", iopts.time_budget, "solver seconds budget");

  std::string model = "generic", params_path, units_out = "units.csv",
              edges_out = "edges.csv";
  auto* sim = app.add_subcommand("simulate", "write a synthetic dataset");
  add_common(sim, opts, /*with_data=*/false);
  sim->add_option("--model", model, "vaccinesim | generic");
  sim->add_option("--params", params_path, "model parameter JSON");
  sim->add_option("--units-out", units_out, "unit CSV output path");
  sim->add_option("--edges-out", edges_out, "edge CSV output path");

  std::string procedure = "tau1", generator_path;
  long reps = 1000;
  auto* cov = app.add_subcommand("coverage", "empirical coverage study");
  add_common(cov, opts);
  cov->add_option("--procedure", procedure, "tau1 | beta_adj | general");
  cov->add_option("--generator", generator_path, "generic generator JSON");
  cov->add_option("--reps", reps, "replications");
  cov->add_option("--level", iopts.level, "coverage level (1 - 2*alpha)");
  cov->add_option("--theta-mean-cap", iopts.theta_mean_cap, "mean cap");
  cov->add_option("--node-budget", iopts.node_budget, "solver node budget");
  cov->add_option("--time-budget", iopts.time_budget, "solver seconds budget");

  std::string problem_path;
  bool brute = false, relaxed = false;
  long node_budget = 200000;
  double time_budget = 60.0;
  auto* slv = app.add_subcommand("solve", "run a BoundProblem JSON file");
  slv->add_option("--problem", problem_path, "problem JSON")->required();
  slv->add_flag("--brute-force", brute, "enumeration oracle");
  slv->add_flag("--relaxed", relaxed, "box relaxation bound only");
  slv->add_option("--node-budget", node_budget, "node budget");
  slv->add_option("--time-budget", time_budget, "seconds budget");

  CLI11_PARSE(app, argc, argv);

  try {
    if (est->parsed()) return run_estimate(opts);
    if (itv->parsed()) return run_interval(opts, iopts);
    if (sim->parsed())
      return run_simulate(opts, model, params_path, units_out, edges_out);
    if (cov->parsed())
      return run_coverage(opts, iopts, procedure, generator_path, reps);
    if (slv->parsed())
      return run_solve(problem_path, brute, relaxed, node_budget, time_budget);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
