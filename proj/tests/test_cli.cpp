#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "attrib/bound_solver.hpp"
#include "attrib/intervals.hpp"
#include "json.hpp"

namespace {

int run_cli(const std::string& args, const std::string& out_path = "cli_out.txt") {
  const std::string cmd =
      std::string(ATTRIB_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  const int status = std::system(cmd.c_str());
#ifdef WIFEXITED
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#else
  return status;
#endif
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

// Rows of the comma-separated block after the "# config" line and the header.
std::vector<std::vector<std::string>> parse_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#' || line.find(',') == std::string::npos)
      continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    rows.push_back(fields);
  }
  return rows;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("missing input files exit with code 2") {
  CHECK(run_cli("estimate --units no_such_units.csv --edges no_such_edges.csv") == 2);
  const std::string out = slurp("cli_out.txt");
  CHECK(out.find("no_such_units.csv") != std::string::npos);
  CHECK(run_cli("interval --aggregate no_such_table.csv") == 2);
}

TEST_CASE("bad arguments exit nonzero") {
  CHECK(run_cli("solve") != 0);                  // --problem is required
  CHECK(run_cli("frobnicate --units a.csv") != 0);
}

TEST_CASE("solve runs a problem file") {
  Eigen::Vector2d bw(0.5, -0.5);
  const auto p = attrib::make_bound_problem(
      bw, 0.1 * Eigen::Matrix2d::Identity(), 1.96, attrib::Sense::Max);
  write_file("cli_problem.json", attrib::problem_to_json(p));

  REQUIRE(run_cli("solve --problem cli_problem.json --brute-force") == 0);
  auto j = nlohmann::json::parse(slurp("cli_out.txt"));
  CHECK(j.at("mode") == "brute-force");
  CHECK(j.at("value").get<double>() ==
        doctest::Approx(0.5 + 1.96 * std::sqrt(0.1)).epsilon(1e-9));

  REQUIRE(run_cli("solve --problem cli_problem.json") == 0);
  j = nlohmann::json::parse(slurp("cli_out.txt"));
  CHECK(j.at("status") == "exact");
  CHECK(j.at("value").get<double>() ==
        doctest::Approx(0.5 + 1.96 * std::sqrt(0.1)).epsilon(1e-9));

  REQUIRE(run_cli("solve --problem cli_problem.json --relaxed") == 0);
  j = nlohmann::json::parse(slurp("cli_out.txt"));
  CHECK(j.at("value").get<double>() >= 0.5 + 1.96 * std::sqrt(0.1) - 1e-9);
}

TEST_CASE("estimate on unit-level data") {
  write_file("cli_units.csv", "y,x\n1,1\n0,1\n1,1\n0,0\n0,0\n1,0\n");
  write_file("cli_edges.csv", "src,dst\n0,1\n1,0\n");
  REQUIRE(run_cli("estimate --units cli_units.csv --edges cli_edges.csv") == 0);
  const std::string out = slurp("cli_out.txt");
  CHECK(out.find("# config") != std::string::npos);
  const auto rows = parse_rows(out);
  REQUIRE(rows.size() >= 2);  // header + tau1 row
  CHECK(rows[1][0] == "tau1");
  // tau1 point: mean treated (2/3) - mean control (1/3)
  CHECK(std::stod(rows[1][1]) == doctest::Approx(1.0 / 3).epsilon(1e-9));
}

TEST_CASE("interval reproduces the tau1 closed form") {
  std::string units = "y,x\n";
  for (int i = 0; i < 10; ++i)
    units += (i % 2 ? "1," : "0,") + std::string(i < 5 ? "1" : "0") + "\n";
  write_file("cli_units.csv", units);
  write_file("cli_edges.csv", "src,dst\n");
  REQUIRE(run_cli("interval --units cli_units.csv --edges cli_edges.csv "
                  "--level 0.95") == 0);
  const auto rows = parse_rows(slurp("cli_out.txt"));
  REQUIRE(rows.size() >= 2);
  const double lo = std::stod(rows[1][4]), hi = std::stod(rows[1][5]);
  const double hw = attrib::tau1_half_width(10, 5, 0.025);
  CHECK((hi - lo) / 2 == doctest::Approx(hw).epsilon(1e-9));
}

TEST_CASE("aggregate regression analysis recovers the cell-rate contrasts") {
  // two-group trial with rates 2.1, 5.6, 1.7, 3.0 per thousand
  write_file("cli_table.csv",
             "group,arm,events,size\n"
             "1,treated,21,10000\n"
             "1,control,56,10000\n"
             "2,treated,17,10000\n"
             "2,control,30,10000\n");
  write_file("cli_scheme.json", R"({
    "kind": "regression",
    "terms": [
      {"kind": "own_treatment"},
      {"kind": "interaction", "factors": [
        {"kind": "own_treatment"}, {"kind": "covariate", "column": "group:1"}]},
      {"kind": "covariate", "column": "group:1"},
      {"kind": "covariate", "column": "group:2"}
    ],
    "contrasts": [
      {"name": "b1", "c": [1, 0, 0, 0]},
      {"name": "b2", "c": [0, 1, 0, 0]},
      {"name": "b1+b2", "c": [1, 1, 0, 0]}
    ]
  })");
  REQUIRE(run_cli("estimate --aggregate cli_table.csv --scheme cli_scheme.json "
                  "--format per-thousand --replications 2000") == 0);
  const auto rows = parse_rows(slurp("cli_out.txt"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[1][0] == "b1");
  CHECK(std::stod(rows[1][1]) == doctest::Approx(-1.3).epsilon(1e-6));
  CHECK(std::stod(rows[2][1]) == doctest::Approx(-2.2).epsilon(1e-6));
  CHECK(std::stod(rows[3][1]) == doctest::Approx(-3.5).epsilon(1e-6));
}

TEST_CASE("aggregate interval runs through the grouped pipeline") {
  write_file("cli_table.csv",
             "group,arm,events,size\n"
             "1,treated,2,40\n"
             "1,control,5,40\n"
             "2,treated,1,30\n"
             "2,control,3,30\n");
  REQUIRE(run_cli("interval --aggregate cli_table.csv --level 0.9 "
                  "--theta-mean-cap 0.2 --replications 2000") == 0);
  const auto rows = parse_rows(slurp("cli_out.txt"));
  REQUIRE(rows.size() >= 2);
  const double point = std::stod(rows[1][1]);
  const double lo = std::stod(rows[1][4]), hi = std::stod(rows[1][5]);
  CHECK(lo <= point);
  CHECK(point <= hi);
}

TEST_CASE("simulate writes loadable files and is reproducible") {
  REQUIRE(run_cli("simulate --model generic --seed 42 "
                  "--units-out cli_sim_units.csv --edges-out cli_sim_edges.csv") == 0);
  const std::string units_a = slurp("cli_sim_units.csv");
  const std::string edges_a = slurp("cli_sim_edges.csv");
  CHECK(units_a.find("y,x,theta") == 0);
  REQUIRE(run_cli("simulate --model generic --seed 42 "
                  "--units-out cli_sim_units.csv --edges-out cli_sim_edges.csv") == 0);
  CHECK(slurp("cli_sim_units.csv") == units_a);
  CHECK(slurp("cli_sim_edges.csv") == edges_a);

  // and the output is consumable by the other subcommands
  CHECK(run_cli("estimate --units cli_sim_units.csv --edges cli_sim_edges.csv") == 0);
}

TEST_CASE("coverage produces a CSV report") {
  write_file("cli_gen.json", R"({
    "n_units": 40, "network": "ring", "ring_k": 1,
    "theta": "bernoulli", "theta_prob": 0.3,
    "design": {"kind": "srs", "n1": 20}
  })");
  REQUIRE(run_cli("coverage --procedure tau1 --generator cli_gen.json "
                  "--reps 50 --level 0.95 --seed 3") == 0);
  const std::string out = slurp("cli_out.txt");
  CHECK(out.find("rep,") != std::string::npos);
  const auto rows = parse_rows(out);
  CHECK(rows.size() >= 51);  // header + 50 replication rows
}

TEST_CASE("repeated runs are byte-identical") {
  write_file("cli_units.csv", "y,x\n1,1\n0,1\n0,0\n1,0\n0,0\n1,1\n");
  write_file("cli_edges.csv", "src,dst\n0,1\n2,3\n");
  const std::string args =
      "estimate --units cli_units.csv --edges cli_edges.csv --seed 5";
  REQUIRE(run_cli(args, "cli_a.txt") == 0);
  REQUIRE(run_cli(args, "cli_b.txt") == 0);
  CHECK(slurp("cli_a.txt") == slurp("cli_b.txt"));
}

TEST_SUITE_END();
