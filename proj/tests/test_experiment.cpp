#include "doctest.h"

#include <fstream>
#include <set>

#include "attrib/experiment.hpp"

using namespace attrib;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

ExperimentData four_units() {
  ExperimentData d;
  d.n_units = 4;
  d.outcomes = Eigen::Vector4d(1, 0, 0, 0);
  d.treatment = Eigen::Vector4i(1, 1, 0, 0);
  d.out_edges = {{1}, {0}, {}, {}};
  return d;
}

}  // namespace

TEST_SUITE_BEGIN("experiment");

TEST_CASE("validate accepts a small well-formed dataset") {
  CHECK_NOTHROW(four_units().validate());
}

TEST_CASE("validate rejects invariant violations") {
  auto d = four_units();
  d.treatment[1] = 2;
  CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("non-binary treatment"),
                       std::runtime_error);

  d = four_units();
  d.out_edges[0] = {7};
  CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("dangling endpoint"),
                       std::runtime_error);

  d = four_units();
  d.out_edges[2] = {2};
  CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("self-loop"),
                       std::runtime_error);

  d = four_units();
  d.outcomes[0] = 1.5;
  CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("outcome outside"),
                       std::runtime_error);
}

TEST_CASE("load_experiment parses units and edges") {
  write_file("t_units.csv", "y,x,age\n1,1,0.5\n0,1,0.25\n0,0,1\n0,0,0\n");
  write_file("t_edges.csv", "src,dst\n0,1\n1,0\n");
  const auto d = load_experiment("t_units.csv", "t_edges.csv");
  CHECK(d.n_units == 4);
  CHECK(d.out_edges[0] == std::vector<int>{1});
  CHECK(d.out_edges[1] == std::vector<int>{0});
  CHECK(d.covariates.at("age")[2] == 1.0);
  CHECK(d.n_treated() == 2);
}

TEST_CASE("load_experiment deduplicates edges with a warning") {
  write_file("t_units.csv", "y,x\n1,1\n0,0\n");
  write_file("t_edges.csv", "src,dst\n0,1\n0,1\n");
  std::vector<std::string> warnings;
  const auto d = load_experiment("t_units.csv", "t_edges.csv", {}, &warnings);
  CHECK(d.out_edges[0] == std::vector<int>{1});
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("duplicate") != std::string::npos);
}

TEST_CASE("load_experiment rejects bad input") {
  write_file("t_units.csv", "y,x\n1,1\n0,0\n");
  write_file("t_edges.csv", "src,dst\n0,7\n");
  CHECK_THROWS_WITH_AS(load_experiment("t_units.csv", "t_edges.csv"),
                       doctest::Contains("dangling endpoint"),
                       std::runtime_error);

  write_file("t_units.csv", "y,x\n1,2\n0,0\n");
  write_file("t_edges.csv", "src,dst\n");
  CHECK_THROWS_WITH_AS(load_experiment("t_units.csv", "t_edges.csv"),
                       doctest::Contains("non-binary treatment"),
                       std::runtime_error);
}

TEST_CASE("canonical serialization is deterministic") {
  write_file("t_units.csv", "y,x,age\n1,1,0.5\n0,1,0.25\n0,0,1\n0,0,0\n");
  write_file("t_edges.csv", "src,dst\n0,1\n1,0\n");
  const auto a = load_experiment("t_units.csv", "t_edges.csv");
  const auto b = load_experiment("t_units.csv", "t_edges.csv");
  CHECK(a.canonical_bytes() == b.canonical_bytes());
}

TEST_CASE("expand_aggregate zero-event row") {
  AggregateTable t;
  t.rows = {{"g", true, 0, 10}};
  const auto d = expand_aggregate(t);
  CHECK(d.n_units == 10);
  CHECK(d.outcomes.sum() == 0.0);
  CHECK(d.n_treated() == 10);
}

TEST_CASE("expand_aggregate on the four-row vaccine table") {
  AggregateTable t;
  t.rows = {{"1", true, 54, 25000},
            {"1", false, 72, 13000},
            {"2", true, 42, 25000},
            {"2", false, 36, 12000}};
  const auto d = expand_aggregate(t);
  // arm sizes sum to 75K / 50K treated (the published totals round to 74K/49K)
  CHECK(d.n_units == 75000);
  CHECK(d.n_treated() == 50000);
  double treated_events = 0, control_events = 0;
  for (int i = 0; i < d.n_units; ++i)
    (d.treatment[i] ? treated_events : control_events) += d.outcomes[i];
  CHECK(treated_events == 96.0);
  CHECK(control_events == 108.0);
  CHECK(d.covariates.count("group") == 1);
  CHECK(d.covariates.count("group:1") == 1);
  CHECK(d.covariates.count("group:2") == 1);
}

TEST_CASE("aggregate round-trips through expansion") {
  AggregateTable t;
  t.rows = {{"a", true, 3, 10}, {"a", false, 1, 5}, {"b", true, 0, 4},
            {"b", false, 2, 6}};
  const auto back = reaggregate(expand_aggregate(t));
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(back.rows[i].group == t.rows[i].group);
    CHECK(back.rows[i].treated == t.rows[i].treated);
    CHECK(back.rows[i].events == t.rows[i].events);
    CHECK(back.rows[i].size == t.rows[i].size);
  }
}

TEST_CASE("aggregate validation") {
  AggregateTable t;
  t.rows = {{"g", true, 11, 10}};
  CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("count > size"),
                       std::runtime_error);
  t.rows = {{"g", true, 1, 0}};
  CHECK_THROWS(t.validate());
}

TEST_CASE("design validation") {
  DesignDescriptor d;
  d.kind = DesignDescriptor::Kind::Bernoulli;
  d.rho = 1.5;
  CHECK_THROWS(d.validate(4));
  d.kind = DesignDescriptor::Kind::Srs;
  d.n1 = 0;
  CHECK_THROWS(d.validate(4));
  d.n1 = 4;
  CHECK_THROWS(d.validate(4));
  d.n1 = 2;
  CHECK_NOTHROW(d.validate(4));
}

TEST_CASE("srs draws have exactly n1 treated") {
  DesignDescriptor d;
  d.kind = DesignDescriptor::Kind::Srs;
  d.n1 = 3;
  Rng rng(5);
  std::set<std::string> seen;
  for (int i = 0; i < 50; ++i) {
    const auto x = draw_treatment(d, 8, rng);
    CHECK(x.sum() == 3);
    std::string key;
    for (int j = 0; j < 8; ++j) key += char('0' + x[j]);
    seen.insert(key);
  }
  CHECK(seen.size() > 10);  // actually varies
}

TEST_CASE("stratified srs respects per-stratum counts") {
  DesignDescriptor d;
  d.kind = DesignDescriptor::Kind::StratifiedSrs;
  d.strata = {0, 0, 0, 1, 1, 1, 1};
  d.strata_n1 = {1, 2};
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = draw_treatment(d, 7, rng);
    CHECK(x.head(3).sum() == 1);
    CHECK(x.tail(4).sum() == 2);
  }
}

TEST_CASE("external replications cycle by index") {
  DesignDescriptor d;
  d.kind = DesignDescriptor::Kind::ExternalReplications;
  d.replications = {Eigen::Vector3i(1, 0, 0), Eigen::Vector3i(0, 1, 0)};
  Rng rng(1);
  CHECK(draw_treatment(d, 3, rng, 0) == d.replications[0]);
  CHECK(draw_treatment(d, 3, rng, 1) == d.replications[1]);
  CHECK(draw_treatment(d, 3, rng, 2) == d.replications[0]);
}

TEST_CASE("symmetrize adds reverse edges") {
  ExperimentData d = four_units();
  d.out_edges = {{1}, {}, {}, {}};
  symmetrize_network(d);
  CHECK(d.out_edges[1] == std::vector<int>{0});
}

TEST_SUITE_END();
