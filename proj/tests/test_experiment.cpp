#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "deflab/experiment.hpp"

using namespace deflab;
using json = nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / "deflab_test_experiment" / name;
  std::filesystem::remove_all(p);
  return p;
}

const char* kAffine = R"({
  "functional": {"catalog": "affine", "dim": 2},
  "deformation": {"c": 0.0, "eps": 0.5, "backend": {"type": "exact_affine"}, "samples": 200, "dump_trajectories": 2},
  "minimax": {"pin_e": [1, 0]},
  "oracle": {"resolution": 65},
  "seed": 3
})";

void expect_invalid(const std::string& text) {
  try {
    parse_config(text);
    FAIL("expected InvalidConfig for " << text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}

}  // namespace

TEST_CASE("config echo re-parses to the same config") {
  for (const char* text :
       {kAffine,
        R"({"functional": {"poly": {"dim": 2, "terms": [{"exps": [2, 0], "coef": 1}, {"exps": [0, 2], "coef": -0.5}]}},
            "ps": {"level": 0.25, "resolution": [51, 41]}, "geometry": {"r": 0.3}, "seed": 9})",
        R"({"functional": {"catalog": "well_to_saddle"},
            "deformation": {"c": 0.5, "eps": 0.1, "d_spec": {"type": "point_cloud", "points": [[1, 0.7]]}},
            "minimax": {"pin_e": [1, 0], "pin_mode": "endpoints", "radius": 0.5},
            "proof": {"c1": 0, "c2": 1}, "oracle": {"connectivity": 4}})"}) {
    const auto cfg = parse_config(text);
    const auto echo = config_echo(cfg);
    CHECK(config_echo(parse_config(echo)) == echo);
  }
}

TEST_CASE("config defaults are filled in") {
  const auto cfg = parse_config(kAffine);
  REQUIRE(cfg.deformation);
  CHECK(cfg.deformation->backend.kind == BackendKind::ExactAffine);
  REQUIRE(cfg.minimax);
  CHECK(cfg.minimax->pin_zero == Point{0.0, 0.0});
  CHECK(cfg.minimax->m == 64);
  CHECK(cfg.box.lo() == Point{-2.0, -2.0});
  const auto well = parse_config(R"({"functional": {"catalog": "well_to_saddle"}})");
  CHECK(well.box.lo() == Point{-1.0, -2.0});
}

TEST_CASE("invalid configs are rejected") {
  expect_invalid("not json");
  expect_invalid(R"({"functional": {"catalog": "nope"}})");
  expect_invalid(R"({"functional": {"catalog": "affine"}, "deformation": {"c": 0, "eps": 0}})");
  expect_invalid(R"({"functional": {"catalog": "affine"}, "deformation": {"c": 0, "eps": -1}})");
  expect_invalid(R"({"functional": {"catalog": "paraboloid"}, "deformation": {"c": 0, "eps": 1, "backend": {"type": "exact_affine"}}})");
  expect_invalid(R"({"functional": {"catalog": "affine"}, "typo": 1})");
  expect_invalid(R"({"functional": {"catalog": "affine"}, "minimax": {"pin_e": [1, 0], "M": 10}})");
  expect_invalid(R"({"functional": {"catalog": "affine"}, "minimax": {"pin_e": [1, 0, 0]}})");
  expect_invalid(R"({"functional": {"catalog": "affine"}, "oracle": {"connectivity": 6}})");
  expect_invalid(R"({"functional": {"catalog": "affine"}, "oracle": {"resolution": 2}})");
  expect_invalid(R"({"functional": {"poly": {"dim": 1, "terms": [{"exps": [9], "coef": 1}]}}})");
  expect_invalid(R"({"functional": {"catalog": "affine"}, "seed": 1.5})");
  expect_invalid(R"({"functional": {"catalog": "affine"}, "box": {"lo": [1, 1], "hi": [0, 2]}})");
}

TEST_CASE("subcommands need their sections") {
  const auto cfg = parse_config(R"({"functional": {"catalog": "affine"}})");
  for (const char* sub : kSubcommands) CHECK_THROWS_AS(validate_for(cfg, sub), Error);
  CHECK_THROWS_AS(validate_for(parse_config(kAffine), "bogus"), Error);
  const auto equal_pins = parse_config(R"({"functional": {"catalog": "affine"}, "minimax": {"pin_e": [0, 0]}})");
  CHECK_THROWS_AS(validate_for(equal_pins, "minimax"), Error);
}

TEST_CASE("deform run writes the report and artifacts") {
  const auto out = scratch("deform");
  const auto res = run_experiment(parse_config(kAffine), "deform", out);
  CHECK(res.checks_passed);
  const auto report = json::parse(res.report);
  CHECK(report.at("version") == kVersion);
  CHECK(report.contains("wall_ms"));
  const auto& rep = report.at("payload").at("report");
  CHECK(rep.at("a_prime_violations") == 0);
  CHECK(rep.at("hypothesis_min_grad") == 1.0);
  CHECK(rep.at("b_prime").at("confined_in_B") == 0);
  CHECK(rep.size() == 5);
  CHECK(std::filesystem::exists(out / "report.json"));
  CHECK(std::filesystem::exists(out / "regions.csv"));
  CHECK(std::filesystem::exists(out / "trajectory_000.csv"));
  CHECK(std::filesystem::exists(out / "trajectory_001.csv"));
  CHECK(config_echo(parse_config(report.at("config").dump())) == report.at("config").dump(2));
}

TEST_CASE("reports are reproducible apart from wall time") {
  auto payload = [](const std::string& dir) {
    const auto res = run_experiment(parse_config(kAffine), "minimax", scratch(dir));
    return json::parse(res.report).at("payload").dump();
  };
  CHECK(payload("repro_a") == payload("repro_b"));
}

TEST_CASE("minimax and oracle payloads") {
  const auto cfg = parse_config(R"({
    "functional": {"catalog": "well_to_saddle"},
    "minimax": {"pin_e": [1, 0]},
    "oracle": {"resolution": 129, "grad_tol": 0.1},
    "seed": 2})");
  const auto mm = json::parse(run_experiment(cfg, "minimax", scratch("mm")).report).at("payload");
  CHECK(std::abs(mm.at("c2").at("value").get<double>() - mm.at("oracle").at("bottleneck").at("value").get<double>()) <=
        0.03);
  CHECK(mm.at("conclusions").at("IV").at("holds") == true);
  for (const char* key : {"value", "witness_path", "witness_point", "iterations", "converged", "history"})
    CHECK(mm.at("c1").contains(key));
  const auto orc = json::parse(run_experiment(cfg, "oracle", scratch("orc")).report).at("payload");
  CHECK(orc.at("critical_points").size() == 3);
  CHECK(orc.at("bottleneck").at("witness").is_array());
}
