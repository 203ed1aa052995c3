#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "smclab/scenarios.hpp"

#ifndef SMCLAB_SOURCE_DIR
#define SMCLAB_SOURCE_DIR "."
#endif

namespace smclab {
namespace {

namespace fs = std::filesystem;

bool has_error(const std::vector<std::string>& errs, const std::string& needle) {
  return std::any_of(errs.begin(), errs.end(), [&](const std::string& e) {
    return e.find(needle) != std::string::npos;
  });
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() /
                     ("smclab_test_" + tag + "_" +
                      std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::remove_all(d);
  return d;
}

json fig1() { return to_json(*find_builtin("fig1_pendulum_observer_free")); }

TEST(Validate, PendulumBuiltinIsValid) {
  const Validated v = validate(fig1());
  EXPECT_TRUE(v.errors.empty());
  ASSERT_TRUE(v.scenario.has_value());
  EXPECT_EQ(v.scenario->name, "fig1_pendulum_observer_free");
}

TEST(Validate, ZeroDt) {
  json raw = fig1();
  raw["sim"]["dt"] = 0.0;
  const Validated v = validate(raw);
  EXPECT_FALSE(v.scenario.has_value());
  EXPECT_TRUE(has_error(v.errors, "dt must be positive"));
}

TEST(Validate, NetworkControllerCountMismatch) {
  json raw = to_json(*find_builtin("fig4_network5_observer_free"));
  raw["controller"].erase(raw["controller"].size() - 1);
  ASSERT_EQ(raw["controller"].size(), 4u);
  const Validated v = validate(raw);
  EXPECT_FALSE(v.scenario.has_value());
  EXPECT_TRUE(has_error(v.errors, "dimension mismatch"));
}

TEST(Validate, SingleControllerIsBroadcast) {
  json raw = to_json(*find_builtin("fig4_network5_observer_free"));
  raw["controller"] = raw["controller"][0];
  const Validated v = validate(raw);
  ASSERT_TRUE(v.scenario.has_value());
  EXPECT_EQ(v.scenario->controllers.size(), 5u);
}

TEST(Validate, ReportsEveryProblem) {
  json raw = fig1();
  raw["sim"]["dt"] = -1.0;
  raw["controller"][0]["lambda"] = -2.0;
  raw["initial_state"] = {1.0};
  const Validated v = validate(raw);
  EXPECT_FALSE(v.scenario.has_value());
  EXPECT_GE(v.errors.size(), 3u);
  EXPECT_TRUE(has_error(v.errors, "dt must be positive"));
  EXPECT_TRUE(has_error(v.errors, "lambda"));
  EXPECT_TRUE(has_error(v.errors, "initial_state"));
}

TEST(Validate, ParseThrowsWithProblemList) {
  json raw = fig1();
  raw["sim"]["dt"] = 0.0;
  try {
    parse_scenario(raw);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_FALSE(e.problems().empty());
  }
}

TEST(Validate, StepLimits) {
  json raw = fig1();
  raw["sim"]["dt"] = 1e-7;
  EXPECT_FALSE(validate(raw).scenario.has_value());
  raw["sim"]["dt"] = 0.5;
  EXPECT_FALSE(validate(raw).scenario.has_value());
  raw["sim"]["dt"] = 1e-3;
  raw["sim"]["t_final"] = 1e-3;
  EXPECT_TRUE(validate(raw).scenario.has_value());
  raw["sim"]["t_final"] = 1e-4;
  EXPECT_FALSE(validate(raw).scenario.has_value());
}

TEST(Validate, SchemaMustMatch) {
  json raw = fig1();
  raw["schema"] = "something/else";
  EXPECT_TRUE(has_error(validate(raw).errors, "schema"));
}

TEST(Validate, ScenarioOverload) {
  Scenario sc = *find_builtin("fig2_vdp_adaptive");
  EXPECT_TRUE(validate(sc).empty());
  sc.sim.dt = 0.0;
  EXPECT_FALSE(validate(sc).empty());
}

TEST(Serialization, RoundTripsEveryBuiltin) {
  for (const auto& sc : builtin_suite()) {
    const Scenario back = parse_scenario(serialize(sc));
    EXPECT_EQ(back, sc) << sc.name;
    EXPECT_EQ(serialize(back), serialize(sc)) << sc.name;
  }
}

TEST(Serialization, ShippedFilesMatchBuiltins) {
  const fs::path dir = fs::path(SMCLAB_SOURCE_DIR) / "scenarios";
  ASSERT_TRUE(fs::is_directory(dir)) << dir;
  const auto suite = builtin_suite();
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") ++files;
  }
  EXPECT_EQ(files, suite.size());
  for (const auto& sc : suite) {
    const fs::path p = dir / (sc.name + ".json");
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(parse_scenario(load_scenario_json(p)), sc) << sc.name;
  }
}

TEST(Overrides, DottedPath) {
  json raw = fig1();
  apply_override(raw, "controller.lambda=2.5");
  apply_override(raw, "sim.t_final=3");
  const Scenario sc = parse_scenario(raw);
  EXPECT_EQ(std::get<ObserverFreeParams>(sc.controllers[0]).lambda, 2.5);
  EXPECT_EQ(sc.sim.t_final, 3.0);
}

TEST(Overrides, AppliesToEveryNode) {
  json raw = to_json(*find_builtin("fig4_network5_observer_free"));
  apply_override(raw, "controller.lambda=4");
  for (const auto& c : parse_scenario(raw).controllers) {
    EXPECT_EQ(std::get<ObserverFreeParams>(c).lambda, 4.0);
  }
}

TEST(Overrides, Malformed) {
  json raw = fig1();
  EXPECT_THROW(apply_override(raw, "no_equals_sign"), ValidationError);
  EXPECT_THROW(apply_override(raw, "name.x=1"), ValidationError);
}

TEST(BuiltinSuite, Contents) {
  const auto suite = builtin_suite();
  EXPECT_EQ(suite.size(), 20u);
  EXPECT_TRUE(std::is_sorted(suite.begin(), suite.end(),
                             [](const auto& a, const auto& b) {
                               return a.name < b.name;
                             }));
  int perturbed = 0, network_of = 0;
  for (const auto& sc : suite) {
    EXPECT_TRUE(validate(sc).empty()) << sc.name;
    if (sc.disturbance.kind == DisturbanceKind::Sinusoid &&
        sc.disturbance.amplitude == 0.2 && sc.disturbance.omega == 5.0) {
      ++perturbed;
    }
    if (PlantModel(sc.plant).nodes() == 5 && sc.controllers.size() == 5 &&
        std::all_of(sc.controllers.begin(), sc.controllers.end(),
                    [](const auto& c) {
                      return std::holds_alternative<ObserverFreeParams>(c);
                    })) {
      ++network_of;
    }
  }
  EXPECT_EQ(perturbed, 1);
  EXPECT_GE(network_of, 1);
}

TEST(BuiltinSuite, FindUnknown) {
  EXPECT_FALSE(find_builtin("does_not_exist").has_value());
}

TEST(BuiltinSuite, NetworkInitialAnglesAreSeeded) {
  const auto a = find_builtin("fig4_network5_classical")->initial_state;
  const auto b = find_builtin("fig4_network5_observer_free")->initial_state;
  EXPECT_EQ(a, b);
  EXPECT_EQ(seeded_uniform(42, 5, -0.3, 0.3), seeded_uniform(42, 5, -0.3, 0.3));
  EXPECT_NE(seeded_uniform(42, 5, -0.3, 0.3), seeded_uniform(43, 5, -0.3, 0.3));
}

TEST(RunSuite, PendulumGroup) {
  std::vector<Scenario> group;
  for (const auto& sc : builtin_suite()) {
    if (sc.group == "pendulum") group.push_back(sc);
  }
  const SuiteResult r = run_suite(group, 2);
  EXPECT_EQ(r.runs.size(), 4u);
  EXPECT_EQ(r.matrices.size(), 1u);
  EXPECT_TRUE(r.failures.empty());
  const auto& m = r.matrices.at("pendulum");
  EXPECT_EQ(m.controllers,
            (std::vector<std::string>{"classical", "super-twisting", "adaptive",
                                      "observer-free"}));
}

TEST(RunSuite, FailureIsRecordedNotFatal) {
  Scenario bad = *find_builtin("fig3_duffing_observer_free");
  bad.name = "zz_bad";
  bad.group.clear();
  bad.plant = DuffingParams{0.2, 1.0, 1.0, 1.0};
  bad.initial_state = {10.0, 0.0};
  Scenario good = *find_builtin("fig2_vdp_classical");
  good.group.clear();
  const SuiteResult r = run_suite({good, bad}, 2);
  EXPECT_EQ(r.runs.size(), 2u);
  ASSERT_EQ(r.failures.size(), 1u) << r.failures.back();
  EXPECT_NE(r.failures[0].find("zz_bad"), std::string::npos);
  EXPECT_TRUE(r.runs[0].ok());
}

TEST(RunSuite, ZeroParallelismRejected) {
  EXPECT_THROW(run_suite(builtin_suite(), 0), Error);
}

TEST(RunSuite, ParallelismDoesNotChangeOutputs) {
  const auto start = std::chrono::steady_clock::now();
  const SuiteResult serial = run_suite(builtin_suite(), 1);
  const double serial_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  EXPECT_LT(serial_s, 60.0);
  const SuiteResult parallel = run_suite(builtin_suite(), 4);

  const fs::path a = scratch_dir("serial"), b = scratch_dir("parallel");
  write_suite_outputs(serial, a);
  write_suite_outputs(parallel, b);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) {
    names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  EXPECT_EQ(names.size(), 2 * 20u + 1 + 4);
  for (const auto& n : names) {
    ASSERT_TRUE(fs::exists(b / n)) << n;
    EXPECT_EQ(slurp(a / n), slurp(b / n)) << n;
  }
  // File names come from scenario names only.
  EXPECT_TRUE(fs::exists(a / "fig1_pendulum_observer_free.csv"));
  EXPECT_TRUE(fs::exists(a / "matrix_network5.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunSuite, ObserverFreeMatrixColumn) {
  const SuiteResult r = run_suite(builtin_suite(), 4);
  ASSERT_EQ(r.matrices.size(), 4u);
  for (const auto& [group, m] : r.matrices) {
    for (Property p : kProperties) {
      EXPECT_TRUE(m.at(p, "observer-free").pass)
          << group << " " << property_name(p);
    }
    EXPECT_FALSE(m.at(Property::NoChattering, "classical").pass) << group;
  }
}

}  // namespace
}  // namespace smclab
