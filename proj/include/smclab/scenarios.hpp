#pragma once

// Scenario files (JSON, schema "smc-lab/scenario/v1"), validation, the
// built-in benchmark suite and the batch driver.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "smclab/controllers.hpp"
#include "smclab/csv.hpp"
#include "smclab/defaults.hpp"
#include "smclab/errors.hpp"
#include "smclab/metrics.hpp"
#include "smclab/plants.hpp"
#include "smclab/sim.hpp"

namespace smclab {

using json = nlohmann::json;

inline constexpr const char* kScenarioSchema = "smc-lab/scenario/v1";

/// Carries every violation found, one per entry.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : Error(ErrorKind::InvalidConfig, join(problems)),
        problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& ps) {
    std::string out;
    for (const auto& p : ps) {
      if (!out.empty()) out += "; ";
      out += p;
    }
    return out;
  }
  std::vector<std::string> problems_;
};

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline json plant_to_json(const PlantParams& plant) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PendulumParams>) {
          return {{"type", "pendulum"}, {"a", p.a}, {"c", p.c}, {"b", p.b}};
        } else if constexpr (std::is_same_v<P, VdpParams>) {
          return {{"type", "vdp"}, {"mu", p.mu}, {"b", p.b}};
        } else if constexpr (std::is_same_v<P, DuffingParams>) {
          return {{"type", "duffing"}, {"delta", p.delta}, {"lin", p.lin},
                  {"cub", p.cub},      {"b", p.b}};
        } else {
          return {{"type", "network5"},
                  {"n", p.n},
                  {"kappa", p.kappa},
                  {"topology", p.topology == Topology::Ring ? "ring" : "chain"},
                  {"a", p.node.a},
                  {"c", p.node.c},
                  {"b", p.node.b}};
        }
      },
      plant);
}

inline json controller_to_json(const ControllerParams& c) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ObserverFreeParams>) {
          return {{"type", "observer-free"},
                  {"k1", p.k1},
                  {"lambda", p.lambda},
                  {"tanh_table_size", p.tanh_table_size}};
        } else if constexpr (std::is_same_v<P, ClassicalParams>) {
          return {{"type", "classical"}, {"lam_s", p.lam_s}, {"k", p.k}};
        } else if constexpr (std::is_same_v<P, SuperTwistingParams>) {
          return {{"type", "super-twisting"},
                  {"lam_s", p.lam_s},
                  {"k1st", p.k1st},
                  {"k2st", p.k2st}};
        } else if constexpr (std::is_same_v<P, AdaptiveParams>) {
          return {{"type", "adaptive"}, {"lam_s", p.lam_s}, {"gamma", p.gamma},
                  {"phi", p.phi},       {"k0", p.k0},       {"kmax", p.kmax}};
        } else {
          return {{"type", "none"}};
        }
      },
      c);
}

}  // namespace detail

inline json to_json(const Scenario& sc) {
  json ctrls = json::array();
  for (const auto& c : sc.controllers) {
    ctrls.push_back(detail::controller_to_json(c));
  }
  return {
      {"schema", kScenarioSchema},
      {"name", sc.name},
      {"group", sc.group},
      {"plant", detail::plant_to_json(sc.plant)},
      {"controller", ctrls},
      {"initial_state", sc.initial_state},
      {"sim",
       {{"dt", sc.sim.dt},
        {"t_final", sc.sim.t_final},
        {"seed", sc.sim.seed},
        {"record_stride", sc.sim.record_stride}}},
      {"noise", {{"std_x", sc.noise.std_x}, {"std_v", sc.noise.std_v}}},
      {"disturbance",
       {{"kind", sc.disturbance.kind == DisturbanceKind::Sinusoid ? "sinusoid"
                                                                  : "none"},
        {"amplitude", sc.disturbance.amplitude},
        {"omega", sc.disturbance.omega}}},
      {"delay", {{"tau", sc.delay.tau}}},
      {"estimate_velocity", sc.estimate_velocity},
      {"velocity_cutoff_hz", sc.velocity_cutoff_hz},
  };
}

inline std::string serialize(const Scenario& sc) { return to_json(sc).dump(2); }

// ---------------------------------------------------------------------------
// Validation

namespace detail {

/// Reads fields out of a JSON object, recording problems instead of
/// throwing so that one pass reports everything.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string path, std::vector<std::string>& errs)
      : obj_(obj), path_(std::move(path)), errs_(errs) {
    if (!obj_.is_object()) error("", "must be an object");
  }

  double number(const char* key, double fallback, bool required = false) {
    const json* v = get(key, required);
    if (!v) return fallback;
    if (!v->is_number()) {
      error(key, "must be a number");
      return fallback;
    }
    const double x = v->get<double>();
    if (!std::isfinite(x)) error(key, "must be finite");
    return x;
  }

  std::uint64_t unsigned_int(const char* key, std::uint64_t fallback) {
    const json* v = get(key, false);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) {
      error(key, "must be a non-negative integer");
      return fallback;
    }
    return v->get<std::uint64_t>();
  }

  std::string string(const char* key, std::string fallback,
                     bool required = false) {
    const json* v = get(key, required);
    if (!v) return fallback;
    if (!v->is_string()) {
      error(key, "must be a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  bool boolean(const char* key, bool fallback) {
    const json* v = get(key, false);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      error(key, "must be true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  void error(const std::string& key, const std::string& what) {
    std::string where = path_;
    if (!key.empty()) where += (where.empty() ? "" : ".") + key;
    errs_.push_back(where.empty() ? what : where + " " + what);
  }

  void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) error(key, what);
  }

 private:
  const json* get(const char* key, bool required) {
    if (!obj_.is_object()) return nullptr;
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      if (required) error(key, "is required");
      return nullptr;
    }
    return &*it;
  }

  const json& obj_;
  std::string path_;
  std::vector<std::string>& errs_;
};

inline const json& empty_object() {
  static const json obj = json::object();
  return obj;
}

inline const json& section(const json& raw, const char* key) {
  if (raw.is_object()) {
    auto it = raw.find(key);
    if (it != raw.end()) return *it;
  }
  return empty_object();
}

inline void check_gain(FieldReader& r, const char* key, double b) {
  r.check(std::abs(b) >= kMinInputGain, key, "must be nonzero");
}

inline std::optional<PlantParams> parse_plant(const json& j,
                                              std::vector<std::string>& errs) {
  FieldReader r(j, "plant", errs);
  const std::string type = r.string("type", "", true);
  if (type == "pendulum") {
    PendulumParams p;
    p.a = r.number("a", p.a);
    p.c = r.number("c", p.c);
    p.b = r.number("b", p.b);
    r.check(p.a >= 0.0, "a", "must be >= 0");
    r.check(p.c >= 0.0, "c", "must be >= 0");
    check_gain(r, "b", p.b);
    return p;
  }
  if (type == "vdp") {
    VdpParams p;
    p.mu = r.number("mu", p.mu);
    p.b = r.number("b", p.b);
    r.check(p.mu >= 0.0, "mu", "must be >= 0");
    check_gain(r, "b", p.b);
    return p;
  }
  if (type == "duffing") {
    DuffingParams p;
    p.delta = r.number("delta", p.delta);
    p.lin = r.number("lin", p.lin);
    p.cub = r.number("cub", p.cub);
    p.b = r.number("b", p.b);
    r.check(p.delta >= 0.0, "delta", "must be >= 0");
    check_gain(r, "b", p.b);
    return p;
  }
  if (type == "network5") {
    NetworkParams p;
    p.n = static_cast<std::size_t>(r.unsigned_int("n", p.n));
    p.kappa = r.number("kappa", p.kappa);
    const std::string topo = r.string("topology", "ring");
    if (topo == "ring") {
      p.topology = Topology::Ring;
    } else if (topo == "chain") {
      p.topology = Topology::Chain;
    } else {
      r.error("topology", "must be \"ring\" or \"chain\", got \"" + topo + "\"");
    }
    p.node.a = r.number("a", p.node.a);
    p.node.c = r.number("c", p.node.c);
    p.node.b = r.number("b", p.node.b);
    r.check(p.n >= 2, "n", "must be >= 2");
    r.check(p.kappa >= 0.0, "kappa", "must be >= 0");
    r.check(p.node.a >= 0.0, "a", "must be >= 0");
    r.check(p.node.c >= 0.0, "c", "must be >= 0");
    check_gain(r, "b", p.node.b);
    return p;
  }
  if (!type.empty()) {
    r.error("type", "unknown plant \"" + type +
                        "\" (expected pendulum, vdp, duffing, network5)");
  }
  return std::nullopt;
}

inline std::optional<ControllerParams> parse_controller(
    const json& j, const std::string& path, std::vector<std::string>& errs) {
  FieldReader r(j, path, errs);
  const std::string type = r.string("type", "", true);
  auto positive = [&](const char* key, double v) {
    r.check(v > 0.0, key, "must be > 0");
  };
  if (type == "observer-free") {
    ObserverFreeParams p;
    p.k1 = r.number("k1", p.k1);
    p.lambda = r.number("lambda", p.lambda);
    p.tanh_table_size =
        static_cast<std::size_t>(r.unsigned_int("tanh_table_size", 0));
    positive("k1", p.k1);
    positive("lambda", p.lambda);
    r.check(p.tanh_table_size == 0 || p.tanh_table_size >= TanhTable::kMinSize,
            "tanh_table_size", "must be 0 (exact) or >= 64");
    return p;
  }
  if (type == "classical") {
    ClassicalParams p;
    p.lam_s = r.number("lam_s", p.lam_s);
    p.k = r.number("k", p.k);
    positive("lam_s", p.lam_s);
    positive("k", p.k);
    return p;
  }
  if (type == "super-twisting") {
    SuperTwistingParams p;
    p.lam_s = r.number("lam_s", p.lam_s);
    p.k1st = r.number("k1st", p.k1st);
    p.k2st = r.number("k2st", p.k2st);
    positive("lam_s", p.lam_s);
    positive("k1st", p.k1st);
    positive("k2st", p.k2st);
    return p;
  }
  if (type == "adaptive") {
    AdaptiveParams p;
    p.lam_s = r.number("lam_s", p.lam_s);
    p.gamma = r.number("gamma", p.gamma);
    p.phi = r.number("phi", p.phi);
    p.k0 = r.number("k0", p.k0);
    p.kmax = r.number("kmax", p.kmax);
    p.k = p.k0;
    positive("lam_s", p.lam_s);
    positive("gamma", p.gamma);
    positive("phi", p.phi);
    r.check(p.k0 >= 0.0, "k0", "must be >= 0");
    r.check(p.k0 <= p.kmax, "kmax", "must be >= k0");
    return p;
  }
  if (type == "none") return OpenLoopParams{};
  if (!type.empty()) {
    r.error("type", "unknown controller \"" + type +
                        "\" (expected observer-free, classical, "
                        "super-twisting, adaptive, none)");
  }
  return std::nullopt;
}

}  // namespace detail

struct Validated {
  std::optional<Scenario> scenario;
  std::vector<std::string> errors;
};

/// Parses and checks a raw scenario, collecting every violation. A single
/// controller object is broadcast to all nodes of a network.
inline Validated validate(const json& raw) {
  Validated out;
  auto& errs = out.errors;
  if (!raw.is_object()) {
    errs.emplace_back("scenario must be a JSON object");
    return out;
  }
  Scenario sc;
  detail::FieldReader top(raw, "", errs);
  const std::string schema = top.string("schema", "", true);
  if (!schema.empty() && schema != kScenarioSchema) {
    top.error("schema", "must be \"" + std::string(kScenarioSchema) +
                            "\", got \"" + schema + "\"");
  }
  sc.name = top.string("name", "", true);
  if (raw.contains("name") && sc.name.empty()) top.error("name", "must not be empty");
  sc.group = top.string("group", "");
  sc.estimate_velocity = top.boolean("estimate_velocity", false);
  sc.velocity_cutoff_hz = top.number("velocity_cutoff_hz", 20.0);
  top.check(sc.velocity_cutoff_hz > 0.0, "velocity_cutoff_hz", "must be > 0");

  if (!raw.contains("plant")) top.error("plant", "is required");
  const auto plant = detail::parse_plant(detail::section(raw, "plant"), errs);
  const std::size_t nodes = plant ? PlantModel(*plant).nodes() : 0;
  if (plant) sc.plant = *plant;

  sc.controllers.clear();
  bool controllers_ok = true;
  if (!raw.contains("controller")) {
    top.error("controller", "is required");
    controllers_ok = false;
  } else if (const json& cj = raw["controller"]; cj.is_array()) {
    for (std::size_t i = 0; i < cj.size(); ++i) {
      auto c = detail::parse_controller(
          cj[i], "controller[" + std::to_string(i) + "]", errs);
      if (c) {
        sc.controllers.push_back(*c);
      } else {
        controllers_ok = false;
      }
    }
    if (cj.empty()) {
      top.error("controller", "must not be empty");
      controllers_ok = false;
    }
  } else {
    auto c = detail::parse_controller(cj, "controller", errs);
    if (c) {
      sc.controllers.assign(std::max<std::size_t>(nodes, 1), *c);
    } else {
      controllers_ok = false;
    }
  }
  if (plant && controllers_ok && sc.controllers.size() != nodes) {
    errs.push_back("dimension mismatch: plant has " + std::to_string(nodes) +
                   " node(s) but " + std::to_string(sc.controllers.size()) +
                   " controller(s) were given");
  }

  if (!raw.contains("initial_state")) {
    top.error("initial_state", "is required");
  } else if (const json& x0 = raw["initial_state"]; !x0.is_array()) {
    top.error("initial_state", "must be an array of numbers");
  } else {
    sc.initial_state.clear();
    bool ok = true;
    for (const auto& v : x0) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        ok = false;
        break;
      }
      sc.initial_state.push_back(v.get<double>());
    }
    if (!ok) {
      top.error("initial_state", "must contain only finite numbers");
    } else if (plant && sc.initial_state.size() != 2 * nodes) {
      errs.push_back("dimension mismatch: initial_state has " +
                     std::to_string(sc.initial_state.size()) +
                     " entries, plant needs " + std::to_string(2 * nodes));
    }
  }

  {
    detail::FieldReader r(detail::section(raw, "sim"), "sim", errs);
    sc.sim.dt = r.number("dt", sc.sim.dt);
    sc.sim.t_final = r.number("t_final", sc.sim.t_final);
    sc.sim.seed = r.unsigned_int("seed", sc.sim.seed);
    sc.sim.record_stride =
        static_cast<std::size_t>(r.unsigned_int("record_stride", 1));
    if (!(sc.sim.dt > 0.0)) {
      errs.emplace_back("dt must be positive");
    } else {
      r.check(sc.sim.dt >= 1e-6 && sc.sim.dt <= 1e-1, "dt",
              "must lie in [1e-6, 1e-1]");
      r.check(sc.sim.t_final >= sc.sim.dt, "t_final", "must be >= dt");
      r.check(sc.sim.t_final / sc.sim.dt <= 1e8, "t_final",
              "must be at most 1e8 steps");
    }
    r.check(sc.sim.record_stride >= 1, "record_stride", "must be >= 1");
  }
  {
    detail::FieldReader r(detail::section(raw, "noise"), "noise", errs);
    sc.noise.std_x = r.number("std_x", 0.0);
    sc.noise.std_v = r.number("std_v", 0.0);
    r.check(sc.noise.std_x >= 0.0, "std_x", "must be >= 0");
    r.check(sc.noise.std_v >= 0.0, "std_v", "must be >= 0");
  }
  {
    detail::FieldReader r(detail::section(raw, "disturbance"), "disturbance",
                          errs);
    const std::string kind = r.string("kind", "none");
    if (kind == "none") {
      sc.disturbance.kind = DisturbanceKind::None;
    } else if (kind == "sinusoid") {
      sc.disturbance.kind = DisturbanceKind::Sinusoid;
    } else {
      r.error("kind", "must be \"none\" or \"sinusoid\", got \"" + kind + "\"");
    }
    sc.disturbance.amplitude = r.number("amplitude", 0.0);
    sc.disturbance.omega = r.number("omega", 0.0);
    r.check(sc.disturbance.amplitude >= 0.0, "amplitude", "must be >= 0");
    r.check(sc.disturbance.omega >= 0.0, "omega", "must be >= 0");
  }
  {
    detail::FieldReader r(detail::section(raw, "delay"), "delay", errs);
    sc.delay.tau = r.number("tau", 0.0);
    r.check(sc.delay.tau >= 0.0, "tau", "must be >= 0");
  }

  if (errs.empty()) out.scenario = std::move(sc);
  return out;
}

inline std::vector<std::string> validate(const Scenario& sc) {
  return validate(to_json(sc)).errors;
}

/// Throws ValidationError listing every problem.
inline Scenario parse_scenario(const json& raw) {
  Validated v = validate(raw);
  if (!v.scenario) throw ValidationError(std::move(v.errors));
  return std::move(*v.scenario);
}

inline Scenario parse_scenario(const std::string& text) {
  json raw;
  try {
    raw = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError({std::string("invalid JSON: ") + e.what()});
  }
  return parse_scenario(raw);
}

inline json load_scenario_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError({std::string("invalid JSON: ") + e.what()});
  }
}

/// Applies `dotted.path=value` to a raw scenario before validation. The value
/// is parsed as JSON when possible, otherwise taken as a string. A path that
/// steps into an array of controllers applies to every element.
inline void apply_override(json& raw, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError({"override '" + assignment + "' must be path=value"});
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }

  std::vector<std::string> keys;
  for (std::size_t start = 0;;) {
    const auto dot = path.find('.', start);
    keys.push_back(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }

  auto assign = [&](auto&& self, json& node, std::size_t depth) -> void {
    if (node.is_array()) {
      for (auto& el : node) self(self, el, depth);
      return;
    }
    if (!node.is_object()) {
      throw ValidationError({"override '" + path + "': '" +
                             keys[depth - 1] + "' is not an object"});
    }
    if (depth + 1 == keys.size()) {
      node[keys[depth]] = value;
      return;
    }
    self(self, node[keys[depth]], depth + 1);
  };
  assign(assign, raw, 0);
}

// ---------------------------------------------------------------------------
// Built-in suite

/// Uniform draws in [lo, hi) from a 64-bit Mersenne Twister, mapped with the
/// top 53 bits so the values do not depend on the standard library.
inline std::vector<double> seeded_uniform(std::uint64_t seed, std::size_t n,
                                          double lo, double hi) {
  std::mt19937_64 gen(seed);
  std::vector<double> out(n);
  for (double& v : out) {
    const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    v = lo + (hi - lo) * unit;
  }
  return out;
}

struct PlantSetup {
  const char* figure;
  const char* plant_tag;
  PlantParams plant;
  StateVec x0;
  double lambda;
};

inline std::vector<PlantSetup> benchmark_plants() {
  const NetworkParams net{};
  StateVec net_x0(2 * net.n, 0.0);
  const auto angles = seeded_uniform(defaults::kNetworkSeed, net.n,
                                     -defaults::kNetworkSpread,
                                     defaults::kNetworkSpread);
  for (std::size_t i = 0; i < net.n; ++i) net_x0[2 * i] = angles[i];
  return {
      {"fig1", "pendulum", PendulumParams{}, {0.5, 0.0},
       defaults::kLambdaPendulum},
      {"fig2", "vdp", VdpParams{}, {2.0, 0.0}, defaults::kLambdaOscillator},
      {"fig3", "duffing", DuffingParams{}, {1.5, 0.0},
       defaults::kLambdaOscillator},
      {"fig4", "network5", net, net_x0, defaults::kLambdaPendulum},
  };
}

/// The four controller families in comparison-table order.
inline std::vector<std::pair<std::string, ControllerParams>>
benchmark_controllers(double lambda) {
  ObserverFreeParams of;
  of.k1 = defaults::kK1;
  of.lambda = lambda;
  ClassicalParams cl;
  cl.lam_s = defaults::kSurfaceSlope;
  cl.k = lambda;
  SuperTwistingParams st;
  st.lam_s = defaults::kSurfaceSlope;
  st.k1st = 1.5 * std::sqrt(defaults::kSuperTwistingBound);
  st.k2st = 1.1 * defaults::kSuperTwistingBound;
  AdaptiveParams ad;
  ad.lam_s = defaults::kSurfaceSlope;
  ad.gamma = defaults::kAdaptiveGamma;
  ad.phi = defaults::kAdaptivePhi;
  ad.k0 = defaults::kAdaptiveK0;
  ad.kmax = defaults::kAdaptiveKmax;
  ad.k = ad.k0;
  return {{"classical", cl},
          {"super_twisting", st},
          {"adaptive", ad},
          {"observer_free", of}};
}

inline Scenario make_scenario(std::string name, std::string group,
                              const PlantParams& plant, StateVec x0,
                              const ControllerParams& controller) {
  Scenario sc;
  sc.name = std::move(name);
  sc.group = std::move(group);
  sc.plant = plant;
  sc.controllers.assign(PlantModel(plant).nodes(), controller);
  sc.initial_state = std::move(x0);
  sc.sim = SimConfig{defaults::kDt, defaults::kTFinal, defaults::kSeed, 1};
  return sc;
}

/// Every benchmark figure as a scenario: four plants under four controllers,
/// the three robustness cases on Van der Pol, and a delayed pendulum probe.
inline std::vector<Scenario> builtin_suite() {
  std::vector<Scenario> suite;
  for (const auto& ps : benchmark_plants()) {
    for (const auto& [tag, ctrl] : benchmark_controllers(ps.lambda)) {
      suite.push_back(make_scenario(
          std::string(ps.figure) + "_" + ps.plant_tag + "_" + tag,
          ps.plant_tag, ps.plant, ps.x0, ctrl));
    }
  }

  const auto vdp = benchmark_plants()[1];
  ObserverFreeParams of;
  of.k1 = defaults::kK1;
  of.lambda = vdp.lambda;

  suite.push_back(make_scenario("fig5_vdp_nominal", "", vdp.plant, vdp.x0, of));

  Scenario noisy = make_scenario("fig6_vdp_noise", "", vdp.plant, vdp.x0, of);
  noisy.noise = NoiseConfig{defaults::kNoiseStd, defaults::kNoiseStd};
  suite.push_back(noisy);

  Scenario perturbed =
      make_scenario("fig7_vdp_perturbed", "", vdp.plant, vdp.x0, of);
  perturbed.disturbance = DisturbanceSpec{DisturbanceKind::Sinusoid,
                                          defaults::kDisturbanceAmplitude,
                                          defaults::kDisturbanceOmega};
  suite.push_back(perturbed);

  ObserverFreeParams of_pend;
  of_pend.k1 = defaults::kK1;
  of_pend.lambda = defaults::kLambdaPendulum;
  Scenario delayed = make_scenario("delay_pendulum_observer_free", "",
                                   PendulumParams{}, {0.5, 0.0}, of_pend);
  delayed.delay.tau = defaults::kDelayProbeTau;
  suite.push_back(delayed);

  std::sort(suite.begin(), suite.end(),
            [](const Scenario& a, const Scenario& b) { return a.name < b.name; });
  return suite;
}

inline std::optional<Scenario> find_builtin(const std::string& name) {
  for (auto& sc : builtin_suite()) {
    if (sc.name == name) return sc;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Batch driver

struct RunOutcome {
  std::string name;
  std::optional<RunResult> run;
  MetricsReport metrics;
  /// Set when the run could not produce a result at all.
  std::string error;

  bool ok() const { return error.empty() && run && !run->diverged; }
};

struct SuiteResult {
  /// Sorted by scenario name.
  std::vector<RunOutcome> runs;
  std::map<std::string, ComparisonMatrix> matrices;
  std::vector<std::string> failures;

  const RunOutcome* find(const std::string& name) const {
    for (const auto& r : runs) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }
};

/// Everything that must agree for two runs to be comparable.
inline std::string comparison_key(const Scenario& sc) {
  json j = to_json(sc);
  j.erase("name");
  j.erase("controller");
  return j.dump();
}

inline RunOutcome run_one(const Scenario& sc,
                          const MetricsConfig& mcfg = {}) {
  RunOutcome out;
  out.name = sc.name;
  try {
    RunResult r = simulate_run(sc);
    const double h = sc.sim.dt * static_cast<double>(sc.sim.record_stride);
    out.metrics = compute_metrics(r.series, h, mcfg, r.diverged);
    out.run = std::move(r);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t count, std::size_t parallelism, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(
      1, std::min(parallelism, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Runs every scenario and builds one comparison matrix per group. Results
/// are independent of `parallelism`; a failing run is recorded, not fatal.
inline SuiteResult run_suite(std::vector<Scenario> suite,
                             std::size_t parallelism,
                             const MetricsConfig& mcfg = {}) {
  if (parallelism == 0) {
    fail(ErrorKind::InvalidConfig, "parallelism must be >= 1");
  }
  std::sort(suite.begin(), suite.end(),
            [](const Scenario& a, const Scenario& b) { return a.name < b.name; });

  // Each grouped scenario is rerun with the delay probe for Delay-Tolerant.
  std::vector<Scenario> jobs = suite;
  std::vector<std::size_t> delayed_of(suite.size(), SIZE_MAX);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    if (suite[i].group.empty()) continue;
    Scenario d = suite[i];
    d.name += "@delay";
    d.delay.tau = defaults::kDelayProbeTau;
    delayed_of[i] = jobs.size();
    jobs.push_back(std::move(d));
  }

  std::vector<RunOutcome> outcomes(jobs.size());
  detail::parallel_for(jobs.size(), parallelism,
                       [&](std::size_t i) { outcomes[i] = run_one(jobs[i], mcfg); });

  SuiteResult result;
  std::map<std::string, std::vector<ComparisonEntry>> groups;
  std::map<std::string, std::size_t> group_nodes;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    RunOutcome& o = outcomes[i];
    if (!o.error.empty()) {
      result.failures.push_back(o.name + ": " + o.error);
    } else if (o.run->diverged) {
      result.failures.push_back(o.name + ": diverged (" + o.run->message + ")");
    }
    const Scenario& sc = suite[i];
    if (!sc.group.empty() && o.error.empty()) {
      ComparisonEntry e;
      e.controller = std::string(controller_name(sc.controllers.front()));
      e.scenario_key = comparison_key(sc);
      e.nominal = o.metrics;
      const RunOutcome& d = outcomes[delayed_of[i]];
      if (d.error.empty()) e.delayed = d.metrics;
      e.declared_bound = Controller::declared_bound(sc.controllers.front());
      e.observer_free = Controller::observer_free(sc.controllers.front());
      groups[sc.group].push_back(std::move(e));
      group_nodes[sc.group] = sc.controllers.size();
    }
    result.runs.push_back(std::move(o));
  }

  // Columns in comparison-table order.
  auto rank = [](const std::string& c) {
    static const std::vector<std::string> order{"classical", "super-twisting",
                                                "adaptive", "observer-free"};
    return std::find(order.begin(), order.end(), c) - order.begin();
  };
  for (auto& [group, entries] : groups) {
    std::stable_sort(entries.begin(), entries.end(),
                     [&](const auto& a, const auto& b) {
                       return rank(a.controller) < rank(b.controller);
                     });
    ComparisonThresholds th;
    th.scale = static_cast<double>(group_nodes[group]);
    try {
      result.matrices.emplace(group, comparison_matrix(entries, th));
    } catch (const Error& e) {
      result.failures.push_back("matrix " + group + ": " + e.what());
    }
  }
  return result;
}

/// Writes <name>.csv and <name>.metrics.txt per run, summary.csv, and
/// matrix_<group>.csv. Contents depend only on the results.
inline void write_suite_outputs(const SuiteResult& result,
                                const std::filesystem::path& out_dir,
                                const MetricsConfig& mcfg = {}) {
  std::filesystem::create_directories(out_dir);
  for (const auto& o : result.runs) {
    if (!o.run) continue;
    std::ofstream csv(out_dir / (o.name + ".csv"), std::ios::binary);
    write_csv(csv, o.run->series);
    std::ofstream txt(out_dir / (o.name + ".metrics.txt"), std::ios::binary);
    write_metrics_text(txt, o.name, o.metrics, mcfg);
  }
  std::ofstream summary(out_dir / "summary.csv", std::ios::binary);
  summary << kMetricsCsvHeader << '\n';
  for (const auto& o : result.runs) {
    if (o.run) summary << metrics_csv_row(o.name, o.metrics) << '\n';
  }
  for (const auto& [group, m] : result.matrices) {
    std::ofstream mf(out_dir / ("matrix_" + group + ".csv"), std::ios::binary);
    write_matrix_csv(mf, m);
  }
}

}  // namespace smclab
