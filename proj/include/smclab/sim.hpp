#pragma once

// Fixed-step closed-loop simulation. Controls are held constant across the
// four RK4 stages (zero-order hold), as a sampled-data controller would.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "smclab/controllers.hpp"
#include "smclab/errors.hpp"
#include "smclab/plants.hpp"

namespace smclab {

/// Any |state entry| above this aborts the run.
inline constexpr double kDivergenceThreshold = 1e6;

struct SimConfig {
  double dt = 1e-3;
  double t_final = 10.0;
  std::uint64_t seed = 42;
  std::size_t record_stride = 1;
  bool operator==(const SimConfig&) const = default;
};

struct NoiseConfig {
  double std_x = 0.0;
  double std_v = 0.0;
  bool operator==(const NoiseConfig&) const = default;
};

enum class DisturbanceKind { None, Sinusoid };

/// Matched disturbance A sin(omega t) on the acceleration channel.
struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::None;
  double amplitude = 0.0;
  double omega = 0.0;
  bool operator==(const DisturbanceSpec&) const = default;
};

/// Input delay realized as a FIFO of past controls, zero-filled at start.
struct DelaySpec {
  double tau = 0.0;
  bool operator==(const DelaySpec&) const = default;
};

inline double eval_disturbance(const DisturbanceSpec& spec, double t) {
  if (spec.kind == DisturbanceKind::None) return 0.0;
  return spec.amplitude * std::sin(spec.omega * t);
}

/// Number of control periods held in the delay line.
inline std::size_t delay_steps(const DelaySpec& delay, double dt) {
  if (delay.tau <= 0.0) return 0;
  // Absorb representation error, e.g. 0.01 / 0.001 = 10.000000000000002.
  return static_cast<std::size_t>(std::ceil(delay.tau / dt - 1e-9));
}

/// One classical Runge-Kutta step of x' = deriv(x, t).
template <typename Deriv>
StateVec rk4_step(Deriv&& deriv, std::span<const double> state, double t,
                  double dt) {
  const std::size_t n = state.size();
  auto check = [&](std::span<const double> xs, double at) {
    if (!detail::all_finite(xs)) {
      throw DivergenceError(at, "non-finite value in RK4 stage at t=" +
                                    std::to_string(at));
    }
  };
  auto axpy = [&](const StateVec& k, double h) {
    StateVec out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = state[i] + h * k[i];
    return out;
  };

  check(state, t);
  const StateVec k1 = deriv(state, t);
  check(k1, t);
  const StateVec s2 = axpy(k1, 0.5 * dt);
  check(s2, t + 0.5 * dt);
  const StateVec k2 = deriv(std::span<const double>(s2), t + 0.5 * dt);
  check(k2, t + 0.5 * dt);
  const StateVec s3 = axpy(k2, 0.5 * dt);
  check(s3, t + 0.5 * dt);
  const StateVec k3 = deriv(std::span<const double>(s3), t + 0.5 * dt);
  check(k3, t + 0.5 * dt);
  const StateVec s4 = axpy(k3, dt);
  check(s4, t + dt);
  const StateVec k4 = deriv(std::span<const double>(s4), t + dt);
  check(k4, t + dt);

  StateVec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  check(out, t + dt);
  return out;
}

/// Gaussian measurement noise with one independent stream per node and
/// channel. Stream (node, channel) depends only on the seed and its indices,
/// so adding nodes leaves existing streams unchanged.
class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, std::size_t nodes) {
    streams_.reserve(2 * nodes);
    for (std::size_t node = 0; node < nodes; ++node) {
      for (std::uint32_t channel = 0; channel < 2; ++channel) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(node), channel};
        streams_.emplace_back(std::mt19937_64(seq));
      }
    }
  }

  std::size_t nodes() const { return streams_.size() / 2; }

  double draw(std::size_t node, std::size_t channel) {
    Stream& s = streams_.at(2 * node + channel);
    return s.dist(s.engine);
  }

 private:
  struct Stream {
    explicit Stream(std::mt19937_64 e) : engine(std::move(e)) {}
    std::mt19937_64 engine;
    std::normal_distribution<double> dist{0.0, 1.0};
  };
  std::vector<Stream> streams_;
};

/// Returns the measured state; the true state is not touched.
inline StateVec apply_noise(std::span<const double> state,
                            const NoiseConfig& cfg, NoiseSource& rng) {
  StateVec out(state.begin(), state.end());
  const std::size_t nodes = state.size() / 2;
  for (std::size_t i = 0; i < nodes; ++i) {
    if (cfg.std_x > 0.0) out[2 * i] += cfg.std_x * rng.draw(i, 0);
    if (cfg.std_v > 0.0) out[2 * i + 1] += cfg.std_v * rng.draw(i, 1);
  }
  return out;
}

/// Backward difference followed by a first-order low-pass filter with time
/// constant 1 / (2 pi cutoff). The filter starts from zero.
class DerivativeEstimator {
 public:
  DerivativeEstimator(double dt, double cutoff_hz)
      : dt_(dt), gain_(dt / (1.0 / (2.0 * std::numbers::pi * cutoff_hz) + dt)) {
    if (!(dt > 0.0) || !(cutoff_hz > 0.0)) {
      fail(ErrorKind::InvalidConfig,
           "derivative estimator needs dt > 0 and cutoff > 0");
    }
  }

  /// Feeds one position sample; returns the current estimate (0 until two
  /// samples have been seen).
  double update(double x) {
    if (has_prev_) {
      const double raw = (x - prev_) / dt_;
      y_ += gain_ * (raw - y_);
    }
    prev_ = x;
    has_prev_ = true;
    return y_;
  }

  double value() const { return y_; }

 private:
  double dt_;
  double gain_;
  double prev_ = 0.0;
  double y_ = 0.0;
  bool has_prev_ = false;
};

inline double estimate_derivative(std::span<const double> x_history, double dt,
                                  double cutoff_hz) {
  if (x_history.size() < 2) {
    fail(ErrorKind::InsufficientHistory,
         "estimate_derivative needs at least 2 samples");
  }
  DerivativeEstimator est(dt, cutoff_hz);
  for (double x : x_history) est.update(x);
  return est.value();
}

struct NodeTrace {
  std::vector<double> x, v, u, alpha, beta, s, V;
};

/// Uniformly sampled closed-loop record.
struct TimeSeries {
  std::vector<double> t;
  std::vector<NodeTrace> nodes;
  std::vector<double> d;

  std::size_t size() const { return t.size(); }

  bool operator==(const TimeSeries& o) const {
    if (t != o.t || d != o.d || nodes.size() != o.nodes.size()) return false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& a = nodes[i];
      const auto& b = o.nodes[i];
      if (a.x != b.x || a.v != b.v || a.u != b.u || a.alpha != b.alpha ||
          a.beta != b.beta || a.s != b.s || a.V != b.V) {
        return false;
      }
    }
    return true;
  }
};

struct Scenario {
  std::string name;
  /// Scenarios sharing a non-empty group are compared against each other.
  std::string group;
  PlantParams plant = PendulumParams{};
  /// One entry per node.
  std::vector<ControllerParams> controllers{ObserverFreeParams{}};
  StateVec initial_state{0.5, 0.0};
  SimConfig sim{};
  NoiseConfig noise{};
  DisturbanceSpec disturbance{};
  DelaySpec delay{};
  bool estimate_velocity = false;
  double velocity_cutoff_hz = 20.0;

  bool operator==(const Scenario&) const = default;
};

struct RunResult {
  TimeSeries series;
  bool diverged = false;
  double divergence_time = 0.0;
  std::string message;
};

inline std::size_t step_count(const SimConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
}

/// Runs the closed loop. Per step: measure (noise), optionally estimate
/// velocity, compute per-node controls, pass them through the delay line,
/// record, then advance the true state with the disturbance added.
inline RunResult simulate_run(const Scenario& sc) {
  const PlantModel plant(sc.plant);
  const std::size_t nodes = plant.nodes();
  if (sc.controllers.size() != nodes ||
      sc.initial_state.size() != plant.state_size()) {
    fail(ErrorKind::InvalidConfig,
         "scenario '" + sc.name + "': dimension mismatch");
  }
  if (!(sc.sim.dt > 0.0) || !(sc.sim.t_final >= sc.sim.dt) ||
      sc.sim.record_stride == 0) {
    fail(ErrorKind::InvalidConfig,
         "scenario '" + sc.name + "': invalid sim config");
  }

  const double dt = sc.sim.dt;
  const std::size_t steps = step_count(sc.sim);
  const std::size_t stride = sc.sim.record_stride;

  std::vector<Controller> ctrl;
  ctrl.reserve(nodes);
  for (const auto& c : sc.controllers) ctrl.emplace_back(c);

  std::vector<DerivativeEstimator> estimators;
  if (sc.estimate_velocity) {
    estimators.assign(nodes, DerivativeEstimator(dt, sc.velocity_cutoff_hz));
  }

  NoiseSource rng(sc.sim.seed, nodes);
  const std::size_t lag = delay_steps(sc.delay, dt);
  std::deque<std::vector<double>> delay_line(lag,
                                             std::vector<double>(nodes, 0.0));

  RunResult result;
  TimeSeries& ts = result.series;
  ts.nodes.resize(nodes);
  const std::size_t expected = steps / stride + 1;
  ts.t.reserve(expected);
  ts.d.reserve(expected);
  for (auto& nt : ts.nodes) {
    for (auto* col : {&nt.x, &nt.v, &nt.u, &nt.alpha, &nt.beta, &nt.s, &nt.V}) {
      col->reserve(expected);
    }
  }

  StateVec state = sc.initial_state;
  std::vector<double> computed(nodes);
  std::vector<ControlOutput> diag(nodes);

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;

    const StateVec measured = apply_noise(state, sc.noise, rng);
    for (std::size_t i = 0; i < nodes; ++i) {
      const double xm = measured[2 * i];
      const double vm = sc.estimate_velocity ? estimators[i].update(xm)
                                             : measured[2 * i + 1];
      const double g = plant.input_gain(measured, i);
      diag[i] = ctrl[i].step(xm, vm, g, dt);
      computed[i] = diag[i].u;
    }

    std::vector<double> applied;
    if (lag == 0) {
      applied = computed;
    } else {
      delay_line.push_back(computed);
      applied = std::move(delay_line.front());
      delay_line.pop_front();
    }

    const double d_now = eval_disturbance(sc.disturbance, t);
    if (k % stride == 0) {
      ts.t.push_back(t);
      ts.d.push_back(d_now);
      for (std::size_t i = 0; i < nodes; ++i) {
        NodeTrace& nt = ts.nodes[i];
        nt.x.push_back(state[2 * i]);
        nt.v.push_back(state[2 * i + 1]);
        nt.u.push_back(applied[i]);
        nt.alpha.push_back(diag[i].alpha);
        nt.beta.push_back(diag[i].beta);
        nt.s.push_back(diag[i].s);
        nt.V.push_back(diag[i].V);
      }
    }
    if (k == steps) break;

    auto deriv = [&](std::span<const double> x, double at) {
      return plant.derivative(x, applied, eval_disturbance(sc.disturbance, at));
    };
    try {
      state = rk4_step(deriv, state, t, dt);
    } catch (const DivergenceError& e) {
      result.diverged = true;
      result.divergence_time = e.time();
      result.message = e.what();
      return result;
    }
    for (double x : state) {
      if (std::abs(x) > kDivergenceThreshold) {
        result.diverged = true;
        result.divergence_time = t + dt;
        result.message = "state exceeded 1e6 at t=" + std::to_string(t + dt);
        return result;
      }
    }
  }
  return result;
}

}  // namespace smclab
