#pragma once

// Second-order benchmark plants of the form  x'' = f(x, x', t) + g(x) u.
// State is stored flat as [x_1, v_1, ..., x_N, v_N].

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "smclab/errors.hpp"

namespace smclab {

using StateVec = std::vector<double>;

/// Smallest admissible |g(x)|.
inline constexpr double kMinInputGain = 1e-9;

/// Inverted pendulum: x'' = a sin(x) - c x' + b u.
struct PendulumParams {
  double a = 1.0;
  double c = 0.1;
  double b = 1.0;
  bool operator==(const PendulumParams&) const = default;
};

/// Van der Pol: x'' = mu (1 - x^2) x' - x + b u.
struct VdpParams {
  double mu = 1.0;
  double b = 1.0;
  bool operator==(const VdpParams&) const = default;
};

/// Unforced Duffing: x'' = lin x + cub x^3 - delta x' + b u.
struct DuffingParams {
  double delta = 0.2;
  double lin = 1.0;
  double cub = -1.0;
  double b = 1.0;
  bool operator==(const DuffingParams&) const = default;
};

enum class Topology { Ring, Chain };

/// Pendulums with diffusive position coupling
///   x_i'' = a sin(x_i) - c v_i + kappa sum_{j in N(i)} (x_j - x_i) + b u_i.
struct NetworkParams {
  std::size_t n = 5;
  double kappa = 0.5;
  Topology topology = Topology::Ring;
  PendulumParams node{};
  bool operator==(const NetworkParams&) const = default;
};

namespace detail {

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void require_finite(std::span<const double> xs, double u,
                           const char* who) {
  if (!all_finite(xs) || !std::isfinite(u)) {
    fail(ErrorKind::InvalidInput, std::string(who) + ": non-finite input");
  }
}

inline void require_pair(std::span<const double> state, const char* who) {
  if (state.size() != 2) {
    fail(ErrorKind::InvalidInput,
         std::string(who) + ": expected a 2-element state");
  }
}

}  // namespace detail

inline StateVec pendulum_dynamics(std::span<const double> state, double u,
                                  const PendulumParams& p) {
  detail::require_pair(state, "pendulum_dynamics");
  detail::require_finite(state, u, "pendulum_dynamics");
  const double x = state[0];
  const double v = state[1];
  return {v, p.a * std::sin(x) - p.c * v + p.b * u};
}

inline StateVec vdp_dynamics(std::span<const double> state, double u,
                             const VdpParams& p) {
  detail::require_pair(state, "vdp_dynamics");
  detail::require_finite(state, u, "vdp_dynamics");
  const double x = state[0];
  const double v = state[1];
  return {v, p.mu * (1.0 - x * x) * v - x + p.b * u};
}

inline StateVec duffing_dynamics(std::span<const double> state, double u,
                                 const DuffingParams& p) {
  detail::require_pair(state, "duffing_dynamics");
  detail::require_finite(state, u, "duffing_dynamics");
  const double x = state[0];
  const double v = state[1];
  return {v, p.lin * x + p.cub * x * x * x - p.delta * v + p.b * u};
}

/// Neighbor indices of node i; duplicates are collapsed (a 2-node ring has
/// one neighbor per node).
inline std::vector<std::size_t> network_neighbors(std::size_t i, std::size_t n,
                                                  Topology topology) {
  std::vector<std::size_t> out;
  if (n < 2) return out;
  const bool ring = topology == Topology::Ring;
  if (i > 0) {
    out.push_back(i - 1);
  } else if (ring) {
    out.push_back(n - 1);
  }
  std::size_t next = i + 1;
  if (next < n) {
    if (out.empty() || out.front() != next) out.push_back(next);
  } else if (ring && (out.empty() || out.front() != 0)) {
    out.push_back(0);
  }
  return out;
}

/// Diffusive coupling term kappa * sum_{j in N(i)} (x_j - x_i) for node i.
inline double network_coupling(std::span<const double> state, std::size_t i,
                               const NetworkParams& p) {
  const double xi = state[2 * i];
  double acc = 0.0;
  for (std::size_t j : network_neighbors(i, p.n, p.topology)) {
    acc += state[2 * j] - xi;
  }
  return p.kappa * acc;
}

inline StateVec network_dynamics(std::span<const double> state,
                                 std::span<const double> u,
                                 const NetworkParams& p) {
  if (state.size() != 2 * p.n || u.size() != p.n) {
    fail(ErrorKind::InvalidInput,
         "network_dynamics: dimension mismatch (state " +
             std::to_string(state.size()) + ", controls " +
             std::to_string(u.size()) + ", nodes " + std::to_string(p.n) +
             ")");
  }
  if (!detail::all_finite(state) || !detail::all_finite(u)) {
    fail(ErrorKind::InvalidInput, "network_dynamics: non-finite input");
  }
  StateVec out(state.size());
  for (std::size_t i = 0; i < p.n; ++i) {
    const double x = state[2 * i];
    const double v = state[2 * i + 1];
    out[2 * i] = v;
    out[2 * i + 1] = p.node.a * std::sin(x) - p.node.c * v +
                     network_coupling(state, i, p) + p.node.b * u[i];
  }
  return out;
}

using PlantParams =
    std::variant<PendulumParams, VdpParams, DuffingParams, NetworkParams>;

/// Uniform view over the four benchmark plants.
class PlantModel {
 public:
  explicit PlantModel(PlantParams params) : params_(std::move(params)) {}

  const PlantParams& params() const { return params_; }

  std::size_t nodes() const {
    if (const auto* net = std::get_if<NetworkParams>(&params_)) return net->n;
    return 1;
  }

  std::size_t state_size() const { return 2 * nodes(); }

  std::string_view name() const {
    switch (params_.index()) {
      case 0: return "pendulum";
      case 1: return "vdp";
      case 2: return "duffing";
      default: return "network";
    }
  }

  /// Input gain g(x) seen by node `node`. Throws on |g| < kMinInputGain.
  double input_gain(std::span<const double> state, std::size_t node) const {
    (void)state;
    (void)node;
    const double g = std::visit(
        [](const auto& p) -> double {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, NetworkParams>) {
            return p.node.b;
          } else {
            return p.b;
          }
        },
        params_);
    if (!(std::abs(g) >= kMinInputGain)) {
      fail(ErrorKind::SingularGain, "input gain g(x) vanished");
    }
    return g;
  }

  /// Full state derivative with controls held at `u` and a matched
  /// disturbance `d` added to every acceleration channel.
  StateVec derivative(std::span<const double> state, std::span<const double> u,
                      double d) const {
    StateVec out = std::visit(
        [&](const auto& p) -> StateVec {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, NetworkParams>) {
            return network_dynamics(state, u, p);
          } else {
            if (u.size() != 1) {
              fail(ErrorKind::InvalidInput,
                   "single-node plant expects one control");
            }
            if constexpr (std::is_same_v<P, PendulumParams>) {
              return pendulum_dynamics(state, u[0], p);
            } else if constexpr (std::is_same_v<P, VdpParams>) {
              return vdp_dynamics(state, u[0], p);
            } else {
              return duffing_dynamics(state, u[0], p);
            }
          }
        },
        params_);
    if (d != 0.0) {
      for (std::size_t i = 1; i < out.size(); i += 2) out[i] += d;
    }
    return out;
  }

 private:
  PlantParams params_;
};

}  // namespace smclab
