#pragma once

// Sliding mode controllers. Every controller reports the same diagnostics
// (alpha, beta, s, V) so traces share one schema across families.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "smclab/errors.hpp"
#include "smclab/plants.hpp"

namespace smclab {

struct ControlOutput {
  double u = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double s = 0.0;
  double V = 0.0;
};

inline double sign(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

/// Piecewise-linear tanh on a uniform grid over [-6, 6], clamped to
/// +-tanh(6) outside the grid.
class TanhTable {
 public:
  static constexpr double kRange = 6.0;
  static constexpr std::size_t kMinSize = 64;

  explicit TanhTable(std::size_t size) {
    if (size < kMinSize) {
      fail(ErrorKind::InvalidConfig,
           "tanh table needs at least " + std::to_string(kMinSize) +
               " entries, got " + std::to_string(size));
    }
    values_.resize(size);
    step_ = 2.0 * kRange / static_cast<double>(size - 1);
    for (std::size_t i = 0; i < size; ++i) {
      values_[i] = std::tanh(node(i));
    }
    values_.front() = -std::tanh(kRange);
    values_.back() = std::tanh(kRange);
    // Odd sizes put a node exactly at 0.
    if (size % 2 == 1) values_[size / 2] = 0.0;
  }

  std::size_t size() const { return values_.size(); }

  double operator()(double alpha) const {
    if (alpha <= -kRange) return values_.front();
    if (alpha >= kRange) return values_.back();
    if (alpha == 0.0) return 0.0;
    // Evaluate on |alpha| so the approximation stays exactly odd.
    const double a = std::abs(alpha);
    const double pos = (a + kRange) / step_;
    auto i = static_cast<std::size_t>(pos);
    if (i >= values_.size() - 1) i = values_.size() - 2;
    const double frac = pos - static_cast<double>(i);
    const double y = values_[i] + frac * (values_[i + 1] - values_[i]);
    return alpha < 0.0 ? -y : y;
  }

 private:
  double node(std::size_t i) const {
    return -kRange + step_ * static_cast<double>(i);
  }

  std::vector<double> values_;
  double step_ = 0.0;
};

/// Shared, immutable table for a given size. Thread-safe.
inline std::shared_ptr<const TanhTable> tanh_table(std::size_t size) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const TanhTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(size);
  if (it != cache.end()) return it->second;
  auto table = std::make_shared<const TanhTable>(size);
  cache.emplace(size, table);
  return table;
}

inline double tanh_fast(double alpha, std::size_t table_size) {
  return (*tanh_table(table_size))(alpha);
}

/// Observer-free law: alpha = v + k1 x, u = -lambda tanh(alpha),
/// beta = u / g, s = alpha - beta.
struct ObserverFreeParams {
  double k1 = 1.0;
  double lambda = 5.0;
  /// 0 selects std::tanh; otherwise the lookup-table size.
  std::size_t tanh_table_size = 0;
  bool operator==(const ObserverFreeParams&) const = default;
};

/// u = -k sign(s), s = v + lam_s x.
struct ClassicalParams {
  double lam_s = 1.0;
  double k = 5.0;
  bool operator==(const ClassicalParams&) const = default;
};

/// u = -k1st sqrt|s| sign(s) + v_int,  v_int' = -k2st sign(s).
struct SuperTwistingParams {
  double lam_s = 1.0;
  double k1st = 1.5 * std::sqrt(5.0);
  double k2st = 1.1 * 5.0;
  double v = 0.0;
  bool operator==(const SuperTwistingParams&) const = default;
};

/// u = -k sat(s / phi),  k' = gamma |s| clipped to [0, kmax].
struct AdaptiveParams {
  double lam_s = 1.0;
  double gamma = 5.0;
  double phi = 0.05;
  double k0 = 1.0;
  double kmax = 50.0;
  double k = 1.0;
  bool operator==(const AdaptiveParams&) const = default;
};

namespace detail {

inline void require_finite_inputs(double x, double v, const char* who) {
  if (!std::isfinite(x) || !std::isfinite(v)) {
    fail(ErrorKind::InvalidInput, std::string(who) + ": non-finite input");
  }
}

inline void require_positive_dt(double dt, const char* who) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    fail(ErrorKind::InvalidInput, std::string(who) + ": dt must be positive");
  }
}

inline ControlOutput surface_only(double s, double u) {
  return ControlOutput{u, s, 0.0, s, 0.5 * s * s};
}

}  // namespace detail

inline ControlOutput observer_free_control(double x, double v, double g_val,
                                           const ObserverFreeParams& p,
                                           const TanhTable* table = nullptr) {
  detail::require_finite_inputs(x, v, "observer_free_control");
  if (!std::isfinite(g_val) || std::abs(g_val) < kMinInputGain) {
    fail(ErrorKind::SingularGain, "observer_free_control: |g| below 1e-9");
  }
  ControlOutput out;
  out.alpha = v + p.k1 * x;
  const double th = table ? (*table)(out.alpha) : std::tanh(out.alpha);
  out.u = -p.lambda * th;
  out.beta = out.u / g_val;
  out.s = out.alpha - out.beta;
  out.V = 0.5 * out.s * out.s;
  return out;
}

inline ControlOutput classical_smc_control(double x, double v,
                                           const ClassicalParams& p) {
  detail::require_finite_inputs(x, v, "classical_smc_control");
  const double s = v + p.lam_s * x;
  return detail::surface_only(s, -p.k * sign(s));
}

/// Emits the control, then advances the integral state by one Euler step.
inline ControlOutput super_twisting_control(double x, double v, double dt,
                                            SuperTwistingParams& p) {
  detail::require_finite_inputs(x, v, "super_twisting_control");
  detail::require_positive_dt(dt, "super_twisting_control");
  const double s = v + p.lam_s * x;
  const double sg = sign(s);
  const double u = -p.k1st * std::sqrt(std::abs(s)) * sg + p.v;
  p.v -= p.k2st * sg * dt;
  return detail::surface_only(s, u);
}

/// Emits the control, then grows the gain by gamma |s| dt up to kmax.
inline ControlOutput adaptive_smc_control(double x, double v, double dt,
                                          AdaptiveParams& p) {
  detail::require_finite_inputs(x, v, "adaptive_smc_control");
  detail::require_positive_dt(dt, "adaptive_smc_control");
  if (p.k < 0.0 || p.k > p.kmax) {
    fail(ErrorKind::InvalidInput, "adaptive_smc_control: gain outside [0, kmax]");
  }
  const double s = v + p.lam_s * x;
  const double u = -p.k * std::clamp(s / p.phi, -1.0, 1.0);
  p.k = std::min(p.kmax, p.k + p.gamma * std::abs(s) * dt);
  return detail::surface_only(s, u);
}

/// No control at all; used for open-loop probes.
struct OpenLoopParams {
  bool operator==(const OpenLoopParams&) const = default;
};

using ControllerParams =
    std::variant<ObserverFreeParams, ClassicalParams, SuperTwistingParams,
                 AdaptiveParams, OpenLoopParams>;

inline std::string_view controller_name(const ControllerParams& c) {
  switch (c.index()) {
    case 0: return "observer-free";
    case 1: return "classical";
    case 2: return "super-twisting";
    case 3: return "adaptive";
    default: return "none";
  }
}

/// One controller instance bound to a single node for a single run. Owns its
/// copy of any mutable internal state.
class Controller {
 public:
  explicit Controller(ControllerParams params) : params_(std::move(params)) {
    if (auto* of = std::get_if<ObserverFreeParams>(&params_);
        of && of->tanh_table_size > 0) {
      table_ = tanh_table(of->tanh_table_size);
    }
    if (auto* ad = std::get_if<AdaptiveParams>(&params_)) ad->k = ad->k0;
  }

  const ControllerParams& params() const { return params_; }

  ControlOutput step(double x, double v, double g_val, double dt) {
    return std::visit(
        [&](auto& p) -> ControlOutput {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, ObserverFreeParams>) {
            return observer_free_control(x, v, g_val, p, table_.get());
          } else if constexpr (std::is_same_v<P, ClassicalParams>) {
            return classical_smc_control(x, v, p);
          } else if constexpr (std::is_same_v<P, SuperTwistingParams>) {
            return super_twisting_control(x, v, dt, p);
          } else if constexpr (std::is_same_v<P, AdaptiveParams>) {
            return adaptive_smc_control(x, v, dt, p);
          } else {
            return ControlOutput{};
          }
        },
        params_);
  }

  /// Declared amplitude bound on |u|, when the law has one.
  static std::optional<double> declared_bound(const ControllerParams& c) {
    if (const auto* of = std::get_if<ObserverFreeParams>(&c)) return of->lambda;
    if (const auto* cl = std::get_if<ClassicalParams>(&c)) return cl->k;
    if (const auto* ad = std::get_if<AdaptiveParams>(&c)) return ad->kmax;
    if (std::holds_alternative<OpenLoopParams>(c)) return 0.0;
    return std::nullopt;
  }

  /// True for laws that need nothing beyond the measured (x, v).
  static bool observer_free(const ControllerParams& c) {
    return std::holds_alternative<ObserverFreeParams>(c) ||
           std::holds_alternative<ClassicalParams>(c);
  }

 private:
  ControllerParams params_;
  std::shared_ptr<const TanhTable> table_;
};

}  // namespace smclab
