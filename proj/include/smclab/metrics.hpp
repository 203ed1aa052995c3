#pragma once

// Scalar performance metrics over recorded runs, Lyapunov diagnostics, and
// the controller comparison matrix.
//
//   settling_time      min t* with |y(t)| <= band for all t >= t*
//   overshoot          max(0, max_t sgn(y0 - r) (r - y(t))) / |y0 - r|
//   chattering_index   sum_k |u_{k+1} - u_k|                (total variation)
//   control_effort     sum_k u_k^2 h                        (ZOH integral)
//   max_slew           max_k |u_{k+1} - u_k| / h
//   lyap violations    #{k : V_{k+1} - V_k > 1e-9}
//   epsilon_hat        min_{k : s_k^2 > 1e-6} (V_k - V_{k+1}) / (s_k^2 h)
//   sync_error         per-sample std across node positions (population)
//   steady_state_error mean |y| over the final 10% of samples
//
// y is the position for single-node plants and the mean node angle for
// networks; u-based metrics sum (or take the max) over nodes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "smclab/defaults.hpp"
#include "smclab/errors.hpp"
#include "smclab/sim.hpp"

namespace smclab {

inline constexpr double kLyapunovTolerance = 1e-9;
inline constexpr double kEpsilonSurfaceFloor = 1e-6;

inline std::optional<double> settling_time(std::span<const double> x,
                                           double sample_dt, double band) {
  if (x.empty()) fail(ErrorKind::InvalidInput, "settling_time: empty series");
  if (!(band > 0.0)) fail(ErrorKind::InvalidInput, "settling_time: band <= 0");
  std::size_t i = x.size();
  while (i > 0 && std::abs(x[i - 1]) <= band) --i;
  if (i == x.size()) return std::nullopt;
  return static_cast<double>(i) * sample_dt;
}

inline double chattering_index(std::span<const double> u) {
  if (u.size() < 2) {
    fail(ErrorKind::InvalidInput, "chattering_index: need at least 2 samples");
  }
  double tv = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) tv += std::abs(u[k] - u[k - 1]);
  return tv;
}

inline double overshoot(std::span<const double> x, double target, double x0) {
  if (x0 == target) {
    fail(ErrorKind::InvalidInput,
         "overshoot: x0 equals target, normalization undefined");
  }
  const double dir = x0 > target ? 1.0 : -1.0;
  double worst = 0.0;
  for (double xi : x) worst = std::max(worst, dir * (target - xi));
  return worst / std::abs(x0 - target);
}

struct LyapunovStats {
  std::size_t violation_count = 0;
  std::size_t transitions = 0;
  std::optional<double> epsilon_hat;

  double violation_fraction() const {
    return transitions == 0 ? 0.0
                            : static_cast<double>(violation_count) /
                                  static_cast<double>(transitions);
  }
};

inline LyapunovStats lyapunov_stats(std::span<const double> V,
                                    std::span<const double> s, double dt) {
  if (V.size() != s.size()) {
    fail(ErrorKind::InvalidInput, "lyapunov_stats: misaligned series");
  }
  if (!(dt > 0.0)) fail(ErrorKind::InvalidInput, "lyapunov_stats: dt <= 0");
  LyapunovStats out;
  if (V.size() < 2) return out;
  out.transitions = V.size() - 1;
  for (std::size_t k = 0; k + 1 < V.size(); ++k) {
    const double dV = V[k + 1] - V[k];
    if (dV > kLyapunovTolerance) ++out.violation_count;
    const double s2 = s[k] * s[k];
    if (s2 > kEpsilonSurfaceFloor) {
      const double e = -dV / (s2 * dt);
      if (!out.epsilon_hat || e < *out.epsilon_hat) out.epsilon_hat = e;
    }
  }
  return out;
}

struct SyncError {
  std::vector<double> series;
  double final_value = 0.0;
};

inline SyncError sync_error(const TimeSeries& ts) {
  const std::size_t n = ts.nodes.size();
  if (n < 2) fail(ErrorKind::InvalidInput, "sync_error: need at least 2 nodes");
  SyncError out;
  out.series.resize(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    // Shifted by node 0 so identical positions give exactly zero.
    const double ref = ts.nodes.front().x[k];
    double mean = 0.0;
    for (const auto& nt : ts.nodes) mean += nt.x[k] - ref;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& nt : ts.nodes) {
      const double e = (nt.x[k] - ref) - mean;
      var += e * e;
    }
    out.series[k] = std::sqrt(var / static_cast<double>(n));
  }
  if (!out.series.empty()) out.final_value = out.series.back();
  return out;
}

/// Position for one node, mean node angle for networks.
inline std::vector<double> primary_signal(const TimeSeries& ts) {
  if (ts.nodes.size() == 1) return ts.nodes.front().x;
  std::vector<double> mean(ts.size(), 0.0);
  for (const auto& nt : ts.nodes) {
    for (std::size_t k = 0; k < ts.size(); ++k) mean[k] += nt.x[k];
  }
  for (double& m : mean) m /= static_cast<double>(ts.nodes.size());
  return mean;
}

struct MetricsReport {
  std::optional<double> settling_time;
  double overshoot = 0.0;
  double chattering_index = 0.0;
  double control_effort = 0.0;
  double max_abs_u = 0.0;
  double max_slew = 0.0;
  std::size_t lyap_violation_count = 0;
  double lyap_violation_fraction = 0.0;
  std::optional<double> lyap_epsilon_hat;
  std::optional<double> sync_error_final;
  double steady_state_error = 0.0;
  double final_V = 0.0;
  bool diverged = false;
};

struct MetricsConfig {
  double settling_band = defaults::kSettlingBand;
  double target = 0.0;
};

inline MetricsReport compute_metrics(const TimeSeries& ts, double sample_dt,
                                     const MetricsConfig& cfg = {},
                                     bool diverged = false) {
  if (ts.size() == 0) fail(ErrorKind::InvalidInput, "compute_metrics: empty run");
  MetricsReport r;
  r.diverged = diverged;
  const std::vector<double> y = primary_signal(ts);

  // A diverged run never settles, whatever its last recorded sample says.
  if (!diverged) {
    std::vector<double> err(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) err[k] = y[k] - cfg.target;
    r.settling_time = settling_time(err, sample_dt, cfg.settling_band);
  }
  if (y.front() != cfg.target) r.overshoot = overshoot(y, cfg.target, y.front());

  const std::size_t tail = std::max<std::size_t>(1, y.size() / 10);
  double acc = 0.0;
  for (std::size_t k = y.size() - tail; k < y.size(); ++k) {
    acc += std::abs(y[k] - cfg.target);
  }
  r.steady_state_error = acc / static_cast<double>(tail);

  std::vector<double> V_total(ts.size(), 0.0);
  for (const auto& nt : ts.nodes) {
    if (ts.size() >= 2) r.chattering_index += chattering_index(nt.u);
    for (std::size_t k = 0; k < nt.u.size(); ++k) {
      r.max_abs_u = std::max(r.max_abs_u, std::abs(nt.u[k]));
      if (k + 1 < nt.u.size()) {
        r.control_effort += nt.u[k] * nt.u[k] * sample_dt;
        r.max_slew = std::max(r.max_slew,
                              std::abs(nt.u[k + 1] - nt.u[k]) / sample_dt);
      }
      V_total[k] += nt.V[k];
    }
  }

  std::vector<double> s_eff(ts.size());
  if (ts.nodes.size() == 1) {
    s_eff = ts.nodes.front().s;
  } else {
    for (std::size_t k = 0; k < ts.size(); ++k) {
      s_eff[k] = std::sqrt(2.0 * V_total[k]);
    }
  }
  const LyapunovStats ly = lyapunov_stats(V_total, s_eff, sample_dt);
  r.lyap_violation_count = ly.violation_count;
  r.lyap_violation_fraction = ly.violation_fraction();
  r.lyap_epsilon_hat = ly.epsilon_hat;
  r.final_V = V_total.back();

  if (ts.nodes.size() >= 2) r.sync_error_final = sync_error(ts).final_value;
  return r;
}

namespace detail {

inline std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string("none");
}

}  // namespace detail

inline constexpr const char* kMetricsCsvHeader =
    "name,settling_time,overshoot,chattering_index,control_effort,max_abs_u,"
    "max_slew,lyap_violation_count,lyap_violation_fraction,lyap_epsilon_hat,"
    "sync_error_final,steady_state_error,final_V,diverged";

inline std::string metrics_csv_row(const std::string& name,
                                   const MetricsReport& r) {
  using detail::format_number;
  using detail::format_optional;
  std::string row = name;
  for (const std::string& cell :
       {format_optional(r.settling_time), format_number(r.overshoot),
        format_number(r.chattering_index), format_number(r.control_effort),
        format_number(r.max_abs_u), format_number(r.max_slew),
        std::to_string(r.lyap_violation_count),
        format_number(r.lyap_violation_fraction),
        format_optional(r.lyap_epsilon_hat), format_optional(r.sync_error_final),
        format_number(r.steady_state_error), format_number(r.final_V),
        std::string(r.diverged ? "1" : "0")}) {
    row += ',';
    row += cell;
  }
  return row;
}

/// Flat `key=value` record, one per line, preceded by the metric formulas.
inline void write_metrics_text(std::ostream& os, const std::string& name,
                               const MetricsReport& r,
                               const MetricsConfig& cfg = {}) {
  using detail::format_number;
  using detail::format_optional;
  os << "# settling_time: min t* with |y - target| <= band for all t >= t*\n"
     << "# overshoot: max far-side excursion past target / |y0 - target|\n"
     << "# chattering_index: sum |u[k+1] - u[k]| (summed over nodes)\n"
     << "# control_effort: sum u[k]^2 h\n"
     << "# max_slew: max |u[k+1] - u[k]| / h\n"
     << "# lyap_violation_count: #{k : V[k+1] - V[k] > 1e-9}\n"
     << "# lyap_epsilon_hat: min over s^2 > 1e-6 of (V[k] - V[k+1]) / (s^2 h)\n"
     << "# sync_error_final: std of node positions at the last sample\n"
     << "# steady_state_error: mean |y - target| over the last 10% of samples\n";
  os << "name=" << name << '\n'
     << "settling_band=" << format_number(cfg.settling_band) << '\n'
     << "settling_time=" << format_optional(r.settling_time) << '\n'
     << "overshoot=" << format_number(r.overshoot) << '\n'
     << "chattering_index=" << format_number(r.chattering_index) << '\n'
     << "control_effort=" << format_number(r.control_effort) << '\n'
     << "max_abs_u=" << format_number(r.max_abs_u) << '\n'
     << "max_slew=" << format_number(r.max_slew) << '\n'
     << "lyap_violation_count=" << r.lyap_violation_count << '\n'
     << "lyap_violation_fraction=" << format_number(r.lyap_violation_fraction)
     << '\n'
     << "lyap_epsilon_hat=" << format_optional(r.lyap_epsilon_hat) << '\n'
     << "sync_error_final=" << format_optional(r.sync_error_final) << '\n'
     << "steady_state_error=" << format_number(r.steady_state_error) << '\n'
     << "final_V=" << format_number(r.final_V) << '\n'
     << "diverged=" << (r.diverged ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// Comparison matrix

struct ComparisonThresholds {
  /// NoChattering passes when chattering_index < chattering_limit * scale.
  double chattering_limit = defaults::kChatteringLimit;
  double scale = 1.0;
  /// Smoothness passes when max |du/dt| < slew_limit.
  double slew_limit = defaults::kSlewLimit;
  double bound_tolerance = 1e-12;
};

struct ComparisonEntry {
  std::string controller;
  /// Identifies plant, initial state, and sim settings; must match across
  /// entries.
  std::string scenario_key;
  MetricsReport nominal;
  /// Same scenario rerun with a 10 ms input delay.
  std::optional<MetricsReport> delayed;
  std::optional<double> declared_bound;
  bool observer_free = false;
};

enum class Property { NoChattering, ObserverFree, BoundedInput, DelayTolerant, Smoothness };

inline constexpr Property kProperties[] = {
    Property::NoChattering, Property::ObserverFree, Property::BoundedInput,
    Property::DelayTolerant, Property::Smoothness};

inline const char* property_name(Property p) {
  switch (p) {
    case Property::NoChattering: return "No Chattering";
    case Property::ObserverFree: return "Observer-Free";
    case Property::BoundedInput: return "Bounded Input";
    case Property::DelayTolerant: return "Delay-Tolerant";
    case Property::Smoothness: return "Smoothness";
  }
  return "?";
}

struct MatrixCell {
  bool pass = false;
  /// Measured quantity behind the verdict (NaN for static attributes).
  double measured = std::nan("");
};

struct ComparisonMatrix {
  std::vector<std::string> controllers;
  /// cells[property][controller]
  std::vector<std::vector<MatrixCell>> cells;

  const MatrixCell& at(Property p, const std::string& controller) const {
    for (std::size_t j = 0; j < controllers.size(); ++j) {
      if (controllers[j] == controller) {
        return cells[static_cast<std::size_t>(p)][j];
      }
    }
    fail(ErrorKind::InvalidInput, "no controller '" + controller + "' in matrix");
  }

  /// Bounded Input is informational: a sign law is bounded by construction.
  static bool informational(Property p) { return p == Property::BoundedInput; }
};

inline ComparisonMatrix comparison_matrix(
    const std::vector<ComparisonEntry>& entries,
    const ComparisonThresholds& th = {}) {
  if (entries.size() < 2) {
    fail(ErrorKind::InvalidComparison,
         "comparison needs at least two controllers");
  }
  for (const auto& e : entries) {
    if (e.scenario_key != entries.front().scenario_key) {
      fail(ErrorKind::InvalidComparison,
           "controllers were run on different scenarios: '" +
               entries.front().scenario_key + "' vs '" + e.scenario_key + "'");
    }
  }
  ComparisonMatrix m;
  m.cells.assign(std::size(kProperties), {});
  for (const auto& e : entries) {
    m.controllers.push_back(e.controller);
    const MetricsReport& r = e.nominal;

    MatrixCell chat{!r.diverged && r.chattering_index <
                                       th.chattering_limit * th.scale,
                    r.chattering_index};
    MatrixCell obs{e.observer_free, std::nan("")};
    MatrixCell bounded{e.declared_bound.has_value() &&
                           r.max_abs_u <= *e.declared_bound + th.bound_tolerance,
                       r.max_abs_u};
    MatrixCell delay{false, std::nan("")};
    if (e.delayed) {
      delay.pass = !e.delayed->diverged && e.delayed->settling_time.has_value();
      delay.measured = e.delayed->settling_time.value_or(std::nan(""));
    }
    MatrixCell smooth{!r.diverged && r.max_slew < th.slew_limit, r.max_slew};

    m.cells[static_cast<std::size_t>(Property::NoChattering)].push_back(chat);
    m.cells[static_cast<std::size_t>(Property::ObserverFree)].push_back(obs);
    m.cells[static_cast<std::size_t>(Property::BoundedInput)].push_back(bounded);
    m.cells[static_cast<std::size_t>(Property::DelayTolerant)].push_back(delay);
    m.cells[static_cast<std::size_t>(Property::Smoothness)].push_back(smooth);
  }
  return m;
}

/// `property,<controller>...` with +/-- cells.
inline void write_matrix_csv(std::ostream& os, const ComparisonMatrix& m) {
  os << "property";
  for (const auto& c : m.controllers) os << ',' << c;
  os << '\n';
  for (Property p : kProperties) {
    os << property_name(p);
    for (const auto& cell : m.cells[static_cast<std::size_t>(p)]) {
      os << ',' << (cell.pass ? "+" : "--");
    }
    os << '\n';
  }
}

}  // namespace smclab
