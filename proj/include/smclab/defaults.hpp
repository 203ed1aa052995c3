#pragma once

// Frozen defaults for the built-in benchmark suite and comparison thresholds.
// Bump kVersion whenever a value changes; regression fixtures depend on them.

#include <cstdint>

namespace smclab::defaults {

inline constexpr int kVersion = 1;

// Integration.
inline constexpr double kDt = 1e-3;
inline constexpr double kTFinal = 10.0;
inline constexpr std::uint64_t kSeed = 42;

// Controllers.
inline constexpr double kK1 = 1.0;
inline constexpr double kLambdaPendulum = 5.0;
inline constexpr double kLambdaOscillator = 3.0;
inline constexpr double kSurfaceSlope = 1.0;
/// Presumed disturbance bound L: k1st = 1.5 sqrt(L), k2st = 1.1 L.
inline constexpr double kSuperTwistingBound = 5.0;
inline constexpr double kAdaptiveGamma = 5.0;
inline constexpr double kAdaptivePhi = 0.05;
inline constexpr double kAdaptiveK0 = 1.0;
inline constexpr double kAdaptiveKmax = 50.0;

// Robustness cases.
inline constexpr double kNoiseStd = 0.01;
inline constexpr double kDisturbanceAmplitude = 0.2;
inline constexpr double kDisturbanceOmega = 5.0;
inline constexpr double kDelayProbeTau = 0.01;

// Network initial angles: uniform in [-spread, spread].
inline constexpr std::uint64_t kNetworkSeed = 42;
inline constexpr double kNetworkSpread = 0.3;

// Metrics and comparison thresholds.
inline constexpr double kSettlingBand = 0.02;
inline constexpr double kChatteringLimit = 10.0;
inline constexpr double kSlewLimit = 1e3;

}  // namespace smclab::defaults
