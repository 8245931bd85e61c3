#pragma once

#include <cstdint>
#include <vector>

#include "kpstorm/ingest.hpp"

namespace kpstorm {

struct SynthConfig {
  std::uint64_t seed = 7;
  int n_days = 120;
  double storm_rate_per_day = 0.12;
  double noise_scale = 1.0;

  void validate() const;
};

struct SyntheticData {
  std::vector<SolarWindRecord> solar;  // 5-minute cadence
  std::vector<DstRecord> dst;          // hourly
  std::vector<KpRecord> kp;            // 3-hourly

  SourceSeries sources() const { return make_sources(solar, dst, kp); }
};

/// First instant of every generated series.
inline const Timestamp kSynthStart = Timestamp::from_minutes(26824320);  // 2021-01-01T00:00Z

/// Seeded storm simulator.
///
/// A latent driver is the sum of storm pulses that arrive as a Bernoulli
/// process on the 5-minute grid (rate / 288 per step), ramp up over one hour
/// and decay with a ~4 h time constant, plus a slowly varying quiet-time
/// background. Each storm is randomly tagged as acting on kp 3 h or 6 h
/// after it appears in the solar wind. Kp is a saturating quadratic of the
/// delayed driver plus noise, clamped to [0, 9] and rounded to thirds. The
/// seven solar channels are different linear and nonlinear transforms of the
/// undelayed driver plus independent noise; dst is a smoothed, negated copy.
///
/// The random source is xoshiro256** and the arithmetic is restricted to
/// exactly rounded operations, so output is identical across platforms.
SyntheticData generate(const SynthConfig& config);

}  // namespace kpstorm
