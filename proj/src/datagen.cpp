#include "kpstorm/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "kpstorm/error.hpp"
#include "kpstorm/random.hpp"

namespace kpstorm {

void SynthConfig::validate() const {
  if (n_days < 1) throw Error(ErrorKind::kInvalidArgument, "n_days must be >= 1");
  if (!(storm_rate_per_day >= 0.0))
    throw Error(ErrorKind::kInvalidArgument, "storm rate must be >= 0");
  if (!(noise_scale >= 0.0))
    throw Error(ErrorKind::kInvalidArgument, "noise scale must be >= 0");
}

namespace {

constexpr int kStepsPerHour = 12;
constexpr int kStepsPerDay = 288;
constexpr int kRampSteps = 12;
constexpr double kDecay = 0.98;
constexpr double kQuietKp = 1.0;

// Nearest multiple of 1 / per_unit, as the double closest to that decimal.
double round_to(double x, double per_unit) { return std::round(x * per_unit) / per_unit; }

struct Ramp {
  int remaining;
  double per_step;
  bool late;  // acts on kp after 6 h instead of 3 h
};

double kp_response(double drive) {
  const double sq = drive * drive;
  return 7.5 * sq / (sq + 1.0);
}

}  // namespace

SyntheticData generate(const SynthConfig& config) {
  config.validate();
  Rng storms(derive_seed(config.seed, "storms"));
  Rng noise(derive_seed(config.seed, "noise"));

  const int steps = config.n_days * kStepsPerDay;
  const double onset_p = config.storm_rate_per_day / kStepsPerDay;
  const double ns = config.noise_scale;

  // Driver components: `early` reaches kp after 3 h, `late` after 6 h.
  std::vector<double> early(static_cast<std::size_t>(steps));
  std::vector<double> late(static_cast<std::size_t>(steps));
  std::vector<double> background(static_cast<std::size_t>(steps));
  std::vector<Ramp> ramps;
  double e = 0.0, l = 0.0, bg_state = 0.0, smooth = 0.0;

  SyntheticData out;
  out.solar.reserve(static_cast<std::size_t>(steps));

  for (int i = 0; i < steps; ++i) {
    if (storms.bernoulli(onset_p)) {
      const double amplitude = 0.8 + 2.7 * storms.uniform();
      ramps.push_back({kRampSteps, amplitude / kRampSteps, storms.bernoulli(0.5)});
    }
    e *= kDecay;
    l *= kDecay;
    for (auto& r : ramps) {
      (r.late ? l : e) += r.per_step;
      --r.remaining;
    }
    std::erase_if(ramps, [](const Ramp& r) { return r.remaining == 0; });

    bg_state = 0.995 * bg_state + 0.05 * ns * noise.gaussian();
    const double bg = 0.5 * bg_state * bg_state;
    const auto idx = static_cast<std::size_t>(i);
    early[idx] = e;
    late[idx] = l;
    background[idx] = bg;
    const double d = e + l + bg;
    smooth = 0.99 * smooth + 0.01 * d;

    SolarWindRecord rec;
    rec.t = kSynthStart + 5 * static_cast<std::int64_t>(i);
    rec.fma = round_to(std::max(0.0, 5.0 + 4.0 * d + 0.6 * ns * noise.gaussian()), 100.0);
    rec.bx = round_to(0.8 * d - 0.4 * d * d / (1.0 + d) + 2.0 * ns * noise.gaussian(), 100.0);
    rec.by = round_to(-1.2 * d + 1.5 * ns * noise.gaussian(), 100.0);
    rec.bz = round_to(-5.0 * d / (1.0 + 0.4 * d) + 1.5 * ns * noise.gaussian(), 100.0);
    rec.speed = round_to(std::max(0.0, 380.0 + 180.0 * d + 25.0 * ns * noise.gaussian()), 10.0);
    rec.density = round_to(
        std::max(0.0, 4.0 + 10.0 * d * d / (1.0 + d * d) + 1.0 * ns * noise.gaussian()), 100.0);
    rec.temperature = round_to(
        std::max(0.0, 7.0e4 + 1.2e5 * d + 1.5e4 * ns * noise.gaussian()), 1.0);
    out.solar.push_back(rec);

    if (i % kStepsPerHour == 0) {
      out.dst.push_back({rec.t, round_to(-8.0 - 45.0 * smooth + 3.0 * ns * noise.gaussian(), 1.0)});
    }
  }

  // Kp at 3-hour boundaries responds to the delayed driver.
  constexpr int k3h = 3 * kStepsPerHour;
  for (int i = 0; i < steps; i += k3h) {
    double drive = 0.0;
    if (i >= k3h) {
      const auto j = static_cast<std::size_t>(i - k3h);
      drive += early[j] + background[j];
    }
    if (i >= 2 * k3h) drive += late[static_cast<std::size_t>(i - 2 * k3h)];
    const double kp = kQuietKp + kp_response(drive) + 0.5 * ns * noise.gaussian();
    out.kp.push_back({kSynthStart + 5 * static_cast<std::int64_t>(i),
                      std::round(std::clamp(kp, 0.0, 9.0) * 3.0) / 3.0});
  }
  return out;
}

}  // namespace kpstorm
