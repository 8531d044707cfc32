#include <cmath>
#include <complex>
#include <fmt/format.h>
#include <numbers>
#include <random>

#include "forged/ingest.hpp"

namespace forged {

Recording synth_recording(const SynthSpec& spec, const std::string& subject_id, ClassLabel label) {
  if (!(spec.duration_s > 0) || !(spec.sample_rate_hz > 0) || spec.n_channels < 3) {
    throw Error(ErrorCode::BadSpec, "synthetic recording needs positive duration and rate and >= 3 channels");
  }
  for (const auto& p : spec.class_profile) {
    if (!(p.center_hz < spec.sample_rate_hz / 2) || p.center_hz < 0 || p.bandwidth_hz < 0) {
      throw Error(ErrorCode::BadSpec, fmt::format("peak at {} Hz with bandwidth {} Hz is invalid for fs = {} Hz",
                                                  p.center_hz, p.bandwidth_hz, spec.sample_rate_hz));
    }
  }
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
  if (n < 1) throw Error(ErrorCode::BadSpec, "duration shorter than one sample");

  Recording r;
  r.subject_id = subject_id;
  r.label = label;
  r.sample_rate_hz = spec.sample_rate_hz;
  r.channel_names = default_channel_names(spec.n_channels);
  r.data = SignalMatrix(spec.n_channels, n);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::vector<double> acc(n);

  for (std::size_t ch = 0; ch < spec.n_channels; ++ch) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& p : spec.class_profile) {
      const double w = 2.0 * std::numbers::pi * p.center_hz / spec.sample_rate_hz;
      const double phase = phase_dist(rng);
      if (p.bandwidth_hz == 0.0) {
        for (std::size_t t = 0; t < n; ++t) acc[t] += p.amplitude * std::cos(w * static_cast<double>(t) + phase);
        continue;
      }
      const double rho = std::exp(-std::numbers::pi * p.bandwidth_hz / spec.sample_rate_hz);
      const double innovation = std::sqrt((1.0 - rho * rho) / 2.0);
      std::complex<double> env(gauss(rng) / std::numbers::sqrt2, gauss(rng) / std::numbers::sqrt2);
      env *= std::polar(1.0, phase);
      for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) env = rho * env + innovation * std::complex<double>(gauss(rng), gauss(rng));
        acc[t] += p.amplitude * std::numbers::sqrt2 * (env * std::polar(1.0, w * static_cast<double>(t))).real();
      }
    }
    auto row = r.data.row(ch);
    for (std::size_t t = 0; t < n; ++t) {
      const double noise = spec.noise_sigma > 0 ? spec.noise_sigma * gauss(rng) : 0.0;
      row[t] = static_cast<float>(acc[t] + noise);
    }
  }
  return r;
}

SynthSpec acceptance_synth_spec(ClassLabel label, std::uint64_t seed) {
  SynthSpec s;
  s.class_profile = {SpectralPeak{label == ClassLabel::HC ? 8.0 : 20.0, 1.0, 10.0}};
  s.noise_sigma = 5.0;
  s.duration_s = 60.0;
  s.n_channels = 32;
  s.sample_rate_hz = 512.0;
  s.seed = seed;
  return s;
}

}  // namespace forged
