#include "forged/preprocess.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "forged/fft.hpp"
#include "forged/parallel.hpp"

namespace forged {

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

std::vector<double> windowed_lowpass(std::size_t n_taps, double cutoff_hz, double fs) {
  const double c = static_cast<double>(n_taps - 1) / 2.0;
  const double fc = cutoff_hz / fs;
  std::vector<double> h(n_taps);
  double sum = 0.0;
  for (std::size_t k = 0; k < n_taps; ++k) {
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / (2.0 * c));
    h[k] = 2.0 * fc * sinc(2.0 * fc * (static_cast<double>(k) - c)) * w;
    sum += h[k];
  }
  for (auto& v : h) v /= sum;
  return h;
}

}  // namespace

FirKernel design_bandpass(double sample_rate_hz, double low_hz, double high_hz) {
  if (!(sample_rate_hz > 0) || !(low_hz > 0) || !(low_hz < high_hz) || !(high_hz < sample_rate_hz / 2)) {
    throw Error(ErrorCode::BadBand,
                fmt::format("need 0 < low < high < fs/2, got {} Hz, {} Hz at fs = {} Hz", low_hz, high_hz,
                            sample_rate_hz));
  }
  const double transition = std::min(low_hz, 0.25 * (sample_rate_hz / 2 - high_hz));
  auto n = static_cast<std::size_t>(std::ceil(3.3 * sample_rate_hz / transition));
  if (n % 2 == 0) ++n;
  if (n < 3) n = 3;

  const auto hi = windowed_lowpass(n, high_hz, sample_rate_hz);
  const auto lo = windowed_lowpass(n, low_hz, sample_rate_hz);
  FirKernel k;
  k.low_hz = low_hz;
  k.high_hz = high_hz;
  k.sample_rate_hz = sample_rate_hz;
  k.taps.resize(n);
  for (std::size_t i = 0; i < n; ++i) k.taps[i] = hi[i] - lo[i];
  // Exact symmetry, independent of rounding in the two halves.
  for (std::size_t i = 0; i < n / 2; ++i) k.taps[n - 1 - i] = k.taps[i];
  return k;
}

Recording apply_zero_phase(const Recording& r, const FirKernel& k) {
  const std::size_t n = r.n_samples();
  const std::size_t taps = k.n_taps();
  if (taps % 2 == 0) throw Error(ErrorCode::EvenLength, fmt::format("kernel has {} taps", taps));
  if (n <= taps) {
    throw Error(ErrorCode::TooShort, fmt::format("subject '{}': {} samples, kernel has {} taps", r.subject_id, n, taps));
  }
  const std::size_t pad = k.group_delay();
  const std::size_t padded = n + 2 * pad;
  const std::size_t nfft = next_pow2(padded + taps - 1);

  std::vector<cplx> kernel_spec(nfft, cplx{});
  for (std::size_t i = 0; i < taps; ++i) kernel_spec[i] = k.taps[i];
  kernel_spec = fft(kernel_spec);

  Recording out = r;
  parallel_for(r.n_channels(), [&](std::size_t ch) {
    auto src = r.data.row(ch);
    ComplexFft fwd(nfft, ComplexFft::Direction::Forward);
    ComplexFft inv(nfft, ComplexFft::Direction::Inverse);
    auto buf = fwd.buffer();
    std::fill(buf.begin(), buf.end(), cplx{});
    for (std::size_t i = 0; i < padded; ++i) {
      // Reflect about the first and last samples without repeating them.
      std::ptrdiff_t t = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad);
      if (t < 0) t = -t;
      if (t >= static_cast<std::ptrdiff_t>(n)) t = 2 * static_cast<std::ptrdiff_t>(n) - 2 - t;
      buf[i] = src[static_cast<std::size_t>(t)];
    }
    fwd.execute();
    auto spec = inv.buffer();
    for (std::size_t i = 0; i < nfft; ++i) spec[i] = buf[i] * kernel_spec[i];
    inv.execute();
    auto dst = out.data.row(ch);
    const double scale = 1.0 / static_cast<double>(nfft);
    for (std::size_t t = 0; t < n; ++t) dst[t] = static_cast<float>(spec[t + 2 * pad].real() * scale);
  });
  return out;
}

}  // namespace forged
