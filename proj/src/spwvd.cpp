#include "forged/spwvd.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "forged/fft.hpp"
#include "forged/parallel.hpp"

namespace forged {

std::vector<double> make_window(WindowKind kind, std::size_t length) {
  if (length == 0 || length % 2 == 0) {
    throw Error(ErrorCode::EvenLength, fmt::format("window length {} must be odd and positive", length));
  }
  std::vector<double> w(length, 1.0);
  if (length == 1) return w;
  const double c = static_cast<double>(length - 1) / 2.0;
  for (std::size_t k = 0; k < length; ++k) {
    const double x = static_cast<double>(k);
    switch (kind) {
      case WindowKind::Hamming:
        w[k] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * x / static_cast<double>(length - 1));
        break;
      case WindowKind::Gaussian: {
        const double sigma = static_cast<double>(length) / 6.0;
        w[k] = std::exp(-0.5 * (x - c) * (x - c) / (sigma * sigma));
        break;
      }
      case WindowKind::Rect:
        break;
    }
  }
  const double peak = w[length / 2];
  for (auto& v : w) v /= peak;
  // Enforce exact symmetry.
  for (std::size_t k = 0; k < length / 2; ++k) w[length - 1 - k] = w[k];
  return w;
}

WindowKind parse_window_kind(std::string_view name) {
  if (name == "hamming") return WindowKind::Hamming;
  if (name == "gaussian") return WindowKind::Gaussian;
  if (name == "rect") return WindowKind::Rect;
  throw Error(ErrorCode::BadConfig, fmt::format("unknown window '{}'", name));
}

std::string_view to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::Hamming: return "hamming";
    case WindowKind::Gaussian: return "gaussian";
    case WindowKind::Rect: return "rect";
  }
  return "?";
}

void SpwvdConfig::validate() const {
  for (const auto* w : {&time_window, &lag_window}) {
    if (w->length == 0 || w->length % 2 == 0) {
      throw Error(ErrorCode::EvenLength, fmt::format("window length {} must be odd and positive", w->length));
    }
  }
  if (n_freq_bins < 2 || n_freq_bins < 2 * lag_half_extent()) {
    throw Error(ErrorCode::BadSpec, fmt::format("{} frequency bins cannot hold lags up to +/-{}", n_freq_bins,
                                                lag_half_extent()));
  }
}

std::vector<cplx> analytic_signal(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::TooShort, fmt::format("analytic signal needs >= 2 samples, got {}", n));
  std::vector<cplx> spec(x.begin(), x.end());
  spec = fft(spec);
  // Keep DC (and Nyquist for even n), double positive bins, zero negative.
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    if (k < (n + 1) / 2) {
      spec[k] *= 2.0;
    } else if (!(n % 2 == 0 && k == half)) {
      spec[k] = 0.0;
    }
  }
  return ifft(spec);
}

TfrMatrix spwvd(std::span<const double> x, const SpwvdConfig& cfg, double sample_rate_hz,
                SpwvdDiagnostics* diagnostics) {
  cfg.validate();
  const std::size_t nt = x.size();
  if (nt < cfg.lag_window.length || nt < 2) {
    throw Error(ErrorCode::TooShort, fmt::format("{} samples, lag window has {}", nt, cfg.lag_window.length));
  }
  const auto z = analytic_signal(x);
  const auto g = make_window(cfg.time_window);
  const auto h = make_window(cfg.lag_window);
  const auto lag_max = static_cast<std::ptrdiff_t>(cfg.lag_half_extent());
  const auto time_half = static_cast<std::ptrdiff_t>(cfg.time_window.length / 2);
  const auto snt = static_cast<std::ptrdiff_t>(nt);
  const std::size_t nb = cfg.n_freq_bins;

  // Instantaneous autocorrelation R_m(t) = z[t + m] conj(z[t - m]) for m >= 0.
  std::vector<cplx> acf(static_cast<std::size_t>(lag_max + 1) * nt, cplx{});
  for (std::ptrdiff_t m = 0; m <= lag_max; ++m) {
    cplx* row = acf.data() + m * snt;
    for (std::ptrdiff_t t = m; t + m < snt; ++t) row[t] = z[t + m] * std::conj(z[t - m]);
  }

  TfrMatrix out;
  out.n_freq = nb;
  out.n_time = nt;
  out.values.assign(nb * nt, 0.0);
  out.freq_axis_hz.resize(nb);
  out.time_axis_s.resize(nt);
  for (std::size_t k = 0; k < nb; ++k) out.freq_axis_hz[k] = static_cast<double>(k) * sample_rate_hz / (2.0 * nb);
  for (std::size_t t = 0; t < nt; ++t) out.time_axis_s[t] = static_cast<double>(t) / sample_rate_hz;

  constexpr std::size_t kColumnsPerTask = 32;
  const std::size_t n_tasks = (nt + kColumnsPerTask - 1) / kColumnsPerTask;
  std::vector<SpwvdDiagnostics> task_diag(n_tasks);

  parallel_for(n_tasks, [&](std::size_t task) {
    ComplexFft f(nb, ComplexFft::Direction::Forward);
    auto buf = f.buffer();
    auto& diag = task_diag[task];
    const std::size_t end = std::min(nt, (task + 1) * kColumnsPerTask);
    for (std::size_t col = task * kColumnsPerTask; col < end; ++col) {
      const auto n = static_cast<std::ptrdiff_t>(col);
      std::fill(buf.begin(), buf.end(), cplx{});
      const std::ptrdiff_t u_lo = std::max(-time_half, n - snt + 1);
      const std::ptrdiff_t u_hi = std::min(time_half, n);
      for (std::ptrdiff_t m = 0; m <= lag_max; ++m) {
        const cplx* row = acf.data() + m * snt;
        cplx sum{};
        for (std::ptrdiff_t u = u_lo; u <= u_hi; ++u) sum += g[static_cast<std::size_t>(u + time_half)] * row[n - u];
        const cplx k = h[static_cast<std::size_t>(m + lag_max)] * sum;
        if (m == 0) {
          buf[0] += k;
        } else {
          buf[static_cast<std::size_t>(m) % nb] += k;
          buf[(nb - static_cast<std::size_t>(m) % nb) % nb] += std::conj(k);
        }
      }
      f.execute();
      for (std::size_t k = 0; k < nb; ++k) {
        out.values[k * nt + col] = buf[k].real();
        diag.max_abs_real = std::max(diag.max_abs_real, std::abs(buf[k].real()));
        diag.max_abs_imag = std::max(diag.max_abs_imag, std::abs(buf[k].imag()));
      }
    }
  });

  if (diagnostics) {
    *diagnostics = {};
    for (const auto& d : task_diag) {
      diagnostics->max_abs_real = std::max(diagnostics->max_abs_real, d.max_abs_real);
      diagnostics->max_abs_imag = std::max(diagnostics->max_abs_imag, d.max_abs_imag);
    }
  }
  return out;
}

}  // namespace forged
