#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "forged/core.hpp"

namespace forged {

enum class WindowKind { Hamming, Gaussian, Rect };

struct WindowSpec {
  WindowKind kind = WindowKind::Hamming;
  std::size_t length = 31;
};

// Symmetric, peak-normalized (center = 1). Hamming uses
// 0.54 - 0.46 cos(2 pi k / (L - 1)); Gaussian uses sigma = L / 6.
std::vector<double> make_window(WindowKind kind, std::size_t length);
inline std::vector<double> make_window(const WindowSpec& w) { return make_window(w.kind, w.length); }

WindowKind parse_window_kind(std::string_view name);
std::string_view to_string(WindowKind kind);

struct SpwvdConfig {
  std::size_t n_freq_bins = 2048;
  WindowSpec time_window{WindowKind::Hamming, 31};  // g: smoothing along time
  WindowSpec lag_window{WindowKind::Hamming, 255};  // h: smoothing along frequency

  std::size_t lag_half_extent() const { return lag_window.length / 2; }
  // Throws EvenLength or BadSpec.
  void validate() const;
};

// Frequency rows by time columns, row-major. Row k is k * fs / (2 n_freq_bins)
// Hz, so rows cover [0, fs/2).
struct TfrMatrix {
  std::size_t n_freq = 0;
  std::size_t n_time = 0;
  std::vector<double> values;
  std::vector<double> freq_axis_hz;
  std::vector<double> time_axis_s;

  double operator()(std::size_t f, std::size_t t) const { return values[f * n_time + t]; }
  double& operator()(std::size_t f, std::size_t t) { return values[f * n_time + t]; }
};

// FFT-based Hilbert construction; real part reproduces x.
std::vector<std::complex<double>> analytic_signal(std::span<const double> x);

struct SpwvdDiagnostics {
  double max_abs_real = 0.0;
  double max_abs_imag = 0.0;  // residual imaginary part discarded by the transform
};

// Smoothed pseudo Wigner-Ville distribution of the analytic signal of x:
//
//   K(n, m) = h[m] sum_u g[u] z[n - u + m] conj(z[n - u - m]),  |m| <= M
//   W(k, n) = Re sum_m K(n, m) exp(-2 pi i k m / n_freq_bins)
//
// Samples outside [0, Nt) contribute zero. Throws TooShort when Nt is below
// the lag window length.
TfrMatrix spwvd(std::span<const double> x, const SpwvdConfig& cfg, double sample_rate_hz,
                SpwvdDiagnostics* diagnostics = nullptr);

}  // namespace forged
