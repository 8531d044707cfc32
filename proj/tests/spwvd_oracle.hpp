#pragma once

// Reference SPWVD computed straight from the defining sums, with no FFTs.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "forged/spwvd.hpp"

namespace reference {

using cd = std::complex<double>;
using forged::SpwvdConfig;
using forged::TfrMatrix;
using forged::make_window;
using std::numbers::pi;

// Analytic signal by a direct O(n^2) DFT.
inline std::vector<cd> analytic_oracle(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<cd> X(n), z(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t t = 0; t < n; ++t) X[k] += x[t] * std::polar(1.0, -2 * pi * double(k * t % n) / n);
  }
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) X[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) X[k] = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < n; ++k) z[t] += X[k] * std::polar(1.0, 2 * pi * double(k * t % n) / n);
    z[t] /= double(n);
  }
  return z;
}

// Direct double sum over lag and time-smoothing offsets, one frequency at a time.
inline TfrMatrix spwvd_oracle(const std::vector<double>& x, const SpwvdConfig& cfg, double fs) {
  const auto z = analytic_oracle(x);
  const auto g = make_window(cfg.time_window);
  const auto h = make_window(cfg.lag_window);
  const auto nt = static_cast<long>(x.size());
  const long M = long(h.size() / 2), U = long(g.size() / 2);
  const std::size_t nb = cfg.n_freq_bins;
  auto at = [&](long i) { return (i >= 0 && i < nt) ? z[i] : cd{}; };
  TfrMatrix out;
  out.n_freq = nb;
  out.n_time = x.size();
  out.values.assign(nb * x.size(), 0.0);
  for (long n = 0; n < nt; ++n) {
    std::vector<cd> K(2 * M + 1);
    for (long m = -M; m <= M; ++m) {
      cd acc{};
      for (long u = -U; u <= U; ++u) acc += g[u + U] * at(n - u + m) * std::conj(at(n - u - m));
      K[m + M] = h[m + M] * acc;
    }
    for (std::size_t k = 0; k < nb; ++k) {
      cd w{};
      for (long m = -M; m <= M; ++m) w += K[m + M] * std::polar(1.0, -2 * pi * double(k) * double(m) / double(nb));
      out(k, n) = w.real();
    }
  }
  return out;
}

}  // namespace reference
