#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "forged/spwvd.hpp"
#include "spwvd_oracle.hpp"

using namespace forged;
using std::numbers::pi;
using reference::analytic_oracle;
using reference::spwvd_oracle;

namespace {

std::vector<double> random_signal(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

std::vector<double> tone(std::size_t n, double f, double fs, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = amp * std::cos(2 * pi * f * t / fs + 0.4);
  return x;
}

std::size_t column_argmax(const TfrMatrix& m, std::size_t t) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < m.n_freq; ++k) {
    if (m(k, t) > m(best, t)) best = k;
  }
  return best;
}

}  // namespace

TEST_CASE("windows") {
  const auto h = make_window(WindowKind::Hamming, 5);
  CHECK(h[0] == doctest::Approx(0.08));
  CHECK(h[1] == doctest::Approx(0.54));
  CHECK(h[2] == doctest::Approx(1.0));
  CHECK(h[4] == h[0]);
  const auto g = make_window(WindowKind::Gaussian, 7);
  CHECK(g[3] == 1.0);
  CHECK(g[0] == doctest::Approx(std::exp(-0.5 * 9.0 / (7.0 / 6.0 * 7.0 / 6.0))));
  CHECK(make_window(WindowKind::Rect, 3) == std::vector<double>{1, 1, 1});
  CHECK_THROWS_AS(make_window(WindowKind::Hamming, 4), Error);
  CHECK(parse_window_kind("gaussian") == WindowKind::Gaussian);
  CHECK(to_string(WindowKind::Rect) == "rect");
  CHECK_THROWS_AS(parse_window_kind("kaiser"), Error);
}

TEST_CASE("config validation") {
  SpwvdConfig c;
  CHECK_NOTHROW(c.validate());
  c.lag_window.length = 254;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.n_freq_bins = 200;  // fewer bins than lags
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("analytic signal keeps the real part and adds the Hilbert transform") {
  const auto x = random_signal(100, 3);
  const auto z = analytic_signal(x);
  const auto oracle = analytic_oracle(x);
  for (std::size_t t = 0; t < x.size(); ++t) {
    REQUIRE(z[t].real() == doctest::Approx(x[t]).epsilon(1e-12).scale(1.0));
    REQUIRE(std::abs(z[t] - oracle[t]) < 1e-10);
  }
  const auto c = tone(64, 4.0, 64.0);
  const auto zc = analytic_signal(c);
  for (std::size_t t = 0; t < 64; ++t) CHECK(zc[t].imag() == doctest::Approx(std::sin(2 * pi * 4.0 * t / 64.0 + 0.4)));
}

TEST_CASE("FFT transform equals the direct double sum") {
  for (auto [nb, lg, lh, seed] : {std::tuple{64u, 15u, 31u, 1u}, std::tuple{128u, 9u, 63u, 2u}, std::tuple{40u, 1u, 13u, 3u}}) {
    SpwvdConfig cfg;
    cfg.n_freq_bins = nb;
    cfg.time_window = {WindowKind::Hamming, lg};
    cfg.lag_window = {WindowKind::Hamming, lh};
    const auto x = random_signal(64, seed);
    const auto fast = spwvd(x, cfg, 128.0);
    const auto slow = spwvd_oracle(x, cfg, 128.0);
    REQUIRE(fast.n_freq == nb);
    REQUIRE(fast.n_time == 64);
    double worst = 0.0;
    for (std::size_t i = 0; i < fast.values.size(); ++i) worst = std::max(worst, std::abs(fast.values[i] - slow.values[i]));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("a 1024-sample epoch gives a 2048 x 1024 map with real values") {
  const auto x = random_signal(1024, 7);
  SpwvdDiagnostics diag;
  const auto m = spwvd(x, SpwvdConfig{}, 512.0, &diag);
  CHECK(m.n_freq == 2048);
  CHECK(m.n_time == 1024);
  CHECK(m.values.size() == 2048u * 1024u);
  CHECK(m.freq_axis_hz[1] == doctest::Approx(0.125));
  CHECK(m.freq_axis_hz.back() == doctest::Approx(2047 * 0.125));
  CHECK(m.time_axis_s[512] == doctest::Approx(1.0));
  CHECK(diag.max_abs_real > 0.0);
  CHECK(diag.max_abs_imag / diag.max_abs_real < 1e-9);
}

TEST_CASE("a 10 Hz tone concentrates its energy near 10 Hz") {
  const double fs = 512.0;
  const SpwvdConfig cfg;
  const auto m = spwvd(tone(1024, 10.0, fs), cfg, fs);
  // Columns closer to an edge than the lag half-extent see a truncated lag
  // window and therefore a broadened spectrum; they only count toward the
  // whole-map total.
  const std::size_t M = cfg.lag_half_extent();
  double worst = 1.0, all_total = 0, all_near = 0;
  for (std::size_t t = 0; t < m.n_time; ++t) {
    double total = 0, near = 0;
    for (std::size_t k = 0; k < m.n_freq; ++k) {
      const double e = m(k, t) * m(k, t);
      total += e;
      if (std::abs(m.freq_axis_hz[k] - 10.0) <= 2.0) near += e;
    }
    all_total += total;
    all_near += near;
    if (t >= M && t + M < m.n_time) worst = std::min(worst, near / total);
  }
  CHECK(worst >= 0.9);
  CHECK(all_near / all_total >= 0.9);
  CHECK(m.freq_axis_hz[column_argmax(m, 512)] == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("tones land at their frequency across the band") {
  const double fs = 256.0;
  SpwvdConfig cfg;
  cfg.n_freq_bins = 512;
  for (double f : {3.0, 17.5, 40.0, 90.0}) {
    const auto m = spwvd(tone(512, f, fs), cfg, fs);
    CHECK(m.freq_axis_hz[column_argmax(m, 256)] == doctest::Approx(f).epsilon(0.01));
  }
}

TEST_CASE("scaling the signal by a scales the map by a squared") {
  SpwvdConfig cfg;
  cfg.n_freq_bins = 256;
  cfg.lag_window.length = 63;
  const auto x = random_signal(300, 4);
  auto y = x;
  for (auto& v : y) v *= -3.0;
  const auto mx = spwvd(x, cfg, 100.0), my = spwvd(y, cfg, 100.0);
  for (std::size_t i = 0; i < mx.values.size(); ++i) REQUIRE(my.values[i] == doctest::Approx(9.0 * mx.values[i]).scale(1e-6));
}

TEST_CASE("shifting a burst in time shifts the map") {
  SpwvdConfig cfg;
  cfg.n_freq_bins = 128;
  cfg.time_window.length = 11;
  cfg.lag_window.length = 31;
  // Gaussian-windowed burst well inside the signal, so the edges stay silent.
  auto burst = [](std::size_t n, std::size_t center) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double d = double(t) - double(center);
      x[t] = std::exp(-d * d / 200.0) * std::cos(2 * pi * 0.2 * d);
    }
    return x;
  };
  const std::size_t shift = 37;
  const auto a = spwvd(burst(512, 200), cfg, 1.0);
  const auto b = spwvd(burst(512, 200 + shift), cfg, 1.0);
  double peak = 0;
  for (double v : a.values) peak = std::max(peak, std::abs(v));
  for (std::size_t k = 0; k < a.n_freq; ++k) {
    for (std::size_t t = 100; t < 300; ++t) REQUIRE(std::abs(b(k, t + shift) - a(k, t)) < 1e-6 * peak);
  }
}

TEST_CASE("a linear chirp has a non-decreasing ridge") {
  const double fs = 512.0;
  const std::size_t n = 1024;
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double s = t / fs;
    x[t] = std::cos(2 * pi * (5.0 * s + 0.5 * 30.0 * s * s));  // 5 Hz -> 65 Hz over 2 s
  }
  SpwvdConfig cfg;
  cfg.n_freq_bins = 1024;
  const auto m = spwvd(x, cfg, fs);
  std::size_t prev = 0;
  for (std::size_t t = 64; t < n - 64; t += 16) {
    const auto k = column_argmax(m, t);
    CHECK(k + 1 >= prev);  // one-bin jitter allowed
    CHECK(m.freq_axis_hz[k] == doctest::Approx(5.0 + 30.0 * t / fs).epsilon(0.05));
    prev = k;
  }
}

TEST_CASE("signals shorter than the lag window are rejected") {
  try {
    spwvd(random_signal(100, 1), SpwvdConfig{}, 512.0);
    FAIL("expected TooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooShort);
  }
}
