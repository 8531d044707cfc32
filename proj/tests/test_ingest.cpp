#include <doctest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "forged/ingest.hpp"
#include "test_util.hpp"

using namespace forged;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

// Minimal BDF writer kept separate from the library so the reader is checked
// against an independent byte layout.
struct OracleChannel {
  std::string label;
  double pmin, pmax;
  std::int32_t dmin, dmax;
  int spr;
  std::vector<std::int32_t> digital;  // n_records * spr values
};

std::string field(const std::string& s, std::size_t width) {
  std::string out = s.substr(0, width);
  out.resize(width, ' ');
  return out;
}

void write_oracle_bdf(const fs::path& path, const std::vector<OracleChannel>& chans, int n_records,
                      double duration) {
  std::ofstream f(path, std::ios::binary);
  const auto ns = chans.size();
  f << '\xFF' << field("BIOSEMI", 7) << field("subj", 80) << field("rec", 80) << field("01.01.24", 8)
    << field("00.00.00", 8) << field(std::to_string(256 * (ns + 1)), 8) << field("24BIT", 44)
    << field(std::to_string(n_records), 8) << field(fmt::format("{}", duration), 8) << field(std::to_string(ns), 4);
  for (auto& c : chans) f << field(c.label, 16);
  for (std::size_t i = 0; i < ns; ++i) f << field("", 80);
  for (std::size_t i = 0; i < ns; ++i) f << field("uV", 8);
  for (auto& c : chans) f << field(fmt::format("{}", c.pmin), 8);
  for (auto& c : chans) f << field(fmt::format("{}", c.pmax), 8);
  for (auto& c : chans) f << field(std::to_string(c.dmin), 8);
  for (auto& c : chans) f << field(std::to_string(c.dmax), 8);
  for (std::size_t i = 0; i < ns; ++i) f << field("", 80);
  for (auto& c : chans) f << field(std::to_string(c.spr), 8);
  for (std::size_t i = 0; i < ns; ++i) f << field("", 32);
  for (int r = 0; r < n_records; ++r) {
    for (auto& c : chans) {
      for (int s = 0; s < c.spr; ++s) {
        const auto v = static_cast<std::uint32_t>(c.digital[r * c.spr + s]);
        f.put(static_cast<char>(v & 0xFF)).put(static_cast<char>((v >> 8) & 0xFF)).put(static_cast<char>((v >> 16) & 0xFF));
      }
    }
  }
}

}  // namespace

TEST_CASE("raw tensor round trip is bit exact") {
  testutil::TempDir dir("raw");
  auto r = testutil::random_recording(5, 777, 512.0, 9);
  r.data(0, 0) = -0.0f;
  r.data(1, 1) = std::numeric_limits<float>::denorm_min();
  write_raw(r, dir / "a.frt");
  CHECK(fs::file_size(dir / "a.frt") == kRawHeaderBytes + 4 * 5 * 777);
  const auto back = read_raw(dir / "a.frt");
  CHECK(back.sample_rate_hz == 512.0);
  CHECK(back.data == r.data);
  CHECK(std::signbit(back.data(0, 0)));
  CHECK(back.subject_id == "a");
}

TEST_CASE("raw tensor reader detects corruption") {
  testutil::TempDir dir("rawbad");
  write_raw(testutil::random_recording(3, 10, 100.0, 1), dir / "a.frt");
  fs::resize_file(dir / "a.frt", fs::file_size(dir / "a.frt") - 1);
  CHECK(code_of([&] { read_raw_tensor(dir / "a.frt"); }) == ErrorCode::TruncatedFile);

  std::ofstream(dir / "b.frt", std::ios::binary) << "NOTMAGIC plus some bytes to exceed header";
  CHECK(code_of([&] { read_raw_tensor(dir / "b.frt"); }) == ErrorCode::BadMagic);
}

TEST_CASE("BDF reader decodes an independently written file") {
  testutil::TempDir dir("bdf");
  const int spr = 4, records = 3;
  std::vector<OracleChannel> chans;
  for (int c = 0; c < 3; ++c) {
    OracleChannel ch{fmt::format("C{}", c), -100.0 * (c + 1), 100.0 * (c + 1), -1000, 999, spr, {}};
    for (int i = 0; i < spr * records; ++i) ch.digital.push_back((i * 97 + c * 31) % 2000 - 1000);
    chans.push_back(ch);
  }
  OracleChannel status{"Status", -8388608, 8388607, kBdfDigitalMin, kBdfDigitalMax, spr, {}};
  status.digital.assign(spr * records, 0);
  chans.push_back(status);
  chans[0].digital[0] = -1000;
  chans[0].digital[1] = 999;
  chans[1].digital[2] = -1;  // sign extension of 0xFFFFFF
  write_oracle_bdf(dir / "x.bdf", chans, records, 0.5);

  const auto h = read_bdf_header(dir / "x.bdf");
  CHECK(h.n_records == records);
  CHECK(h.record_duration_s == 0.5);
  REQUIRE(h.channels.size() == 4);

  const auto r = read_bdf(dir / "x.bdf");
  CHECK(r.sample_rate_hz == doctest::Approx(spr / 0.5));
  REQUIRE(r.n_channels() == 3);  // Status dropped
  REQUIRE(r.n_samples() == spr * records);
  CHECK(r.channel_names[1] == "C1");
  for (int c = 0; c < 3; ++c) {
    const auto& ch = chans[c];
    const double gain = (ch.pmax - ch.pmin) / (ch.dmax - ch.dmin);
    for (int i = 0; i < spr * records; ++i) {
      const double expect = ch.pmin + (ch.digital[i] - ch.dmin) * gain;
      REQUIRE(r.data(c, i) == doctest::Approx(expect).epsilon(1e-6));
    }
  }
  CHECK(r.data(0, 0) == doctest::Approx(-100.0));
  CHECK(r.data(0, 1) == doctest::Approx(100.0));
}

TEST_CASE("BDF reader rejects mixed rates and truncation") {
  testutil::TempDir dir("bdfbad");
  std::vector<OracleChannel> chans{{"A", -1, 1, -10, 10, 4, std::vector<std::int32_t>(8, 0)},
                                   {"B", -1, 1, -10, 10, 2, std::vector<std::int32_t>(4, 0)}};
  write_oracle_bdf(dir / "m.bdf", chans, 2, 1.0);
  CHECK(code_of([&] { read_bdf(dir / "m.bdf"); }) == ErrorCode::MixedRates);

  chans[1] = {"B", -1, 1, -10, 10, 4, std::vector<std::int32_t>(8, 0)};
  write_oracle_bdf(dir / "t.bdf", chans, 2, 1.0);
  CHECK_NOTHROW(read_bdf(dir / "t.bdf"));
  fs::resize_file(dir / "t.bdf", fs::file_size(dir / "t.bdf") - 5);
  CHECK(code_of([&] { read_bdf(dir / "t.bdf"); }) == ErrorCode::TruncatedFile);

  std::ofstream(dir / "z.bdf", std::ios::binary) << std::string(300, 'x');
  CHECK(code_of([&] { read_bdf(dir / "z.bdf"); }) == ErrorCode::BadMagic);
}

TEST_CASE("BDF write then read stays within 24-bit quantization") {
  testutil::TempDir dir("bdfrt");
  auto r = testutil::random_recording(4, 512 * 3, 512.0, 5, 80.0);
  SUBCASE("fixed range") {
    const PhysicalRange range{-1000.0, 1000.0};
    write_bdf(r, dir / "a.bdf", {range, 1.0});
    const auto back = read_bdf(dir / "a.bdf");
    REQUIRE(back.data.rows() == 4);
    REQUIRE(back.data.cols() == r.data.cols());
    const double step = (range.max - range.min) / (double(kBdfDigitalMax) - kBdfDigitalMin);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.data.values().size(); ++i) {
      worst = std::max(worst, std::abs(double(back.data.values()[i]) - r.data.values()[i]));
    }
    // Half a quantization step plus float32 storage of the decoded value.
    CHECK(worst <= 0.5 * step + 1e-4);
  }
  SUBCASE("auto range per channel") {
    write_bdf(r, dir / "b.bdf");
    const auto back = read_bdf(dir / "b.bdf");
    const auto h = read_bdf_header(dir / "b.bdf");
    for (std::size_t c = 0; c < 4; ++c) {
      const auto& ch = h.channels[c];
      const double step = (ch.physical_max - ch.physical_min) / (double(ch.digital_max) - ch.digital_min);
      for (std::size_t t = 0; t < r.n_samples(); ++t) {
        REQUIRE(std::abs(double(back.data(c, t)) - r.data(c, t)) <= 0.5 * step + 1e-4);
      }
    }
  }
  SUBCASE("partial final record is padded with the last sample") {
    auto shortr = testutil::random_recording(3, 512 + 100, 512.0, 6);
    write_bdf(shortr, dir / "c.bdf", {PhysicalRange{}, 1.0});
    const auto back = read_bdf(dir / "c.bdf");
    REQUIRE(back.n_samples() == 1024);
    CHECK(back.data(1, 1023) == doctest::Approx(back.data(1, 611)));
  }
  SUBCASE("out-of-range sample") {
    r.data(0, 3) = 5000.0f;
    CHECK(code_of([&] { write_bdf(r, dir / "d.bdf", {PhysicalRange{-100, 100}, 1.0}); }) == ErrorCode::RangeOverflow);
  }
}

TEST_CASE("load_recording dispatches on extension and applies manifest identity") {
  testutil::TempDir dir("load");
  auto r = testutil::random_recording(3, 600, 300.0, 8);
  write_raw(r, dir / "s.frt");
  write_bdf(r, dir / "s.bdf", {PhysicalRange{-500, 500}, 1.0});
  const auto a = load_recording(ManifestEntry{"X9", ClassLabel::PD, dir / "s.frt"});
  CHECK(a.subject_id == "X9");
  CHECK(a.label == ClassLabel::PD);
  CHECK(a.data == r.data);
  const auto b = load_recording(dir / "s.bdf");
  CHECK(b.n_channels() == 3);
  CHECK(b.sample_rate_hz == 300.0);
  CHECK_THROWS_AS(load_recording(dir / "missing.frt"), Error);
}

namespace {

// Averaged periodogram of one channel via a direct DFT on a coarse grid.
double band_power(std::span<const float> x, double fs, double f) {
  std::complex<double> acc{};
  for (std::size_t t = 0; t < x.size(); ++t) acc += double(x[t]) * std::polar(1.0, -2 * std::numbers::pi * f * t / fs);
  return std::norm(acc) / x.size();
}

}  // namespace

TEST_CASE("synthetic recordings put their power at the class peak") {
  for (auto label : {ClassLabel::HC, ClassLabel::PD}) {
    auto spec = acceptance_synth_spec(label, 11);
    spec.duration_s = 8.0;
    spec.n_channels = 4;
    const auto r = synth_recording(spec, "S", label);
    CHECK(r.n_samples() == 8 * 512);
    CHECK(r.n_channels() == 4);
    const double peak = spec.class_profile.front().center_hz;
    const double off = label == ClassLabel::HC ? 20.0 : 8.0;
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(band_power(r.data.row(c), 512.0, peak) > 20.0 * band_power(r.data.row(c), 512.0, off));
    }
  }
}

TEST_CASE("synthetic sinusoid has the stated amplitude and seeds are reproducible") {
  SynthSpec spec;
  spec.class_profile = {{16.0, 0.0, 3.0}};
  spec.noise_sigma = 0.0;
  spec.duration_s = 4.0;
  spec.n_channels = 3;
  spec.sample_rate_hz = 256.0;
  spec.seed = 5;
  const auto r = synth_recording(spec, "S", ClassLabel::HC);
  for (std::size_t c = 0; c < 3; ++c) {
    double ss = 0, peak = 0;
    for (float v : r.data.row(c)) {
      ss += double(v) * v;
      peak = std::max(peak, std::abs(double(v)));
    }
    CHECK(std::sqrt(ss / r.n_samples()) == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-4));
    CHECK(peak <= 3.0 + 1e-5);
  }
  CHECK(synth_recording(spec, "S", ClassLabel::HC).data == r.data);
  spec.seed = 6;
  CHECK_FALSE(synth_recording(spec, "S", ClassLabel::HC).data == r.data);

  spec.class_profile = {{200.0, 0.0, 1.0}};
  CHECK(code_of([&] { synth_recording(spec, "S", ClassLabel::HC); }) == ErrorCode::BadSpec);
}
