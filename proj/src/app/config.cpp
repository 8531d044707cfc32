#include "forged/app/config.hpp"

#include <charconv>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <fstream>
#include <sstream>

namespace forged::app {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(ErrorCode::BadConfig, fmt::format("{} = '{}': expected {}", key, value, expected));
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  bad(key, v, "a number");
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "a non-negative integer");
  return out;
}

std::size_t to_size(std::string_view key, std::string_view v) { return static_cast<std::size_t>(to_u64(key, v)); }

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, v, "true or false");
}

WindowSpec to_window(std::string_view key, std::string_view v) {
  const auto colon = v.find(':');
  if (colon == std::string_view::npos) bad(key, v, "<hamming|gaussian|rect>:<odd length>");
  WindowSpec w;
  w.kind = parse_window_kind(v.substr(0, colon));
  w.length = to_size(key, v.substr(colon + 1));
  if (w.length % 2 == 0) bad(key, v, "an odd window length");
  return w;
}

std::vector<std::string> to_list(std::string_view v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(v)};
  while (std::getline(in, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace

RejectionPolicy parse_rejection_policy(std::string_view text) {
  if (text == "keep_all") return rejection::KeepAll{};
  if (text.starts_with("kurtosis:")) {
    return rejection::KurtosisThreshold{to_double("preprocess.reject", text.substr(9))};
  }
  if (text.starts_with("list:")) {
    rejection::ExplicitList list;
    for (const auto& s : to_list(text.substr(5))) list.indices.push_back(to_size("preprocess.reject", s));
    return list;
  }
  bad("preprocess.reject", text, "keep_all, kurtosis:<threshold> or list:<i,j,...>");
}

std::string to_string(const RejectionPolicy& policy) {
  if (const auto* k = std::get_if<rejection::KurtosisThreshold>(&policy)) return fmt::format("kurtosis:{}", k->threshold);
  if (const auto* l = std::get_if<rejection::ExplicitList>(&policy)) return fmt::format("list:{}", fmt::join(l->indices, ","));
  return "keep_all";
}

void apply_setting(AppConfig& cfg, std::string_view key, std::string_view raw) {
  const auto v = trim(raw);
  auto& pp = cfg.preprocess;
  auto& sy = cfg.synth;
  if (key == "paths.manifest") cfg.manifest = std::string(v);
  else if (key == "paths.out") cfg.out = std::string(v);
  else if (key == "paths.input") cfg.input = std::string(v);
  else if (key == "threads") cfg.threads = to_size(key, v);
  else if (key == "seed") cfg.seed = to_u64(key, v);
  else if (key == "preprocess.bandpass") pp.bandpass = to_bool(key, v);
  else if (key == "preprocess.low_hz") pp.low_hz = to_double(key, v);
  else if (key == "preprocess.high_hz") pp.high_hz = to_double(key, v);
  else if (key == "preprocess.ica") pp.ica = to_bool(key, v);
  else if (key == "preprocess.ica_max_iter") pp.ica_max_iter = static_cast<int>(to_size(key, v));
  else if (key == "preprocess.ica_tol") pp.ica_tol = to_double(key, v);
  else if (key == "preprocess.reject") pp.policy = parse_rejection_policy(v);
  else if (key == "preprocess.inline") pp.inline_stage = to_bool(key, v);
  else if (key == "forge.epoch_seconds") {
    const double s = to_double(key, v);
    if (!(s > 0)) bad(key, v, "a positive duration");
    cfg.epoch_seconds = s;
  }
  else if (key == "forge.out_height") cfg.forge.out_height = to_size(key, v);
  else if (key == "forge.out_width") cfg.forge.out_width = to_size(key, v);
  else if (key == "forge.n_freq_bins") cfg.forge.spwvd.n_freq_bins = to_size(key, v);
  else if (key == "forge.time_window") cfg.forge.spwvd.time_window = to_window(key, v);
  else if (key == "forge.lag_window") cfg.forge.spwvd.lag_window = to_window(key, v);
  else if (key == "forge.normalization") cfg.forge.normalization = parse_normalization(v);
  else if (key == "forge.export_ppm") cfg.export_ppm = to_bool(key, v);
  else if (key == "train.lr") cfg.train.lr = to_double(key, v);
  else if (key == "train.epochs") cfg.train.epochs = to_size(key, v);
  else if (key == "train.batch_size") cfg.train.batch_size = to_size(key, v);
  else if (key == "train.l2") cfg.train.l2_coeff = to_double(key, v);
  else if (key == "train.holdout") cfg.holdout = to_list(v);
  else if (key == "synth.subjects_per_class") sy.subjects_per_class = to_size(key, v);
  else if (key == "synth.duration_s") sy.duration_s = to_double(key, v);
  else if (key == "synth.channels") sy.channels = to_size(key, v);
  else if (key == "synth.sample_rate_hz") sy.sample_rate_hz = to_double(key, v);
  else if (key == "synth.noise_sigma") sy.noise_sigma = to_double(key, v);
  else if (key == "synth.bandwidth_hz") sy.bandwidth_hz = to_double(key, v);
  else if (key == "synth.amplitude") sy.amplitude = to_double(key, v);
  else if (key == "synth.hc_peak_hz") sy.hc_peak_hz = to_double(key, v);
  else if (key == "synth.pd_peak_hz") sy.pd_peak_hz = to_double(key, v);
  else if (key == "tfr.channel") cfg.tfr.channel = to_size(key, v);
  else if (key == "tfr.start_s") cfg.tfr.start_s = to_double(key, v);
  else if (key == "tfr.seconds") cfg.tfr.seconds = to_double(key, v);
  else if (key == "tfr.height") cfg.tfr.height = to_size(key, v);
  else if (key == "tfr.width") cfg.tfr.width = to_size(key, v);
  else throw Error(ErrorCode::BadConfig, fmt::format("unknown setting '{}'", key));
}

void apply_config_text(AppConfig& cfg, std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::BadConfig, fmt::format("{}:{}: expected 'key = value'", origin, line_no));
    }
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::BadConfig, fmt::format("{}:{}: {}", origin, line_no, e.what()));
    }
  }
}

void load_config_file(AppConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open config file {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  const auto base = path.parent_path();
  AppConfig staged = cfg;
  apply_config_text(staged, buf.str(), path.string());
  // Relative paths in a config file are relative to the file.
  auto rebase = [&](std::filesystem::path& p, const std::filesystem::path& before) {
    if (p != before && !p.empty() && p.is_relative()) p = base / p;
  };
  rebase(staged.manifest, cfg.manifest);
  rebase(staged.out, cfg.out);
  rebase(staged.input, cfg.input);
  cfg = std::move(staged);
}

std::string dump_config(const AppConfig& c) {
  const auto& s = c.forge.spwvd;
  std::string out;
  auto line = [&](std::string_view k, const auto& v) { out += fmt::format("{} = {}\n", k, v); };
  line("paths.manifest", c.manifest.string());
  line("paths.out", c.out.string());
  line("paths.input", c.input.string());
  line("threads", c.threads);
  line("seed", c.seed);
  line("preprocess.bandpass", c.preprocess.bandpass);
  line("preprocess.low_hz", c.preprocess.low_hz);
  line("preprocess.high_hz", c.preprocess.high_hz);
  line("preprocess.ica", c.preprocess.ica);
  line("preprocess.ica_max_iter", c.preprocess.ica_max_iter);
  line("preprocess.ica_tol", c.preprocess.ica_tol);
  line("preprocess.reject", to_string(c.preprocess.policy));
  line("preprocess.inline", c.preprocess.inline_stage);
  if (c.epoch_seconds) line("forge.epoch_seconds", *c.epoch_seconds);
  line("forge.out_height", c.forge.out_height);
  line("forge.out_width", c.forge.out_width);
  line("forge.n_freq_bins", s.n_freq_bins);
  line("forge.time_window", fmt::format("{}:{}", to_string(s.time_window.kind), s.time_window.length));
  line("forge.lag_window", fmt::format("{}:{}", to_string(s.lag_window.kind), s.lag_window.length));
  line("forge.normalization", to_string(c.forge.normalization));
  line("forge.export_ppm", c.export_ppm);
  line("train.lr", c.train.lr);
  line("train.epochs", c.train.epochs);
  line("train.batch_size", c.train.batch_size);
  line("train.l2", c.train.l2_coeff);
  line("train.holdout", fmt::format("{}", fmt::join(c.holdout, ",")));
  line("synth.subjects_per_class", c.synth.subjects_per_class);
  line("synth.duration_s", c.synth.duration_s);
  line("synth.channels", c.synth.channels);
  line("synth.sample_rate_hz", c.synth.sample_rate_hz);
  line("synth.noise_sigma", c.synth.noise_sigma);
  line("synth.bandwidth_hz", c.synth.bandwidth_hz);
  line("synth.amplitude", c.synth.amplitude);
  line("synth.hc_peak_hz", c.synth.hc_peak_hz);
  line("synth.pd_peak_hz", c.synth.pd_peak_hz);
  line("tfr.channel", c.tfr.channel);
  line("tfr.start_s", c.tfr.start_s);
  line("tfr.seconds", c.tfr.seconds);
  line("tfr.height", c.tfr.height);
  line("tfr.width", c.tfr.width);
  return out;
}

}  // namespace forged::app
