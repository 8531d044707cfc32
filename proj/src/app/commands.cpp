#include "forged/app/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <deque>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "forged/ingest.hpp"
#include "forged/losocv.hpp"
#include "forged/manifest.hpp"
#include "forged/nn/checkpoint.hpp"
#include "forged/parallel.hpp"

namespace fs = std::filesystem;

namespace forged::app {

namespace {

// Flag -> config key. Value flags take one argument; switches set the value.
struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
  const char* switch_value = nullptr;
};

constexpr FlagSpec kIoFlags[] = {
    {"--input", "paths.input", "input directory (with manifest.txt or index.txt) or file"},
    {"--manifest", "paths.manifest", "dataset manifest; takes precedence over --input"},
    {"--out", "paths.out", "output directory (output file for tfr-plot)"},
    {"--threads", "threads", "worker cap; falls back to FORGED_EEG_THREADS"},
    {"--seed", "seed", "base seed for all randomness"},
};
constexpr FlagSpec kSynthFlags[] = {
    {"--subjects-per-class", "synth.subjects_per_class", "subjects generated per class"},
    {"--duration", "synth.duration_s", "seconds per recording"},
    {"--channels", "synth.channels", "channels per recording"},
    {"--sample-rate", "synth.sample_rate_hz", "sampling rate in Hz"},
    {"--noise", "synth.noise_sigma", "white noise standard deviation"},
    {"--epoch-seconds", "forge.epoch_seconds", "epoch length recorded in the manifest"},
};
constexpr FlagSpec kPreprocessFlags[] = {
    {"--low-hz", "preprocess.low_hz", "band-pass lower edge"},
    {"--high-hz", "preprocess.high_hz", "band-pass upper edge"},
    {"--no-bandpass", "preprocess.bandpass", "skip the band-pass filter", "false"},
    {"--ica", "preprocess.ica", "run FastICA and reject components", "true"},
    {"--reject", "preprocess.reject", "keep_all | kurtosis:<t> | list:<i,j,...>"},
};
constexpr FlagSpec kForgeFlags[] = {
    {"--epoch-seconds", "forge.epoch_seconds", "epoch length in seconds"},
    {"--height", "forge.out_height", "image height"},
    {"--width", "forge.out_width", "image width"},
    {"--freq-bins", "forge.n_freq_bins", "SPWVD frequency bins"},
    {"--time-window", "forge.time_window", "<kind>:<odd length>"},
    {"--lag-window", "forge.lag_window", "<kind>:<odd length>"},
    {"--normalization", "forge.normalization", "joint | per-plane"},
    {"--inline-preprocess", "preprocess.inline", "clean recordings in memory first", "true"},
};
constexpr FlagSpec kTrainFlags[] = {
    {"--epochs", "train.epochs", "training epochs"},
    {"--batch-size", "train.batch_size", "minibatch size"},
    {"--lr", "train.lr", "Adam learning rate"},
    {"--l2", "train.l2", "L2 coefficient on weights"},
};
constexpr FlagSpec kHoldoutFlags[] = {
    {"--holdout", "train.holdout", "comma-separated subjects left out and evaluated"},
};
constexpr FlagSpec kTfrFlags[] = {
    {"--channel", "tfr.channel", "channel index"},
    {"--start", "tfr.start_s", "segment start in seconds"},
    {"--seconds", "tfr.seconds", "segment length in seconds"},
    {"--height", "tfr.height", "image height (0 = TFR size)"},
    {"--width", "tfr.width", "image width (0 = TFR size)"},
    {"--freq-bins", "forge.n_freq_bins", "SPWVD frequency bins"},
    {"--time-window", "forge.time_window", "<kind>:<odd length>"},
    {"--lag-window", "forge.lag_window", "<kind>:<odd length>"},
};

std::vector<std::span<const FlagSpec>> flags_for(std::string_view cmd) {
  if (cmd == "synth") return {kIoFlags, kSynthFlags};
  if (cmd == "ingest") return {kIoFlags};
  if (cmd == "preprocess") return {kIoFlags, kPreprocessFlags};
  if (cmd == "forge") return {kIoFlags, kForgeFlags};
  if (cmd == "train") return {kIoFlags, kForgeFlags, kTrainFlags, kHoldoutFlags};
  if (cmd == "losocv") return {kIoFlags, kForgeFlags, kTrainFlags};
  return {kIoFlags, kTfrFlags};
}

const char* describe(std::string_view cmd) {
  if (cmd == "synth") return "write synthetic recordings and a manifest";
  if (cmd == "ingest") return "convert BDF recordings to the raw tensor format";
  if (cmd == "preprocess") return "band-pass and ICA-clean recordings into a new directory";
  if (cmd == "forge") return "materialize forged images and their index";
  if (cmd == "train") return "fit one CNN on a subject split";
  if (cmd == "losocv") return "run leave-one-subject-out cross-validation";
  return "render the SPWVD of one channel segment as PPM";
}

}  // namespace

ParsedArgs parse_args(const std::vector<std::string>& args) {
  ParsedArgs out;
  if (args.empty()) throw Error(ErrorCode::UnknownCommand, "missing command; try --help");
  const auto& first = args.front();
  const bool known = std::find(std::begin(kCommands), std::end(kCommands), first) != std::end(kCommands);
  if (!known && first != "--help" && first != "-h") {
    throw Error(ErrorCode::UnknownCommand, fmt::format("unknown command '{}'", first));
  }

  CLI::App app{"EEG forged-image pipeline", "forged_eeg"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  std::vector<std::string> sets;
  std::deque<std::pair<std::string, std::optional<std::string>>> values;  // in flag order
  for (const char* name : kCommands) {
    auto* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", config_path, "key = value config file; flags override it");
    sub->add_option("--set", sets, "override any config key: key=value")->allow_extra_args(false);
    std::set<std::string> seen;
    for (auto group : flags_for(name)) {
      for (const auto& f : group) {
        if (!seen.insert(f.flag).second) continue;
        auto& slot = values.emplace_back(f.key, std::nullopt);
        if (f.switch_value) {
          const std::string v = f.switch_value;
          sub->add_flag_callback(f.flag, [&slot, v] { slot.second = v; }, f.help);
        } else {
          sub->add_option_function<std::string>(f.flag, [&slot](const std::string& v) { slot.second = v; }, f.help);
        }
      }
    }
  }

  std::vector<const char*> argv{"forged_eeg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out.help = true;
    out.help_text = app.help();
    for (auto* sub : app.get_subcommands()) {
      out.command = sub->get_name();
      out.help_text = sub->help();
    }
    return out;
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorCode::BadFlag, e.what());
  }

  out.command = app.get_subcommands().front()->get_name();
  if (config_path) load_config_file(out.config, *config_path);
  for (const auto& [key, value] : values) {
    if (!value) continue;
    try {
      apply_setting(out.config, key, *value);
    } catch (const Error& e) {
      throw Error(ErrorCode::BadFlag, e.what());
    }
  }
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::BadFlag, fmt::format("--set {}: expected key=value", s));
    try {
      apply_setting(out.config, s.substr(0, eq), s.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::BadFlag, fmt::format("--set {}: {}", s, e.what()));
    }
  }
  return out;
}

Recording preprocess_recording(const Recording& r, const PreprocessSettings& s, std::uint64_t base_seed) {
  Recording out = r;
  if (s.bandpass) out = apply_zero_phase(out, design_bandpass(out.sample_rate_hz, s.low_hz, s.high_hz));
  if (s.ica) {
    IcaOptions opt{s.ica_max_iter, s.ica_tol, fold_seed(base_seed, "ica/" + r.subject_id)};
    const auto d = fastica(out, opt);
    if (!d.converged) {
      fmt::print(stderr, "warning: {}: FastICA stopped after {} iterations without converging\n", r.subject_id,
                 d.iterations);
    }
    out = reject_and_rebuild(d, s.policy, out);
  }
  return out;
}

namespace {

struct Context {
  const AppConfig& cfg;
  std::string command;
};

fs::path require_existing(const fs::path& p, std::string_view what) {
  if (!fs::exists(p)) throw Error(ErrorCode::Io, fmt::format("{} not found: {}", what, p.string()));
  return p;
}

fs::path input_path(const AppConfig& cfg) {
  if (!cfg.manifest.empty()) return require_existing(cfg.manifest, "manifest");
  if (cfg.input.empty()) throw Error(ErrorCode::BadConfig, "no input given (use --input or --manifest)");
  return require_existing(cfg.input, "input");
}

fs::path manifest_path(const AppConfig& cfg) {
  auto p = input_path(cfg);
  if (fs::is_directory(p)) p = require_existing(p / "manifest.txt", "manifest");
  return p;
}

DatasetManifest load_manifest(const AppConfig& cfg) {
  auto m = read_manifest(manifest_path(cfg));
  if (cfg.epoch_seconds) m.epoch_seconds = *cfg.epoch_seconds;
  return m;
}

// Creates the output directory; refuses to write into the input directory.
fs::path output_dir(const AppConfig& cfg) {
  if (cfg.out.empty()) throw Error(ErrorCode::BadConfig, "no output directory given (use --out)");
  if (!cfg.manifest.empty() || !cfg.input.empty()) {
    auto in = input_path(cfg);
    if (!fs::is_directory(in)) in = in.parent_path();
    if (fs::weakly_canonical(in) == fs::weakly_canonical(cfg.out)) {
      throw Error(ErrorCode::BadConfig, fmt::format("output directory {} is the input directory", cfg.out.string()));
    }
  }
  fs::create_directories(cfg.out);
  return cfg.out;
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  f << text;
  if (!f) throw Error(ErrorCode::Io, fmt::format("write failed: {}", path.string()));
}

// Sidecar next to each top-level artifact recording where its randomness came from.
void write_meta(const Context& ctx, const fs::path& artifact) {
  write_text(fs::path(artifact.string() + ".meta"), fmt::format("command = {}\nseed = {}\n", ctx.command, ctx.cfg.seed));
}

std::function<Recording(const Recording&)> inline_preprocess(const AppConfig& cfg) {
  if (!cfg.preprocess.inline_stage) return {};
  return [s = cfg.preprocess, seed = cfg.seed](const Recording& r) { return preprocess_recording(r, s, seed); };
}

// Forged images from a forge output directory (index.txt) or forged on the fly
// from a manifest.
std::vector<ForgedImage> load_images(const AppConfig& cfg) {
  const auto in = input_path(cfg);
  if (cfg.manifest.empty() && fs::is_directory(in) && fs::exists(in / "index.txt")) {
    const auto index = read_forged_index(in / "index.txt");
    std::vector<ForgedImage> images;
    images.reserve(index.entries.size());
    for (const auto& e : index.entries) images.push_back(read_forged_image(e.file, e, index.height, index.width));
    return images;
  }
  return forge_dataset(load_manifest(cfg), cfg.forge, inline_preprocess(cfg), cfg.threads);
}

// Subject list in first-appearance order, as a manifest for fold construction.
DatasetManifest subjects_of(std::span<const ForgedImage> images) {
  DatasetManifest m;
  for (const auto& img : images) {
    if (!m.find(img.subject_id)) m.entries.push_back({img.subject_id, img.label, {}});
  }
  return m;
}

int cmd_synth(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto out = output_dir(cfg);
  const auto& s = cfg.synth;
  DatasetManifest m;
  m.epoch_seconds = cfg.epoch_seconds.value_or(2.0);
  for (ClassLabel label : {ClassLabel::HC, ClassLabel::PD}) {
    for (std::size_t i = 1; i <= s.subjects_per_class; ++i) {
      const auto id = fmt::format("{}{:02}", to_string(label), i);
      SynthSpec spec;
      spec.class_profile = {{label == ClassLabel::HC ? s.hc_peak_hz : s.pd_peak_hz, s.bandwidth_hz, s.amplitude}};
      spec.noise_sigma = s.noise_sigma;
      spec.duration_s = s.duration_s;
      spec.n_channels = s.channels;
      spec.sample_rate_hz = s.sample_rate_hz;
      spec.seed = fold_seed(cfg.seed, "synth/" + id);
      const auto file = out / (id + ".frt");
      write_raw(synth_recording(spec, id, label), file);
      m.entries.push_back({id, label, file});
    }
  }
  write_manifest(m, out / "manifest.txt");
  write_meta(ctx, out / "manifest.txt");
  fmt::print("wrote {} recordings to {}\n", m.entries.size(), out.string());
  return 0;
}

int cmd_ingest(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto in = input_path(ctx.cfg);
  const auto out = output_dir(cfg);
  if (fs::is_regular_file(in) && in.extension() == ".bdf") {
    const auto file = out / (in.stem().string() + ".frt");
    write_raw(load_recording(in), file);
    fmt::print("wrote {}\n", file.string());
    return 0;
  }
  auto m = load_manifest(cfg);
  for (auto& e : m.entries) {
    Recording r;
    try {
      r = load_recording(e);
    } catch (const Error& err) {
      throw Error(err.code(), fmt::format("subject {} ({}): {}", e.subject_id, e.path.string(), err.what()));
    }
    e.path = out / (e.subject_id + ".frt");
    write_raw(r, e.path);
  }
  write_manifest(m, out / "manifest.txt");
  write_meta(ctx, out / "manifest.txt");
  fmt::print("converted {} recordings into {}\n", m.entries.size(), out.string());
  return 0;
}

int cmd_preprocess(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto m = load_manifest(cfg);
  const auto out = output_dir(cfg);
  for (auto& e : m.entries) {
    Recording cleaned;
    try {
      cleaned = preprocess_recording(load_recording(e), cfg.preprocess, cfg.seed);
    } catch (const Error& err) {
      throw Error(err.code(), fmt::format("subject {}: {}", e.subject_id, err.what()));
    }
    e.path = out / (e.subject_id + ".frt");
    write_raw(cleaned, e.path);
  }
  write_manifest(m, out / "manifest.txt");
  write_meta(ctx, out / "manifest.txt");
  fmt::print("preprocessed {} recordings into {}\n", m.entries.size(), out.string());
  return 0;
}

int cmd_forge(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto m = load_manifest(cfg);
  const auto out = output_dir(cfg);
  const auto images = forge_dataset(m, cfg.forge, inline_preprocess(cfg), cfg.threads);
  ForgedIndex index{cfg.forge.out_height, cfg.forge.out_width, {}};
  for (const auto& img : images) {
    const auto stem = fmt::format("{}_e{:04}", img.subject_id, img.epoch_index);
    const auto file = out / (stem + ".frt");
    // Images have no time axis; the header rate field is a placeholder.
    write_forged_image(img, file, 1.0);
    if (cfg.export_ppm) export_ppm(img, out / (stem + ".ppm"));
    index.entries.push_back({file, img.subject_id, img.label, img.epoch_index});
  }
  write_forged_index(index, out / "index.txt");
  write_meta(ctx, out / "index.txt");
  fmt::print("forged {} images from {} subjects into {}\n", images.size(), m.entries.size(), out.string());
  return 0;
}

int cmd_train(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto images = load_images(cfg);
  const auto out = output_dir(cfg);
  if (images.empty()) throw Error(ErrorCode::EmptyDataset, "no images to train on");
  const std::set<std::string> held(cfg.holdout.begin(), cfg.holdout.end());
  for (const auto& id : held) {
    if (std::none_of(images.begin(), images.end(), [&](const auto& i) { return i.subject_id == id; })) {
      throw Error(ErrorCode::BadConfig, fmt::format("holdout subject {} is not in the dataset", id));
    }
  }
  nn::ImageRefs train_set, test_set;
  for (const auto& img : images) (held.count(img.subject_id) ? test_set : train_set).push_back(&img);
  if (train_set.empty()) throw Error(ErrorCode::EmptyDataset, "every subject is held out");

  auto tc = cfg.train;
  tc.seed = cfg.seed;
  tc.threads = cfg.threads;
  auto model = nn::build_paper_cnn(fold_seed(cfg.seed, "train/init"), images.front().height, images.front().width);
  const auto history = nn::train(model, train_set, tc);

  std::string csv = "epoch,loss,accuracy\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    csv += fmt::format("{},{},{}\n", e + 1, history[e].loss, history[e].accuracy);
    fmt::print("epoch {:3}  loss {:.4f}  acc {:.2f}%\n", e + 1, history[e].loss, 100.0 * history[e].accuracy);
  }
  nn::save_checkpoint(model, out / "model.frgcnn");
  write_meta(ctx, out / "model.frgcnn");
  write_text(out / "history.csv", csv);

  for (const auto& id : cfg.holdout) {
    nn::ImageRefs subject;
    for (const auto* img : test_set) {
      if (img->subject_id == id) subject.push_back(img);
    }
    const auto ev = nn::evaluate(model, subject, cfg.threads);
    const auto sp = subject_prediction_from_accuracy(ev.accuracy, subject.front()->label);
    fmt::print("holdout {} ({}): loss {:.4f}  acc {:.2f}%  predicted {}\n", id, to_string(subject.front()->label),
               ev.loss, 100.0 * ev.accuracy, to_string(sp.predicted));
  }
  return 0;
}

int cmd_losocv(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto images = load_images(cfg);
  const auto out = output_dir(cfg);
  const auto folds = make_folds(subjects_of(images));
  LosocvOptions opt;
  opt.base_seed = cfg.seed;
  opt.threads = cfg.threads;
  opt.on_fold = [](const FoldResult& f) {
    fmt::print(stderr, "fold {} ({}): test acc {:.2f}% -> {}\n", f.subject_id, to_string(f.label), 100.0 * f.test_acc,
               f.correct ? "correct" : "wrong");
  };
  const auto report = run_losocv(images, folds, cfg.train, opt);
  write_text(out / "report.csv", report_csv(report));
  write_meta(ctx, out / "report.csv");
  const auto table = render_report(report);
  write_text(out / "report.txt", table);
  fmt::print("{}", table);
  return 0;
}

int cmd_tfr_plot(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto in = input_path(cfg);
  if (cfg.out.empty()) throw Error(ErrorCode::BadConfig, "no output file given (use --out)");
  auto rec = fs::is_directory(in) ? load_recording(read_manifest(manifest_path(cfg)).entries.at(0)) : load_recording(in);
  const auto& t = cfg.tfr;
  if (t.channel >= rec.data.rows()) {
    throw Error(ErrorCode::BadIndex, fmt::format("channel {} out of range ({} channels)", t.channel, rec.data.rows()));
  }
  const auto first = static_cast<std::size_t>(std::llround(t.start_s * rec.sample_rate_hz));
  const auto count = epoch_length(t.seconds, rec.sample_rate_hz);
  if (first + count > rec.data.cols()) {
    throw Error(ErrorCode::BadIndex, fmt::format("segment [{} s, {} s) exceeds the {} s recording", t.start_s,
                                                 t.start_s + t.seconds, rec.data.cols() / rec.sample_rate_hz));
  }
  const auto row = rec.data.row(t.channel).subspan(first, count);
  const std::vector<double> x(row.begin(), row.end());
  const auto tfr = spwvd(x, cfg.forge.spwvd, rec.sample_rate_hz);
  if (cfg.out.has_parent_path()) fs::create_directories(cfg.out.parent_path());
  export_tfr_ppm(tfr, cfg.out, t.height, t.width);
  write_meta(ctx, cfg.out);
  fmt::print("wrote {}\n", cfg.out.string());
  return 0;
}

}  // namespace

int run_command(const std::string& command, const AppConfig& cfg, std::ostream& diagnostics) {
  const Context ctx{cfg, command};
  try {
    if (cfg.threads > 0) set_thread_count(cfg.threads);
    if (command == "synth") return cmd_synth(ctx);
    if (command == "ingest") return cmd_ingest(ctx);
    if (command == "preprocess") return cmd_preprocess(ctx);
    if (command == "forge") return cmd_forge(ctx);
    if (command == "train") return cmd_train(ctx);
    if (command == "losocv") return cmd_losocv(ctx);
    if (command == "tfr-plot") return cmd_tfr_plot(ctx);
    throw Error(ErrorCode::UnknownCommand, fmt::format("unknown command '{}'", command));
  } catch (const std::exception& e) {
    diagnostics << fmt::format("forged_eeg {}: {}\n", command, e.what()) << std::flush;
    return 1;
  }
}

}  // namespace forged::app
