// veriphy command-line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "veriphy/capture_io.hpp"
#include "veriphy/dataset.hpp"
#include "veriphy/error.hpp"
#include "veriphy/experiment.hpp"
#include "veriphy/runner.hpp"
#include "veriphy/signature_io.hpp"
#include "veriphy/tensor_export.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace veriphy;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitGeneration = 3;
constexpr int kExitIo = 4;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::AttemptsExhausted:
    case ErrorKind::SamplingFailed: return kExitGeneration;
    case ErrorKind::Io:
    case ErrorKind::Format: return kExitIo;
    default: return kExitConfig;
  }
}

// Values given on the command line; unset ones leave the config untouched.
struct Overrides {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out;
  int preset = 0;
  std::size_t n_signatures = 0;
  std::size_t n_el = 0;
  double period_ms = 0;
  bool stealth = false;
  double snr_db = 0;
  int jitter = 0;
  double phase = 0;
  std::size_t windows_per_class = 0;
  unsigned threads = 0;
  std::string modulation;
  std::string signatures_path;
  std::string scoring;

  std::vector<std::pair<std::string, CLI::Option*>> set;

  bool given(const std::string& name) const {
    for (const auto& [n, opt] : set) {
      if (n == name) return opt->count() > 0;
    }
    return false;
  }
};

void add_global(CLI::App& app, Overrides& o) {
  o.set.emplace_back("seed", app.add_option("--seed", o.seed, "RNG seed")->group("Global"));
  o.set.emplace_back("config", app.add_option("--config", o.config_path, "JSON config file")
                                   ->check(CLI::ExistingFile)
                                   ->group("Global"));
  o.set.emplace_back("out", app.add_option("--out", o.out, "Output directory")->group("Global"));
  o.set.emplace_back("threads", app.add_option("--threads", o.threads, "Worker threads (0 = all)")
                                    ->group("Global"));
}

void add_experiment(CLI::App& app, Overrides& o) {
  o.set.emplace_back("preset", app.add_option("--preset", o.preset, "Dataset preset 1-5, 0 = custom")
                                   ->check(CLI::Range(0, 5)));
  o.set.emplace_back("n-signatures", app.add_option("--n-signatures", o.n_signatures));
  o.set.emplace_back("n-el", app.add_option("--n-el", o.n_el, "Signature length (custom preset)"));
  o.set.emplace_back("period-ms", app.add_option("--period-ms", o.period_ms, "Send interval (custom preset)"));
  o.set.emplace_back("stealth", app.add_flag("--stealth", o.stealth, "Enable stealth mapping"));
  o.set.emplace_back("snr", app.add_option("--snr", o.snr_db, "Channel SNR in dB"));
  o.set.emplace_back("jitter", app.add_option("--jitter", o.jitter, "Timing jitter, samples"));
  o.set.emplace_back("phase", app.add_option("--phase", o.phase, "Phase offset, rad"));
  o.set.emplace_back("windows-per-class", app.add_option("--windows-per-class", o.windows_per_class));
  o.set.emplace_back("modulation", app.add_option("--modulation", o.modulation, "qpsk or 16qam"));
  o.set.emplace_back("scoring", app.add_option("--scoring", o.scoring, "likelihood or min_ks")
                                    ->check(CLI::IsMember({"likelihood", "min_ks"})));
  o.set.emplace_back("signatures", app.add_option("--signatures", o.signatures_path,
                                                  "Existing signatures.json")
                                       ->check(CLI::ExistingFile));
}

ExperimentConfig resolve_config(const Overrides& o) {
  ExperimentConfig cfg;
  if (o.given("config")) {
    std::ifstream in(o.config_path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + o.config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::InvalidArgument, o.config_path + ": " + e.what());
    }
    cfg = experiment_from_json(j, cfg);
    // An explicit n_el/period in the file means a custom configuration.
    if (!j.contains("preset") && (j.contains("n_el") || j.contains("period_ms"))) cfg.preset = 0;
  }
  if (o.given("seed")) cfg.seed = o.seed;
  if (o.given("out")) cfg.output_dir = o.out;
  if (o.given("threads")) cfg.threads = o.threads;
  if (o.given("preset")) cfg.preset = o.preset;
  if (o.given("n-el") || o.given("period-ms")) {
    if (!o.given("preset")) cfg.preset = 0;
    if (o.given("n-el")) cfg.n_el = o.n_el;
    if (o.given("period-ms")) cfg.period_ms = o.period_ms;
  }
  if (o.given("n-signatures")) cfg.n_signatures = o.n_signatures;
  if (o.given("stealth")) cfg.stealth = o.stealth;
  if (o.given("snr")) cfg.channel.snr_db = o.snr_db;
  if (o.given("jitter")) cfg.channel.timing_jitter_samples = o.jitter;
  if (o.given("phase")) cfg.channel.phase_offset_rad = o.phase;
  if (o.given("windows-per-class")) cfg.windows_per_class = o.windows_per_class;
  if (o.given("scoring")) cfg.scoring = scoring_from_string(o.scoring);
  if (o.given("modulation")) cfg.modulation = modulation_from_string(o.modulation);
  cfg.apply_preset();
  cfg.validate();
  return cfg;
}

fs::path out_dir(const ExperimentConfig& cfg) {
  fs::path p = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + p.string());
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

SignatureSet obtain_signatures(const Overrides& o, const ExperimentConfig& cfg) {
  if (o.given("signatures")) {
    auto set = load_signature_set(o.signatures_path);
    if (set.signatures.size() != cfg.n_signatures && o.given("n-signatures")) {
      throw Error(ErrorKind::InvalidArgument, "--n-signatures disagrees with --signatures file");
    }
    return set;
  }
  return generate_signature_set(cfg.generation_config());
}

void print_signature_set(const SignatureSet& set) {
  std::printf("%zu signatures after %zu attempts\n", set.signatures.size(), set.attempts);
  for (const auto& g : set.signatures) {
    std::printf("  %-6s %zu components:", g.id().c_str(), g.components().size());
    for (const auto& c : g.components()) std::printf(" (w=%.3f mu=%.4f sd=%.4f)", c.weight, c.mean, c.std);
    std::printf("\n");
  }
  std::printf("pairwise KS:\n");
  for (std::size_t i = 0; i < set.signatures.size(); ++i) {
    for (std::size_t j = i + 1; j < set.signatures.size(); ++j) {
      std::printf("  %s-%s %.4f\n", set.signatures[i].id().c_str(), set.signatures[j].id().c_str(),
                  ks_distance(set.signatures[i], set.signatures[j]));
    }
  }
}

int cmd_gen_sigs(const Overrides& o) {
  const auto cfg = resolve_config(o);
  const auto set = generate_signature_set(cfg.generation_config());
  const auto path = out_dir(cfg) / "signatures.json";
  save_signature_set(set, path);
  print_signature_set(set);
  std::printf("wrote %s\n", path.string().c_str());
  return kExitOk;
}

int cmd_embed(const Overrides& o, std::size_t signature_index, double duration_ms) {
  const auto cfg = resolve_config(o);
  const auto set = obtain_signatures(o, cfg);
  if (signature_index >= set.signatures.size()) {
    throw Error(ErrorKind::InvalidArgument, "signature index out of range");
  }
  const auto dir = out_dir(cfg);
  if (!o.given("signatures")) save_signature_set(set, dir / "signatures.json");

  Rng rng = make_rng(cfg.seed, 0x454D);
  const IqStream payload = generate_payload(duration_ms, cfg.modulation, rng);
  auto sched = cfg.schedule();
  auto emb = embed(payload, set.signatures[signature_index], sched, rng);
  auto ch = transmit(emb.stream, cfg.channel, rng);

  std::uint16_t flags = kCaptureEmbedded;
  if (cfg.stealth) flags |= kCaptureStealth;
  if (!cfg.channel.noiseless()) flags |= kCaptureChannel;
  const auto iq = dir / "capture.iq";
  write_capture(iq, ch.stream, flags);
  json side = {{"signature_id", set.signatures[signature_index].id()},
               {"channel", to_json(cfg.channel)},
               {"channel_shift", ch.shift_samples},
               {"noise_power", ch.noise_power},
               {"schedule", to_json(sched)},
               {"modulation", to_string(cfg.modulation)},
               {"embedding", to_json(emb.record)}};
  write_text(sidecar_path(iq), side.dump(2) + "\n");
  std::printf("embedded %zu of %zu slots from %s into %zu samples\n", emb.record.transmitted_count(),
              emb.record.slots.size(), set.signatures[signature_index].id().c_str(),
              ch.stream.size());
  std::printf("wrote %s\n", iq.string().c_str());
  return kExitOk;
}

int cmd_detect(const Overrides& o, const std::string& input, const std::string& dataset_dir) {
  if (!dataset_dir.empty()) {
    auto ds = read_dataset(dataset_dir);
    if (o.given("threads")) ds.config.threads = o.threads;
    const auto run = run_eval(ds);
    const fs::path dir = o.given("out") ? fs::path(o.out) : fs::path(dataset_dir) / "eval";
    write_eval_outputs(run, dir);
    std::cout << summary_table({run});
    std::printf("wrote %s\n", (dir / "metrics.json").string().c_str());
    return kExitOk;
  }

  const auto cfg = resolve_config(o);
  const auto set = obtain_signatures(o, cfg);
  if (!o.given("signatures")) {
    std::fprintf(stderr, "note: no --signatures given; regenerated from seed %llu\n",
                 static_cast<unsigned long long>(cfg.seed));
  }
  const IqStream stream = read_capture(fs::path(input));
  const auto dcfg = detector_config_for(cfg, set);
  const std::size_t window = cfg.window_samples();
  ReplayCache cache(dcfg.replay_horizon, dcfg.quantization);
  json reports = json::array();
  for (std::size_t start = 0, id = 0; start + window <= stream.size(); start += window, ++id) {
    IqStream w;
    w.sample_rate_per_ms = stream.sample_rate_per_ms;
    w.origin_ms = static_cast<double>(start) / stream.sample_rate_per_ms;
    w.samples.assign(stream.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     stream.samples.begin() + static_cast<std::ptrdiff_t>(start + window));
    auto rep = detect_window(w, dcfg, id);
    if (rep.classification.verdict.kind == VerdictKind::Signature) {
      rep.replay_flag = cache.check_and_insert(rep.extraction.values);
    }
    const auto label = verdict_label(rep.classification.verdict, dcfg);
    std::printf("window %zu [%.2f, %.2f) ms: %s%s\n", id, rep.start_ms, rep.end_ms, label.c_str(),
                rep.replay_flag ? " (replay)" : "");
    json scores = json::array();
    for (std::size_t k = 0; k < dcfg.enrolled.size(); ++k) {
      scores.push_back({{"class", dcfg.enrolled[k].id()},
                        {"loglik", rep.classification.scores[k].loglik},
                        {"ks", rep.classification.scores[k].ks}});
    }
    reports.push_back({{"window_id", id},
                       {"start_ms", rep.start_ms},
                       {"end_ms", rep.end_ms},
                       {"verdict", label},
                       {"scores", scores},
                       {"alignment_offset", rep.extraction.offset},
                       {"replay_flag", rep.replay_flag},
                       {"latency_ms",
                        {{"capture", rep.latency.capture_ms},
                         {"processing", rep.latency.processing_ms},
                         {"classification", rep.latency.classification_ms},
                         {"total", rep.latency.total_ms}}}});
  }
  if (reports.empty()) throw Error(ErrorKind::StreamTooShort, "capture shorter than one window");
  const auto path = out_dir(cfg) / "detections.json";
  write_text(path, reports.dump(2) + "\n");
  std::printf("wrote %s\n", path.string().c_str());
  return kExitOk;
}

int cmd_dataset(const Overrides& o) {
  const auto cfg = resolve_config(o);
  const auto set = obtain_signatures(o, cfg);
  const auto ds = synthesize_dataset(cfg, set);
  const auto dir = out_dir(cfg);
  write_dataset(ds, dir);
  std::printf("%s: %zu windows (%zu per source, %zu sources) of %zu samples\n",
              cfg.preset_name().c_str(), ds.windows.size(), cfg.windows_per_class, ds.n_classes(),
              cfg.window_samples());
  std::printf("wrote %s\n", (dir / "dataset.json").string().c_str());
  return kExitOk;
}

int cmd_export(const Overrides& o, const std::string& dataset_dir) {
  Dataset ds;
  fs::path dir;
  if (!dataset_dir.empty()) {
    ds = read_dataset(dataset_dir);
    dir = o.given("out") ? fs::path(o.out) : fs::path(dataset_dir) / "tensors";
  } else {
    const auto cfg = resolve_config(o);
    ds = synthesize_dataset(cfg, obtain_signatures(o, cfg));
    dir = out_dir(cfg) / "tensors";
  }
  const json meta = {{"config_digest", config_digest(ds.config)},
                     {"preset", ds.config.preset},
                     {"window_ms", ds.config.window_ms()}};
  const auto ex = export_tensors(ds.windows, ds.class_names(), dir, meta);
  std::printf("exported (%zu, %zu, %zu, %zu) float32, %zu bytes, group size %zu\n", ex.shape[0],
              ex.shape[1], ex.shape[2], ex.shape[3], ex.tensor_bytes, ex.group_size);
  std::printf("wrote %s\n", ex.manifest_path.string().c_str());
  return kExitOk;
}

int cmd_bench(const Overrides& o, std::vector<int> presets, bool both_modes) {
  const auto base = resolve_config(o);
  const auto set = obtain_signatures(o, base);
  const auto root = out_dir(base);
  if (!o.given("signatures")) save_signature_set(set, root / "signatures.json");
  if (presets.empty()) {
    for (const auto& p : kPresets) presets.push_back(p.id);
  }
  std::vector<bool> modes{base.stealth};
  if (both_modes) modes = {false, true};

  std::vector<EvalRun> runs;
  for (bool stealth : modes) {
    for (int id : presets) {
      ExperimentConfig cfg = base;
      cfg.preset = id;
      cfg.stealth = stealth;
      cfg.apply_preset();
      cfg.validate();
      std::fprintf(stderr, "running %s ...\n", cfg.preset_name().c_str());
      const auto ds = synthesize_dataset(cfg, set);
      auto run = run_eval(ds);
      write_eval_outputs(run, root / ("preset" + std::to_string(id) + (stealth ? "-stealth" : "")));
      runs.push_back(std::move(run));
    }
  }
  const auto table = summary_table(runs);
  std::cout << table;
  write_text(root / "summary.txt", table);
  return kExitOk;
}

int cmd_covertness(const Overrides& o, std::size_t seeds, double duration_ms) {
  const auto cfg = resolve_config(o);
  const auto set = obtain_signatures(o, cfg);
  const auto rep = run_covertness(cfg, set, seeds, duration_ms);
  const auto dir = out_dir(cfg);
  write_text(dir / "covertness.csv", covertness_csv(rep));
  write_text(dir / "covertness_cdf.csv", covertness_cdf_csv(rep));
  std::printf("seed        KS normal  KS stealth\n");
  for (const auto& t : rep.trials) {
    std::printf("%-10llu  %9.4f  %10.4f\n", static_cast<unsigned long long>(t.seed), t.ks_normal,
                t.ks_stealth);
  }
  std::printf("max KS stealth %.4f, stealth below normal on every seed: %s\n", rep.max_ks_stealth,
              rep.stealth_always_lower ? "yes" : "no");
  std::printf("wrote %s\n", (dir / "covertness.csv").string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physical-layer signature authentication simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "veriphy 1.0");

  Overrides o;
  add_global(app, o);
  add_experiment(app, o);
  app.fallthrough();

  auto* gen = app.add_subcommand("gen-sigs", "Generate a KS-separated signature set");

  std::size_t sig_index = 0;
  double embed_ms = 10.0;
  auto* emb = app.add_subcommand("embed", "Embed one signature source into a synthetic capture");
  emb->add_option("--signature", sig_index, "Enrolled index to transmit");
  emb->add_option("--duration-ms", embed_ms, "Capture length")->check(CLI::PositiveNumber);

  std::string input, dataset_dir;
  auto* det = app.add_subcommand("detect", "Classify a capture or evaluate a stored dataset");
  auto* in_opt = det->add_option("--input", input, "Capture file (.iq)")->check(CLI::ExistingFile);
  auto* ds_opt = det->add_option("--dataset", dataset_dir, "Dataset directory")->check(CLI::ExistingDirectory);
  in_opt->excludes(ds_opt);

  auto* dsc = app.add_subcommand("dataset", "Synthesize a labeled dataset");

  std::string export_src;
  auto* exp = app.add_subcommand("export-tensors", "Write the (N, 60, 36, 2) tensor export");
  exp->add_option("--dataset", export_src, "Dataset directory (default: synthesize)")
      ->check(CLI::ExistingDirectory);

  std::vector<int> presets;
  bool both = false;
  auto* bench = app.add_subcommand("bench", "Evaluate the preset matrix and print the summary");
  bench->add_option("--presets", presets, "Preset ids (default: all)")->check(CLI::Range(1, 5));
  bench->add_flag("--both-modes", both, "Run every preset with and without stealth");

  std::size_t seeds = 10;
  double cov_ms = 100.0;
  auto* cov = app.add_subcommand("covertness", "Energy-CDF comparison of stealth and normal embedding");
  cov->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  cov->add_option("--duration-ms", cov_ms, "Payload length per seed")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_sigs(o);
    if (*emb) return cmd_embed(o, sig_index, embed_ms);
    if (*det) {
      if (input.empty() && dataset_dir.empty()) {
        std::fprintf(stderr, "detect: one of --input or --dataset is required\n");
        return kExitConfig;
      }
      return cmd_detect(o, input, dataset_dir);
    }
    if (*dsc) return cmd_dataset(o);
    if (*exp) return cmd_export(o, export_src);
    if (*bench) return cmd_bench(o, presets, both);
    if (*cov) return cmd_covertness(o, seeds, cov_ms);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error (io): %s\n", e.what());
    return kExitIo;
  }
  return kExitConfig;
}
