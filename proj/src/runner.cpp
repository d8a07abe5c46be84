#include "veriphy/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "veriphy/error.hpp"
#include "veriphy/mirror.hpp"
#include "veriphy/parallel.hpp"

namespace veriphy {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

EnergyCdf pooled_cdf(const std::vector<const IqStream*>& streams) {
  IqStream all;
  for (const auto* s : streams) all.samples.insert(all.samples.end(), s->samples.begin(), s->samples.end());
  if (all.empty()) return {};
  return energy_cdf(all, kEnergyCdfPoints);
}

}  // namespace

EvalRun run_eval(const Dataset& ds, const DetectorConfig& detector_cfg) {
  if (ds.windows.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no windows");
  detector_cfg.validate();

  EvalRun run;
  run.config_name = ds.config.preset_name();
  run.digest = config_digest(ds.config);
  run.class_names = ds.class_names();

  const std::size_t n = ds.windows.size();
  std::vector<DetectionReport> reports(n);
  std::vector<char> mismatch(n, 0);
  parallel_for(n, ds.config.threads, [&](std::size_t i) {
    const auto& src = ds.windows[i].window;
    auto branches = mirror(src);
    mismatch[i] = stream_checksum(branches[0].samples) != stream_checksum(src.samples);
    reports[i] = detect_window(branches[1], detector_cfg, i);
  });
  run.mirror_mismatches = static_cast<std::size_t>(std::count(mismatch.begin(), mismatch.end(), 1));

  const auto truth = ds.labels();
  run.evaluation = finalize_evaluation(std::move(reports), truth, detector_cfg);

  std::vector<std::vector<const IqStream*>> per_class(run.class_names.size());
  for (const auto& w : ds.windows) per_class.at(w.label).push_back(&w.window);
  for (const auto& streams : per_class) run.energy_cdfs.push_back(pooled_cdf(streams));
  return run;
}

json eval_json(const EvalRun& run) {
  json j = metrics_to_json(run.evaluation.metrics, run.digest);
  j["config_name"] = run.config_name;
  j["mirror_mismatches"] = run.mirror_mismatches;
  return j;
}

json without_latency(json metrics) {
  metrics.erase("latency_ms");
  return metrics;
}

std::string energy_cdf_csv(const EvalRun& run) {
  std::ostringstream os;
  os << "probability";
  for (const auto& name : run.class_names) os << ',' << name;
  os << '\n';
  for (std::size_t p = 0; p < kEnergyCdfPoints; ++p) {
    os << fmt("%.6f", (static_cast<double>(p) + 0.5) / kEnergyCdfPoints);
    for (const auto& cdf : run.energy_cdfs) {
      os << ',';
      if (p < cdf.energy.size()) os << fmt("%.9g", cdf.energy[p]);
    }
    os << '\n';
  }
  return os.str();
}

void write_eval_outputs(const EvalRun& run, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string());
  write_text(dir / "metrics.json", eval_json(run).dump(2) + "\n");
  write_text(dir / "confusion.csv", confusion_csv(run.evaluation.metrics));
  write_text(dir / "energy_cdf.csv", energy_cdf_csv(run));
}

std::string summary_table(const std::vector<EvalRun>& runs) {
  std::size_t width = 13;
  for (const auto& r : runs) width = std::max(width, r.config_name.size());
  std::ostringstream os;
  auto pad = [&](const std::string& s) { return s + std::string(width - std::min(width, s.size()), ' '); };

  os << pad("Configuration") << "  Accuracy  F-score  Replays\n";
  os << std::string(width + 28, '-') << '\n';
  for (const auto& r : runs) {
    const auto& m = r.evaluation.metrics;
    os << pad(r.config_name) << "  " << fmt("%7.2f%%", 100.0 * m.accuracy) << "  "
       << fmt("%7.2f", m.f1_macro) << "  " << fmt("%7.0f", static_cast<double>(m.replay_flags))
       << '\n';
  }
  os << '\n' << pad("Latency") << "  Mean (ms)  Max (ms)\n";
  os << std::string(width + 21, '-') << '\n';
  for (const auto& r : runs) {
    const auto& mean = r.evaluation.metrics.mean_latency;
    const auto& max = r.evaluation.metrics.max_latency;
    if (runs.size() > 1) os << r.config_name << '\n';
    const std::pair<const char*, std::pair<double, double>> rows[] = {
        {"I/Q capture time", {mean.capture_ms, max.capture_ms}},
        {"Processing time", {mean.processing_ms, max.processing_ms}},
        {"Classification time", {mean.classification_ms, max.classification_ms}},
        {"Total time", {mean.total_ms, max.total_ms}},
    };
    for (const auto& [label, v] : rows) {
      os << pad(label) << "  " << fmt("%9.3f", v.first) << "  " << fmt("%8.3f", v.second) << '\n';
    }
  }
  return os.str();
}

CovertnessReport run_covertness(const ExperimentConfig& cfg, const SignatureSet& sigs,
                                std::size_t n_seeds, double duration_ms) {
  if (sigs.signatures.empty()) throw Error(ErrorKind::InvalidArgument, "empty signature set");
  if (n_seeds < 1) throw Error(ErrorKind::InvalidArgument, "n_seeds must be >= 1");

  auto normal_sched = cfg.schedule();
  normal_sched.stealth.reset();
  auto stealth_sched = normal_sched;
  stealth_sched.stealth = cfg.stealth_config;

  CovertnessReport rep;
  rep.trials.resize(n_seeds);
  std::vector<std::array<EnergyCdf, 3>> cdfs(1);
  parallel_for(n_seeds, cfg.threads, [&](std::size_t i) {
    auto& t = rep.trials[i];
    t.seed = cfg.seed + i;
    const auto& gmm = sigs.signatures[i % sigs.signatures.size()];
    t.signature_id = gmm.id();

    Rng payload_rng = make_rng(t.seed, 0);
    const IqStream baseline = generate_payload(duration_ms, cfg.modulation, payload_rng);
    Rng a = make_rng(t.seed, 1);
    Rng b = make_rng(t.seed, 1);
    const auto normal = embed(baseline, gmm, normal_sched, a);
    const auto stealth = embed(baseline, gmm, stealth_sched, b);
    t.transmitted_slots = normal.record.transmitted_count();

    // The observer sees the air interface: same channel realization for all three.
    auto over_air = [&](const IqStream& s) {
      Rng ch = make_rng(t.seed, 2);
      return apply_channel(s, cfg.channel, ch);
    };
    const IqStream rx_base = over_air(baseline);
    const IqStream rx_normal = over_air(normal.stream);
    const IqStream rx_stealth = over_air(stealth.stream);
    t.ks_normal = energy_ks(rx_normal, rx_base);
    t.ks_stealth = energy_ks(rx_stealth, rx_base);
    if (i == 0) {
      cdfs[0] = {energy_cdf(rx_base, kEnergyCdfPoints), energy_cdf(rx_normal, kEnergyCdfPoints),
                 energy_cdf(rx_stealth, kEnergyCdfPoints)};
    }
  });
  rep.baseline = std::move(cdfs[0][0]);
  rep.normal = std::move(cdfs[0][1]);
  rep.stealth = std::move(cdfs[0][2]);
  for (const auto& t : rep.trials) {
    rep.max_ks_stealth = std::max(rep.max_ks_stealth, t.ks_stealth);
    rep.stealth_always_lower = rep.stealth_always_lower && t.ks_stealth < t.ks_normal;
  }
  return rep;
}

std::string covertness_csv(const CovertnessReport& rep) {
  std::ostringstream os;
  os << "seed,signature,transmitted_slots,ks_normal,ks_stealth\n";
  for (const auto& t : rep.trials) {
    os << t.seed << ',' << t.signature_id << ',' << t.transmitted_slots << ','
       << fmt("%.6f", t.ks_normal) << ',' << fmt("%.6f", t.ks_stealth) << '\n';
  }
  return os.str();
}

std::string covertness_cdf_csv(const CovertnessReport& rep) {
  std::ostringstream os;
  os << "probability,baseline,normal,stealth\n";
  for (std::size_t p = 0; p < rep.baseline.energy.size(); ++p) {
    os << fmt("%.6f", rep.baseline.probability[p]) << ',' << fmt("%.9g", rep.baseline.energy[p])
       << ',' << fmt("%.9g", rep.normal.energy[p]) << ',' << fmt("%.9g", rep.stealth.energy[p])
       << '\n';
  }
  return os.str();
}

}  // namespace veriphy
