#include "veriphy/dataset.hpp"

#include <fstream>

#include "veriphy/capture_io.hpp"
#include "veriphy/error.hpp"
#include "veriphy/parallel.hpp"
#include "veriphy/signature_io.hpp"

namespace veriphy {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string capture_name(const std::vector<std::string>& names, std::size_t source) {
  return names.at(source) + ".iq";
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, path.string() + ": " + e.what());
  }
}

std::uint16_t capture_flags(const ExperimentConfig& cfg, bool embedded) {
  std::uint16_t f = 0;
  if (embedded) f |= kCaptureEmbedded;
  if (embedded && cfg.stealth) f |= kCaptureStealth;
  if (!cfg.channel.noiseless() || cfg.channel.phase_offset_rad != 0.0 ||
      cfg.channel.timing_jitter_samples != 0) {
    f |= kCaptureChannel;
  }
  return f;
}

}  // namespace

std::vector<std::string> Dataset::class_names() const {
  std::vector<std::string> names;
  for (const auto& g : signatures.signatures) names.push_back(g.id());
  names.emplace_back("none");
  return names;
}

std::vector<std::size_t> Dataset::labels() const {
  std::vector<std::size_t> out(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) out[i] = windows[i].label;
  return out;
}

std::uint64_t window_seed(std::uint64_t seed, std::size_t source, std::size_t source_window) noexcept {
  return derive_seed(derive_seed(seed, source + 1), source_window);
}

SynthesizedWindow synthesize_window(const ExperimentConfig& cfg, const SignatureSet& sigs,
                                    std::size_t source, std::size_t source_window) {
  const std::size_t n_sig = sigs.signatures.size();
  if (source > n_sig) throw Error(ErrorKind::InvalidArgument, "source index out of range");

  SynthesizedWindow out;
  auto& t = out.truth;
  t.source = source;
  t.source_window = source_window;
  t.index = source_window * (n_sig + 1) + source;
  t.seed = window_seed(cfg.seed, source, source_window);

  Rng rng(t.seed);
  IqStream payload = generate_payload(cfg.window_ms(), cfg.modulation, rng);
  payload.origin_ms = static_cast<double>(t.index) * cfg.window_ms();

  if (source < n_sig) {
    auto schedule = cfg.schedule();
    schedule.seed = t.seed;
    auto emb = embed(payload, sigs.signatures[source], schedule, rng);
    payload = std::move(emb.stream);
    t.record = std::move(emb.record);
  } else {
    t.record.samples_per_element = cfg.samples_per_element;
  }

  auto ch = transmit(payload, cfg.channel, rng);
  t.channel_shift = ch.shift_samples;
  t.noise_power = ch.noise_power;

  const bool sent = !t.record.slots.empty() && t.record.slots.front().transmitted;
  out.window.window = std::move(ch.stream);
  out.window.label = sent ? source : n_sig;
  return out;
}

Dataset synthesize_dataset(const ExperimentConfig& cfg, const SignatureSet& sigs) {
  cfg.validate();
  if (sigs.signatures.empty()) throw Error(ErrorKind::InvalidArgument, "empty signature set");

  Dataset ds;
  ds.config = cfg;
  ds.signatures = sigs;
  const std::size_t n_src = sigs.signatures.size() + 1;
  const std::size_t total = n_src * cfg.windows_per_class;
  ds.windows.resize(total);
  ds.truth.resize(total);
  parallel_for(total, cfg.threads, [&](std::size_t i) {
    auto w = synthesize_window(cfg, sigs, i % n_src, i / n_src);
    ds.windows[i] = std::move(w.window);
    ds.truth[i] = std::move(w.truth);
  });
  return ds;
}

json to_json(const EmbedRecord& rec) {
  json slots = json::array();
  for (const auto& s : rec.slots) {
    json idx = json::array();
    for (auto i : rec.sample_indices(s)) idx.push_back(i);
    slots.push_back({{"slot_index", s.slot_index},
                     {"time_ms", s.time_ms},
                     {"gated", !s.transmitted},
                     {"transmitted", s.transmitted},
                     {"first_sample", s.first_sample},
                     {"sample_indices", std::move(idx)},
                     {"values", s.signature.values},
                     {"signature_id", s.transmitted ? json(s.signature.source_id) : json(nullptr)},
                     {"issued_at_ms", s.signature.issued_at_ms},
                     {"local_rms", s.local_rms}});
  }
  return {{"samples_per_element", rec.samples_per_element}, {"slots", std::move(slots)}};
}

EmbedRecord embed_record_from_json(const json& j) {
  EmbedRecord rec;
  try {
    rec.samples_per_element = j.at("samples_per_element").get<std::size_t>();
    for (const auto& s : j.at("slots")) {
      SlotRecord r;
      r.slot_index = s.at("slot_index").get<std::size_t>();
      r.time_ms = s.at("time_ms").get<double>();
      r.transmitted = !s.at("gated").get<bool>();
      r.first_sample = s.at("first_sample").get<std::size_t>();
      r.sample_count = s.at("sample_indices").size();
      r.signature.values = s.at("values").get<std::vector<double>>();
      if (!s.at("signature_id").is_null()) r.signature.source_id = s["signature_id"].get<std::string>();
      r.signature.issued_at_ms = s.value("issued_at_ms", 0.0);
      r.local_rms = s.value("local_rms", 0.0);
      rec.slots.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad embed record: ") + e.what());
  }
  return rec;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "captures", ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + (dir / "captures").string());

  const auto names = ds.class_names();
  const std::size_t n_src = ds.n_classes();
  save_signature_set(ds.signatures, dir / "signatures.json");

  std::vector<std::vector<std::size_t>> by_source(n_src);
  for (std::size_t i = 0; i < ds.truth.size(); ++i) by_source.at(ds.truth[i].source).push_back(i);

  json files = json::array();
  for (std::size_t src = 0; src < n_src; ++src) {
    IqStream cat;
    json windows = json::array();
    for (auto i : by_source[src]) {
      const auto& w = ds.windows[i];
      const auto& t = ds.truth[i];
      windows.push_back({{"window_index", t.index},
                         {"source_window", t.source_window},
                         {"label", names.at(w.label)},
                         {"label_index", w.label},
                         {"seed", t.seed},
                         {"origin_ms", w.window.origin_ms},
                         {"first_sample", cat.samples.size()},
                         {"sample_count", w.window.size()},
                         {"channel_shift", t.channel_shift},
                         {"noise_power", t.noise_power},
                         {"embedding", to_json(t.record)}});
      cat.samples.insert(cat.samples.end(), w.window.samples.begin(), w.window.samples.end());
    }
    const fs::path iq = dir / "captures" / capture_name(names, src);
    write_capture(iq, cat, capture_flags(ds.config, src + 1 < n_src));
    json side = {{"source", names[src]},
                 {"channel", to_json(ds.config.channel)},
                 {"schedule", to_json(ds.config.schedule())},
                 {"modulation", to_string(ds.config.modulation)},
                 {"window_samples", ds.config.window_samples()},
                 {"windows", std::move(windows)}};
    write_json(sidecar_path(iq), side);
    files.push_back(fs::path("captures") / capture_name(names, src));
  }

  json manifest = {{"config", to_json(ds.config)},
                   {"config_digest", config_digest(ds.config)},
                   {"classes", names},
                   {"n_windows", ds.windows.size()},
                   {"windows_per_class", ds.config.windows_per_class},
                   {"transmissions_per_window", 1},
                   {"captures", files}};
  write_json(dir / "dataset.json", manifest);
}

Dataset read_dataset(const fs::path& dir) {
  const json manifest = read_json(dir / "dataset.json");
  Dataset ds;
  try {
    ds.config = experiment_from_json(manifest.at("config"));
  } catch (const Error& e) {
    throw Error(ErrorKind::Format, e.what());
  }
  ds.config.output_dir = dir.string();
  ds.signatures = load_signature_set(dir / "signatures.json");
  const auto names = ds.class_names();

  const auto n = manifest.at("n_windows").get<std::size_t>();
  ds.windows.resize(n);
  ds.truth.resize(n);
  std::vector<bool> seen(n, false);

  for (std::size_t src = 0; src < names.size(); ++src) {
    const fs::path iq = dir / "captures" / capture_name(names, src);
    const IqStream cat = read_capture(iq);
    const json side = read_json(sidecar_path(iq));
    try {
      for (const auto& w : side.at("windows")) {
        const auto idx = w.at("window_index").get<std::size_t>();
        const auto first = w.at("first_sample").get<std::size_t>();
        const auto count = w.at("sample_count").get<std::size_t>();
        if (idx >= n || seen[idx] || first + count > cat.size()) {
          throw Error(ErrorKind::Format, "inconsistent sidecar " + sidecar_path(iq).string());
        }
        seen[idx] = true;
        auto& lw = ds.windows[idx];
        lw.window.sample_rate_per_ms = cat.sample_rate_per_ms;
        lw.window.origin_ms = w.at("origin_ms").get<double>();
        lw.window.samples.assign(cat.samples.begin() + static_cast<std::ptrdiff_t>(first),
                                 cat.samples.begin() + static_cast<std::ptrdiff_t>(first + count));
        lw.label = w.at("label_index").get<std::size_t>();
        auto& t = ds.truth[idx];
        t.index = idx;
        t.source = src;
        t.source_window = w.at("source_window").get<std::size_t>();
        t.seed = w.at("seed").get<std::uint64_t>();
        t.channel_shift = w.at("channel_shift").get<int>();
        t.noise_power = w.at("noise_power").get<double>();
        t.record = embed_record_from_json(w.at("embedding"));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Format, sidecar_path(iq).string() + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw Error(ErrorKind::Format, "window " + std::to_string(i) + " missing");
  }
  return ds;
}

}  // namespace veriphy
