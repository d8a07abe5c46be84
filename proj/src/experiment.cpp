#include "veriphy/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "veriphy/error.hpp"
#include "veriphy/signature_io.hpp"

namespace veriphy {

using nlohmann::json;

const PresetSpec& preset(int id) {
  for (const auto& p : kPresets) {
    if (p.id == id) return p;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown preset " + std::to_string(id));
}

void ExperimentConfig::apply_preset() {
  if (preset == 0) return;
  const auto& p = veriphy::preset(preset);
  n_el = p.n_el;
  period_ms = p.period_ms;
}

void ExperimentConfig::validate() const {
  if (preset != 0) (void)veriphy::preset(preset);
  if (n_signatures < 1) throw Error(ErrorKind::InvalidArgument, "n_signatures must be >= 1");
  if (windows_per_class < 1) {
    throw Error(ErrorKind::InvalidArgument, "windows_per_class must be >= 1");
  }
  channel.validate();
  generation_config().validate();
  schedule().validate();
  if (start_offset_samples + samples_per_element * n_el > window_samples()) {
    throw Error(ErrorKind::ScheduleTooDense, "signature slot does not fit in the window");
  }
}

std::size_t ExperimentConfig::window_samples() const noexcept {
  return static_cast<std::size_t>(std::llround(window_ms() * kSampleRatePerMs));
}

EmbedSchedule ExperimentConfig::schedule() const {
  EmbedSchedule s;
  s.period_ms = period_ms;
  s.n_el = n_el;
  s.start_offset_samples = start_offset_samples;
  s.samples_per_element = samples_per_element;
  s.gating_prob = gating_prob;
  if (stealth) s.stealth = stealth_config;
  s.seed = seed;
  return s;
}

GenerationConfig ExperimentConfig::generation_config() const {
  GenerationConfig g = generation;
  g.n_signatures = n_signatures;
  g.seed = seed;
  return g;
}

std::string ExperimentConfig::preset_name() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s n_el=%zu t=%gms%s", preset ? ("preset" + std::to_string(preset)).c_str() : "custom",
                n_el, period_ms, stealth ? " stealth" : "");
  return buf;
}

json to_json(const ChannelConfig& c) {
  json snr = c.noiseless() ? json("inf") : json(c.snr_db);
  return {{"snr_db", snr},
          {"phase_offset_rad", c.phase_offset_rad},
          {"timing_jitter_samples", c.timing_jitter_samples},
          {"seed", c.seed}};
}

json to_json(const EmbedSchedule& s) {
  json j = {{"period_ms", s.period_ms},
            {"n_el", s.n_el},
            {"start_offset_samples", s.start_offset_samples},
            {"samples_per_element", s.samples_per_element},
            {"gating_prob", s.gating_prob},
            {"seed", s.seed}};
  if (s.stealth) {
    j["stealth"] = {{"strength", s.stealth->strength}, {"rms_window", s.stealth->rms_window}};
  } else {
    j["stealth"] = nullptr;
  }
  return j;
}

json to_json(const ExperimentConfig& c) {
  return {{"preset", c.preset},
          {"n_signatures", c.n_signatures},
          {"n_el", c.n_el},
          {"period_ms", c.period_ms},
          {"stealth", c.stealth},
          {"channel", to_json(c.channel)},
          {"windows_per_class", c.windows_per_class},
          {"seed", c.seed},
          {"modulation", to_string(c.modulation)},
          {"generation", to_json(c.generation_config())},
          {"gating_prob", c.gating_prob},
          {"samples_per_element", c.samples_per_element},
          {"start_offset_samples", c.start_offset_samples},
          {"stealth_config",
           {{"strength", c.stealth_config.strength}, {"rms_window", c.stealth_config.rms_window}}},
          {"detector",
           {{"scoring", to_string(c.scoring)},
            {"loglik_floor", c.loglik_floor},
            {"ks_reject", c.ks_reject},
            {"margin", c.margin},
            {"replay_horizon", c.replay_horizon},
            {"quantization", c.quantization}}}};
}

ChannelConfig channel_from_json(const json& j, ChannelConfig c) {
  if (j.contains("snr_db")) {
    const auto& v = j["snr_db"];
    if (v.is_string() && (v == "inf" || v == "+inf")) {
      c.snr_db = std::numeric_limits<double>::infinity();
    } else {
      c.snr_db = v.get<double>();
    }
  }
  if (j.contains("phase_offset_rad")) c.phase_offset_rad = j["phase_offset_rad"].get<double>();
  if (j.contains("timing_jitter_samples")) {
    c.timing_jitter_samples = j["timing_jitter_samples"].get<int>();
  }
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  return c;
}

EmbedSchedule schedule_from_json(const json& j, EmbedSchedule s) {
  if (j.contains("period_ms")) s.period_ms = j["period_ms"].get<double>();
  if (j.contains("n_el")) s.n_el = j["n_el"].get<std::size_t>();
  if (j.contains("start_offset_samples")) {
    s.start_offset_samples = j["start_offset_samples"].get<std::size_t>();
  }
  if (j.contains("samples_per_element")) {
    s.samples_per_element = j["samples_per_element"].get<std::size_t>();
  }
  if (j.contains("gating_prob")) s.gating_prob = j["gating_prob"].get<double>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("stealth")) {
    if (j["stealth"].is_null()) {
      s.stealth.reset();
    } else {
      StealthConfig st;
      st.strength = j["stealth"].value("strength", st.strength);
      st.rms_window = j["stealth"].value("rms_window", st.rms_window);
      s.stealth = st;
    }
  }
  return s;
}

ExperimentConfig experiment_from_json(const json& j, ExperimentConfig c) {
  try {
    if (j.contains("preset")) {
      const auto& p = j["preset"];
      c.preset = (p.is_string() && p == "custom") ? 0 : p.get<int>();
    }
    if (j.contains("n_signatures")) c.n_signatures = j["n_signatures"].get<std::size_t>();
    if (j.contains("n_el")) c.n_el = j["n_el"].get<std::size_t>();
    if (j.contains("period_ms")) c.period_ms = j["period_ms"].get<double>();
    if (j.contains("stealth")) c.stealth = j["stealth"].get<bool>();
    if (j.contains("channel")) c.channel = channel_from_json(j["channel"], c.channel);
    if (j.contains("windows_per_class")) {
      c.windows_per_class = j["windows_per_class"].get<std::size_t>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
    if (j.contains("modulation")) {
      c.modulation = modulation_from_string(j["modulation"].get<std::string>());
    }
    if (j.contains("generation")) c.generation = generation_config_from_json(j["generation"], c.generation);
    if (j.contains("gating_prob")) c.gating_prob = j["gating_prob"].get<double>();
    if (j.contains("samples_per_element")) {
      c.samples_per_element = j["samples_per_element"].get<std::size_t>();
    }
    if (j.contains("start_offset_samples")) {
      c.start_offset_samples = j["start_offset_samples"].get<std::size_t>();
    }
    if (j.contains("stealth_config")) {
      const auto& s = j["stealth_config"];
      c.stealth_config.strength = s.value("strength", c.stealth_config.strength);
      c.stealth_config.rms_window = s.value("rms_window", c.stealth_config.rms_window);
    }
    if (j.contains("detector")) {
      const auto& d = j["detector"];
      if (d.contains("scoring")) c.scoring = scoring_from_string(d["scoring"].get<std::string>());
      c.loglik_floor = d.value("loglik_floor", c.loglik_floor);
      c.ks_reject = d.value("ks_reject", c.ks_reject);
      c.margin = d.value("margin", c.margin);
      c.replay_horizon = d.value("replay_horizon", c.replay_horizon);
      c.quantization = d.value("quantization", c.quantization);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("bad experiment config: ") + e.what());
  }
  return c;
}

DetectorConfig detector_config_for(const ExperimentConfig& cfg, const SignatureSet& sigs) {
  DetectorConfig d;
  d.enrolled = sigs.signatures;
  d.schedule = cfg.schedule();
  d.scoring = cfg.scoring;
  d.loglik_floor = cfg.loglik_floor;
  d.ks_reject = cfg.ks_reject;
  d.margin = cfg.margin;
  d.replay_horizon = cfg.replay_horizon;
  d.quantization = cfg.quantization;
  d.jitter_search = cfg.channel.timing_jitter_samples;
  d.payload = cfg.modulation;
  // Unit-power payload; the receiver is assumed to know its link SNR.
  d.noise_power = noise_power_for_snr(cfg.channel.snr_db, 1.0);
  return d;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_digest(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

}  // namespace veriphy
