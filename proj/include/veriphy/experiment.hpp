#pragma once

// Experiment configuration shared by the dataset generator, the evaluation
// runner and the CLI.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "veriphy/baseband.hpp"
#include "veriphy/detector.hpp"
#include "veriphy/embed.hpp"
#include "veriphy/gmm.hpp"

namespace veriphy {

struct PresetSpec {
  int id;
  std::size_t n_el;
  double period_ms;
};

/// The five evaluation configurations: signature size and send interval.
inline constexpr std::array<PresetSpec, 5> kPresets{{
    {1, 10, 1.0},
    {2, 20, 1.0},
    {3, 50, 1.0},
    {4, 20, 20.0},
    {5, 50, 20.0},
}};

const PresetSpec& preset(int id);

struct ExperimentConfig {
  int preset = 3;  // 1..5, or 0 for custom n_el/period_ms
  std::size_t n_signatures = 5;
  std::size_t n_el = 50;
  double period_ms = 1.0;
  bool stealth = false;
  ChannelConfig channel{20.0, 0.0, 0, 0};
  std::size_t windows_per_class = 100;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  unsigned threads = 0;

  Modulation modulation = Modulation::Qam16;
  GenerationConfig generation{};  // n_signatures and seed are taken from above
  double gating_prob = 0.75;
  std::size_t samples_per_element = 3;
  std::size_t start_offset_samples = 512;
  StealthConfig stealth_config{};

  Scoring scoring = Scoring::Likelihood;
  double loglik_floor = 0.0;
  double ks_reject = 0.35;
  double margin = 0.01;
  std::size_t replay_horizon = 100;
  int quantization = 3;

  /// Copies n_el and period_ms from the preset unless preset == 0.
  void apply_preset();
  void validate() const;

  double window_ms() const noexcept { return period_ms; }
  std::size_t window_samples() const noexcept;
  EmbedSchedule schedule() const;
  GenerationConfig generation_config() const;
  std::string preset_name() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const ChannelConfig& cfg);
nlohmann::json to_json(const EmbedSchedule& s);

/// Keys absent from j keep the value in `base`.
ExperimentConfig experiment_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ChannelConfig channel_from_json(const nlohmann::json& j, ChannelConfig base = {});
EmbedSchedule schedule_from_json(const nlohmann::json& j, EmbedSchedule base = {});

DetectorConfig detector_config_for(const ExperimentConfig& cfg, const SignatureSet& sigs);

/// Stable hex digest of everything that affects the emitted results.
std::string config_digest(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace veriphy
