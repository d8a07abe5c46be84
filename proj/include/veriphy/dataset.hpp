#pragma once

// Labeled window synthesis and the on-disk dataset layout:
//
//   <dir>/signatures.json          enrolled signature set
//   <dir>/dataset.json             experiment config, class names, window order
//   <dir>/captures/<class>.iq      all windows of one source, concatenated
//   <dir>/captures/<class>.meta.json  per-window ground truth

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "veriphy/embed.hpp"
#include "veriphy/experiment.hpp"
#include "veriphy/gmm.hpp"
#include "veriphy/metrics.hpp"

namespace veriphy {

struct WindowTruth {
  std::size_t index = 0;           // position in the dataset (stream order)
  std::size_t source = 0;          // enrolled index, or n_signatures for the payload-only source
  std::size_t source_window = 0;   // ordinal among this source's windows
  std::uint64_t seed = 0;
  int channel_shift = 0;
  double noise_power = 0.0;
  EmbedRecord record;
};

struct Dataset {
  ExperimentConfig config;
  SignatureSet signatures;
  std::vector<LabeledWindow> windows;
  std::vector<WindowTruth> truth;

  std::size_t n_classes() const noexcept { return signatures.signatures.size() + 1; }
  std::vector<std::string> class_names() const;
  std::vector<std::size_t> labels() const;
};

/// Seed of the RNG stream behind one window.
std::uint64_t window_seed(std::uint64_t seed, std::size_t source, std::size_t source_window) noexcept;

struct SynthesizedWindow {
  LabeledWindow window;
  WindowTruth truth;
};

/// One window: payload, embedding (sources below n_signatures only), channel.
SynthesizedWindow synthesize_window(const ExperimentConfig& cfg, const SignatureSet& sigs,
                                    std::size_t source, std::size_t source_window);

/// windows_per_class windows for every source, interleaved by source so the
/// stream order mixes classes. Independent of cfg.threads.
Dataset synthesize_dataset(const ExperimentConfig& cfg, const SignatureSet& sigs);

nlohmann::json to_json(const EmbedRecord& rec);
EmbedRecord embed_record_from_json(const nlohmann::json& j);

void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace veriphy
