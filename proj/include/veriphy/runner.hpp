#pragma once

// Evaluation and covertness runs plus their report files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "veriphy/dataset.hpp"
#include "veriphy/detector.hpp"
#include "veriphy/experiment.hpp"
#include "veriphy/metrics.hpp"

namespace veriphy {

struct EvalRun {
  std::string config_name;
  std::string digest;
  Evaluation evaluation;
  std::vector<std::string> class_names;
  /// Energy quantile table per class (pooled over that class's windows).
  std::vector<EnergyCdf> energy_cdfs;
  std::size_t mirror_mismatches = 0;  // branch A checksum differed from the source
};

inline constexpr std::size_t kEnergyCdfPoints = 200;

/// Every window goes through a two-branch tee: branch A is checksummed as a
/// monitor tap, branch B feeds the detector.
EvalRun run_eval(const Dataset& ds, const DetectorConfig& detector_cfg);
inline EvalRun run_eval(const Dataset& ds) {
  return run_eval(ds, detector_config_for(ds.config, ds.signatures));
}

/// metrics.json with an added "config_name" key.
nlohmann::json eval_json(const EvalRun& run);
std::string energy_cdf_csv(const EvalRun& run);

/// metrics.json, confusion.csv and energy_cdf.csv under dir.
void write_eval_outputs(const EvalRun& run, const std::filesystem::path& dir);

/// Accuracy/F1 table, one row per run, followed by the mean stage latencies.
std::string summary_table(const std::vector<EvalRun>& runs);

/// Drops the wall-clock keys so runs can be compared byte for byte.
nlohmann::json without_latency(nlohmann::json metrics);

struct CovertnessTrial {
  std::uint64_t seed = 0;
  std::string signature_id;
  std::size_t transmitted_slots = 0;
  double ks_stealth = 0.0;  // energy KS, stealth-embedded vs baseline
  double ks_normal = 0.0;   // energy KS, normal-embedded vs baseline
};

struct CovertnessReport {
  std::vector<CovertnessTrial> trials;
  EnergyCdf baseline, normal, stealth;  // first trial, for plotting
  double max_ks_stealth = 0.0;
  bool stealth_always_lower = true;
};

/// For each seed: one payload of duration_ms, embedded twice with the same
/// RNG stream (identical gating and values, stealth mapping on or off), both
/// compared against the untouched payload.
CovertnessReport run_covertness(const ExperimentConfig& cfg, const SignatureSet& sigs,
                                std::size_t n_seeds, double duration_ms);

std::string covertness_csv(const CovertnessReport& rep);
std::string covertness_cdf_csv(const CovertnessReport& rep);

}  // namespace veriphy
