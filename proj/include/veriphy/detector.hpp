#pragma once

// Reference signature detector: schedule-aware value extraction, likelihood /
// KS classification against the enrolled mixtures, replay tracking, and
// energy-profile (covertness) analysis.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "veriphy/baseband.hpp"
#include "veriphy/embed.hpp"
#include "veriphy/gmm.hpp"

namespace veriphy {

/// Per-value log density never drops below this, so a single out-of-support
/// value penalizes a class instead of making its score -inf.
inline constexpr double kLogDensityFloor = -50.0;

/// Likelihood: argmax mean log density. MinKs: argmin KS statistic. Both use
/// the same floor / margin / KS rejection rules.
enum class Scoring { Likelihood, MinKs };

const char* to_string(Scoring s) noexcept;
Scoring scoring_from_string(const std::string& s);

struct DetectorConfig {
  std::vector<GaussianMixture> enrolled;
  Scoring scoring = Scoring::Likelihood;
  EmbedSchedule schedule;
  double loglik_floor = 0.0;    // theta, mean log density
  double ks_reject = 0.35;      // tau
  double margin = 0.01;         // best minus second-best score
  std::size_t replay_horizon = 100;
  int quantization = 3;         // decimal places hashed by the replay cache
  int jitter_search = 8;        // alignment search half-width, samples
  double noise_power = 0.0;     // expected complex noise variance per sample
  Modulation payload = Modulation::Qam16;  // host constellation, used by alignment

  void validate() const;
  std::size_t no_signature_index() const noexcept { return enrolled.size(); }
};

enum class VerdictKind { Signature, NoSignature, Unknown };

struct Verdict {
  VerdictKind kind = VerdictKind::NoSignature;
  std::size_t index = 0;  // enrolled index when kind == Signature

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

std::string verdict_label(const Verdict& v, const DetectorConfig& cfg);

struct ClassScore {
  double loglik = 0.0;  // mean log density
  double ks = 1.0;      // one-sample KS statistic
};

struct Classification {
  Verdict verdict;
  std::vector<ClassScore> scores;
  std::size_t best = 0;
};

struct Extraction {
  std::vector<double> values;
  int offset = 0;                // alignment chosen by the search
  double local_rms = 0.0;        // stealth only
  double value_noise_std = 0.0;  // noise std in the value domain
};

/// Reads the first slot of the window. Throws WindowTooShort when the window
/// is shorter than a period or cannot hold the slot at any searched offset.
Extraction extract_values(const IqStream& window, const DetectorConfig& cfg);

/// Values at one fixed alignment; empty result when out of range.
Extraction extract_at(const IqStream& window, const DetectorConfig& cfg, int offset);

/// Log likelihood of the samples around the slot under a given alignment:
/// magnitudes are constant within each element group, samples outside the
/// footprint follow the payload rings, and element values follow the best
/// enrolled mixture. -inf when the slot does not fit.
double alignment_score(const IqStream& window, const DetectorConfig& cfg, int offset);

Classification classify(std::span<const double> values, const DetectorConfig& cfg,
                        double value_noise_std = 0.0);

/// Average log density of values under one mixture (floored per value).
double mean_log_density(std::span<const double> values, const GaussianMixture& gmm,
                        double value_noise_std);

/// sup |F_n - F| of the values against the (noise-convolved) mixture CDF.
double ks_against(std::span<const double> values, const GaussianMixture& gmm,
                  double value_noise_std);

/// FIFO memory of the last `horizon` quantized value vectors.
class ReplayCache {
 public:
  ReplayCache(std::size_t horizon, int quantization);

  /// True iff the vector matches one of the last `horizon` submissions. The
  /// vector is recorded either way.
  bool check_and_insert(std::span<const double> values);
  std::size_t size() const noexcept { return order_.size(); }
  std::size_t horizon() const noexcept { return horizon_; }

  std::uint64_t fingerprint(std::span<const double> values) const;

 private:
  std::size_t horizon_;
  int quantization_;
  std::deque<std::uint64_t> order_;
  std::unordered_map<std::uint64_t, std::size_t> counts_;
};

inline bool check_replay(std::span<const double> values, ReplayCache& state) {
  return state.check_and_insert(values);
}

struct StageLatency {
  double capture_ms = 0.0;         // span of samples the window covers
  double processing_ms = 0.0;      // extraction + alignment
  double classification_ms = 0.0;
  double total_ms = 0.0;
};

struct DetectionReport {
  std::size_t window_id = 0;
  double start_ms = 0.0;
  double end_ms = 0.0;
  Classification classification;
  Extraction extraction;
  bool replay_flag = false;
  StageLatency latency;
};

/// Extraction and classification with wall-clock stage timing; replay state is
/// left to the caller so windows can be classified in parallel.
DetectionReport detect_window(const IqStream& window, const DetectorConfig& cfg,
                              std::size_t window_id);

struct EnergyCdf {
  std::vector<double> probability;  // quantile levels, (i + 0.5) / n_points
  std::vector<double> energy;       // |s|^2 at each level

  /// Fraction of tabulated energies <= e.
  double at(double e) const;
};

EnergyCdf energy_cdf(const IqStream& stream, std::size_t n_points);

std::vector<double> sample_energies(const IqStream& stream);

/// Exact two-sample KS statistic; inputs need not be sorted.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// KS statistic between the per-sample energy distributions of two streams.
double energy_ks(const IqStream& a, const IqStream& b);

}  // namespace veriphy
