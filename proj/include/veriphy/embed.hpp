#pragma once

// Steganographic embedding of sampled signatures into an I/Q stream.
//
// Every period_ms a slot opens at start_offset_samples into the period. With
// probability gating_prob the slot carries a freshly sampled signature: each
// of its n_el values overwrites the magnitude of samples_per_element
// consecutive samples, keeping their phase. All other samples are untouched.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veriphy/baseband.hpp"
#include "veriphy/gmm.hpp"
#include "veriphy/random.hpp"

namespace veriphy {

struct StealthConfig {
  double strength = 1.0;          // beta in (0, 1]
  std::size_t rms_window = 256;   // causal window length, >= 16

  void validate() const;
};

struct EmbedSchedule {
  double period_ms = 1.0;
  std::size_t n_el = 50;
  std::size_t start_offset_samples = 512;
  std::size_t samples_per_element = 3;
  double gating_prob = 0.75;
  std::optional<StealthConfig> stealth;
  std::uint64_t seed = 0;

  std::size_t period_samples(std::uint32_t sample_rate_per_ms) const;
  std::size_t footprint() const noexcept { return n_el * samples_per_element; }
  /// Throws ScheduleTooDense when a slot cannot fit inside one period.
  void validate(std::uint32_t sample_rate_per_ms = kSampleRatePerMs) const;
};

struct Signature {
  std::vector<double> values;
  std::string source_id;
  double issued_at_ms = 0.0;
};

struct SlotRecord {
  std::size_t slot_index = 0;
  double time_ms = 0.0;
  bool transmitted = false;
  std::size_t first_sample = 0;
  std::size_t sample_count = 0;  // footprint in samples
  Signature signature;           // empty values when gated off
  double local_rms = 0.0;        // stealth only
};

struct EmbedRecord {
  std::size_t samples_per_element = 1;
  std::vector<SlotRecord> slots;

  std::size_t transmitted_count() const noexcept;
  std::size_t modified_sample_count() const noexcept;
  std::vector<std::size_t> sample_indices(const SlotRecord& slot) const;
};

struct EmbedResult {
  IqStream stream;
  EmbedRecord record;
};

/// Throws StreamTooShort when not even one slot fits in the stream.
EmbedResult embed(const IqStream& stream, const GaussianMixture& gmm, const EmbedSchedule& sched,
                  Rng& rng);

/// RMS of the `window` samples strictly before `position` (fewer near the
/// start). Returns 0 when nothing precedes.
double causal_rms(std::span<const Sample> samples, std::size_t position, std::size_t window);

/// local_rms * (1 + strength * (value - midrange))
double stealth_map(double value, double local_rms, const StealthConfig& cfg,
                   const AmplitudeRange& range);
double stealth_unmap(double observed, double local_rms, const StealthConfig& cfg,
                     const AmplitudeRange& range);

}  // namespace veriphy
