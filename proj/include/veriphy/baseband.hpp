#pragma once

// Synthetic uplink payload and a simple impairment channel.

#include <complex>
#include <string>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "veriphy/random.hpp"

namespace veriphy {

using Sample = std::complex<double>;

/// 60 samples per group x 36 groups. The 40 MHz RF bandwidth of the reference
/// setup is kept as metadata only.
inline constexpr std::uint32_t kSampleRatePerMs = 2160;
inline constexpr double kReferenceBandwidthMHz = 40.0;

struct IqStream {
  std::vector<Sample> samples;
  std::uint32_t sample_rate_per_ms = kSampleRatePerMs;
  double origin_ms = 0.0;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_ms() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_per_ms);
  }
};

enum class Modulation { Qpsk, Qam16 };

const char* to_string(Modulation m) noexcept;
Modulation modulation_from_string(const std::string& s);

/// One unit-average-power constellation symbol per sample.
IqStream generate_payload(double duration_ms, Modulation mod, Rng& rng,
                          std::uint32_t sample_rate_per_ms = kSampleRatePerMs);

struct ChannelConfig {
  /// +infinity disables noise.
  double snr_db = std::numeric_limits<double>::infinity();
  double phase_offset_rad = 0.0;
  int timing_jitter_samples = 0;
  std::uint64_t seed = 0;

  bool noiseless() const noexcept { return snr_db == std::numeric_limits<double>::infinity(); }
  void validate() const;
};

struct ChannelOutput {
  IqStream stream;
  int shift_samples = 0;   // applied delay, positive = later
  double noise_power = 0;  // complex variance per sample
};

/// Rotation, integer delay (zero-filled), then AWGN sized from the mean
/// power of the rotated input.
ChannelOutput transmit(const IqStream& in, const ChannelConfig& cfg, Rng& rng);

inline IqStream apply_channel(const IqStream& in, const ChannelConfig& cfg, Rng& rng) {
  return transmit(in, cfg, rng).stream;
}

double mean_power(const IqStream& s) noexcept;

/// Complex noise variance that a unit-power payload sees at snr_db.
double noise_power_for_snr(double snr_db, double signal_power = 1.0) noexcept;

}  // namespace veriphy
