#include "veriphy/baseband.hpp"

#include <array>
#include <cmath>
#include <numeric>

#include "veriphy/error.hpp"

namespace veriphy {

const char* to_string(Modulation m) noexcept {
  return m == Modulation::Qpsk ? "QPSK" : "16QAM";
}

Modulation modulation_from_string(const std::string& s) {
  if (s == "QPSK" || s == "qpsk") return Modulation::Qpsk;
  if (s == "16QAM" || s == "16qam" || s == "qam16") return Modulation::Qam16;
  throw Error(ErrorKind::InvalidArgument, "unknown modulation '" + s + "'");
}

IqStream generate_payload(double duration_ms, Modulation mod, Rng& rng,
                          std::uint32_t sample_rate_per_ms) {
  if (!(duration_ms > 0.0)) throw Error(ErrorKind::InvalidArgument, "duration_ms must be > 0");
  const auto n = static_cast<std::size_t>(std::llround(duration_ms * sample_rate_per_ms));

  IqStream out;
  out.sample_rate_per_ms = sample_rate_per_ms;
  out.samples.resize(n);
  if (mod == Modulation::Qpsk) {
    const double a = 1.0 / std::sqrt(2.0);
    std::uniform_int_distribution<int> bits(0, 3);
    for (auto& s : out.samples) {
      const int b = bits(rng);
      s = {(b & 1) ? a : -a, (b & 2) ? a : -a};
    }
  } else {
    // Gray-free square 16QAM; levels {-3,-1,1,3}/sqrt(10) give unit mean power.
    const double norm = 1.0 / std::sqrt(10.0);
    constexpr std::array<double, 4> levels{-3.0, -1.0, 1.0, 3.0};
    std::uniform_int_distribution<int> nibble(0, 15);
    for (auto& s : out.samples) {
      const int b = nibble(rng);
      s = {levels[b & 3] * norm, levels[(b >> 2) & 3] * norm};
    }
  }
  return out;
}

void ChannelConfig::validate() const {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw Error(ErrorKind::InvalidArgument, "snr_db must be finite or +inf");
  }
  if (timing_jitter_samples < 0) {
    throw Error(ErrorKind::InvalidArgument, "timing_jitter_samples must be >= 0");
  }
}

double mean_power(const IqStream& s) noexcept {
  if (s.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& v : s.samples) acc += std::norm(v);
  return acc / static_cast<double>(s.size());
}

double noise_power_for_snr(double snr_db, double signal_power) noexcept {
  if (snr_db == std::numeric_limits<double>::infinity()) return 0.0;
  return signal_power / std::pow(10.0, snr_db / 10.0);
}

ChannelOutput transmit(const IqStream& in, const ChannelConfig& cfg, Rng& rng) {
  cfg.validate();
  if (in.empty()) throw Error(ErrorKind::InvalidArgument, "stream is empty");

  ChannelOutput out;
  out.stream.sample_rate_per_ms = in.sample_rate_per_ms;
  out.stream.origin_ms = in.origin_ms;

  const std::size_t n = in.size();
  std::vector<Sample> rotated = in.samples;
  if (cfg.phase_offset_rad != 0.0) {
    const Sample rot = std::polar(1.0, cfg.phase_offset_rad);
    for (auto& s : rotated) s *= rot;
  }

  if (cfg.timing_jitter_samples > 0) {
    std::uniform_int_distribution<int> jitter(-cfg.timing_jitter_samples, cfg.timing_jitter_samples);
    out.shift_samples = jitter(rng);
  }
  if (out.shift_samples == 0) {
    out.stream.samples = std::move(rotated);
  } else {
    out.stream.samples.assign(n, Sample{0.0, 0.0});
    const auto d = static_cast<std::ptrdiff_t>(out.shift_samples);
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      const std::ptrdiff_t src = i - d;
      if (src >= 0 && src < static_cast<std::ptrdiff_t>(n)) out.stream.samples[i] = rotated[src];
    }
  }

  if (!cfg.noiseless()) {
    out.noise_power = noise_power_for_snr(cfg.snr_db, mean_power(in));
    std::normal_distribution<double> noise(0.0, std::sqrt(out.noise_power / 2.0));
    for (auto& s : out.stream.samples) s += Sample{noise(rng), noise(rng)};
  }
  return out;
}

}  // namespace veriphy
