#include "veriphy/embed.hpp"

#include <cmath>
#include <random>

#include "veriphy/error.hpp"

namespace veriphy {

void StealthConfig::validate() const {
  if (!(strength > 0.0 && strength <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "stealth strength must be in (0, 1]");
  }
  if (rms_window < 16) throw Error(ErrorKind::InvalidArgument, "rms_window must be >= 16");
}

std::size_t EmbedSchedule::period_samples(std::uint32_t sample_rate_per_ms) const {
  return static_cast<std::size_t>(std::llround(period_ms * sample_rate_per_ms));
}

void EmbedSchedule::validate(std::uint32_t sample_rate_per_ms) const {
  if (!(period_ms > 0.0)) throw Error(ErrorKind::InvalidArgument, "period_ms must be > 0");
  if (n_el < 1) throw Error(ErrorKind::InvalidArgument, "n_el must be >= 1");
  if (samples_per_element < 1) {
    throw Error(ErrorKind::InvalidArgument, "samples_per_element must be >= 1");
  }
  if (!(gating_prob >= 0.0 && gating_prob <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "gating_prob must be in [0, 1]");
  }
  const std::size_t period = period_samples(sample_rate_per_ms);
  if (footprint() > period) {
    throw Error(ErrorKind::ScheduleTooDense,
                std::to_string(footprint()) + " signature samples exceed the " +
                    std::to_string(period) + "-sample period");
  }
  if (start_offset_samples >= period) {
    throw Error(ErrorKind::InvalidArgument, "start_offset_samples must lie inside the period");
  }
  if (stealth) {
    stealth->validate();
    if (start_offset_samples < stealth->rms_window) {
      throw Error(ErrorKind::InvalidArgument,
                  "stealth needs start_offset_samples >= rms_window for a full causal window");
    }
  }
}

std::size_t EmbedRecord::transmitted_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : slots) n += s.transmitted ? 1 : 0;
  return n;
}

std::size_t EmbedRecord::modified_sample_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : slots) n += s.transmitted ? s.sample_count : 0;
  return n;
}

std::vector<std::size_t> EmbedRecord::sample_indices(const SlotRecord& slot) const {
  std::vector<std::size_t> idx(slot.sample_count);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = slot.first_sample + i;
  return idx;
}

double causal_rms(std::span<const Sample> samples, std::size_t position, std::size_t window) {
  position = std::min(position, samples.size());
  const std::size_t begin = position > window ? position - window : 0;
  if (position == begin) return 0.0;
  double acc = 0.0;
  for (std::size_t i = begin; i < position; ++i) acc += std::norm(samples[i]);
  return std::sqrt(acc / static_cast<double>(position - begin));
}

double stealth_map(double value, double local_rms, const StealthConfig& cfg,
                   const AmplitudeRange& range) {
  return local_rms * (1.0 + cfg.strength * (value - range.midrange()));
}

double stealth_unmap(double observed, double local_rms, const StealthConfig& cfg,
                     const AmplitudeRange& range) {
  return range.midrange() + (observed / local_rms - 1.0) / cfg.strength;
}

EmbedResult embed(const IqStream& stream, const GaussianMixture& gmm, const EmbedSchedule& sched,
                  Rng& rng) {
  sched.validate(stream.sample_rate_per_ms);
  const std::size_t period = sched.period_samples(stream.sample_rate_per_ms);
  const std::size_t footprint = sched.footprint();
  if (stream.size() < sched.start_offset_samples + footprint) {
    throw Error(ErrorKind::StreamTooShort, "stream holds no complete signature slot");
  }

  EmbedResult out{stream, {}};
  out.record.samples_per_element = sched.samples_per_element;
  auto& samples = out.stream.samples;
  std::bernoulli_distribution gate(sched.gating_prob);

  for (std::size_t slot = 0;; ++slot) {
    const std::size_t first = slot * period + sched.start_offset_samples;
    if (first + footprint > samples.size()) break;

    SlotRecord rec;
    rec.slot_index = slot;
    rec.first_sample = first;
    rec.sample_count = footprint;
    rec.time_ms = stream.origin_ms +
                  static_cast<double>(first) / static_cast<double>(stream.sample_rate_per_ms);
    rec.transmitted = gate(rng);
    if (rec.transmitted) {
      rec.signature = {sample(gmm, sched.n_el, rng), gmm.id(), rec.time_ms};
      if (sched.stealth) rec.local_rms = causal_rms(samples, first, sched.stealth->rms_window);
      for (std::size_t e = 0; e < sched.n_el; ++e) {
        const double v = rec.signature.values[e];
        const double magnitude =
            sched.stealth ? stealth_map(v, rec.local_rms, *sched.stealth, gmm.range()) : v;
        for (std::size_t c = 0; c < sched.samples_per_element; ++c) {
          auto& s = samples[first + e * sched.samples_per_element + c];
          const double mag = std::abs(s);
          s = mag > 0.0 ? s * (magnitude / mag) : Sample{magnitude, 0.0};
        }
      }
    }
    out.record.slots.push_back(std::move(rec));
  }
  return out;
}

}  // namespace veriphy
