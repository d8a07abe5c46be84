#include "veriphy/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "veriphy/error.hpp"

namespace veriphy {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

double best_mean_log_density(std::span<const double> values, const DetectorConfig& cfg,
                             double noise_std) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& g : cfg.enrolled) best = std::max(best, mean_log_density(values, g, noise_std));
  return best;
}

// Per-sample magnitude noise; floored so a noiseless channel still ranks offsets.
double magnitude_sigma(const DetectorConfig& cfg) {
  return std::max(std::sqrt(cfg.noise_power / 2.0), 1e-3);
}

double log_normal_pdf(double x, double sigma) {
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  return -0.5 * (x / sigma) * (x / sigma) - std::log(sigma) - kLogSqrt2Pi;
}

// Magnitude density of a unit-power payload symbol plus noise.
double payload_log_density(double magnitude, Modulation mod, double sigma) {
  if (mod == Modulation::Qpsk) return std::max(log_normal_pdf(magnitude - 1.0, sigma), kLogDensityFloor);
  static const double rings[3] = {std::sqrt(0.2), 1.0, std::sqrt(1.8)};
  static const double weights[3] = {0.25, 0.5, 0.25};
  double p = 0.0;
  for (int r = 0; r < 3; ++r) p += weights[r] * std::exp(log_normal_pdf(magnitude - rings[r], sigma));
  return p > 0.0 ? std::max(std::log(p), kLogDensityFloor) : kLogDensityFloor;
}

}  // namespace

void DetectorConfig::validate() const {
  if (enrolled.empty()) throw Error(ErrorKind::InvalidArgument, "no enrolled signatures");
  if (!std::isfinite(loglik_floor) || !std::isfinite(ks_reject) || !std::isfinite(margin)) {
    throw Error(ErrorKind::InvalidArgument, "detector thresholds must be finite");
  }
  if (replay_horizon < 1) throw Error(ErrorKind::InvalidArgument, "replay_horizon must be >= 1");
  if (quantization < 0 || quantization > 12) {
    throw Error(ErrorKind::InvalidArgument, "quantization must be in [0, 12]");
  }
  if (jitter_search < 0) throw Error(ErrorKind::InvalidArgument, "jitter_search must be >= 0");
  if (!(noise_power >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise_power must be >= 0");
  schedule.validate();
}

const char* to_string(Scoring s) noexcept {
  return s == Scoring::MinKs ? "min_ks" : "likelihood";
}

Scoring scoring_from_string(const std::string& s) {
  if (s == "likelihood") return Scoring::Likelihood;
  if (s == "min_ks") return Scoring::MinKs;
  throw Error(ErrorKind::InvalidArgument, "unknown scoring '" + s + "'");
}

std::string verdict_label(const Verdict& v, const DetectorConfig& cfg) {
  switch (v.kind) {
    case VerdictKind::Signature: return cfg.enrolled.at(v.index).id();
    case VerdictKind::NoSignature: return "none";
    case VerdictKind::Unknown: return "unknown";
  }
  return "unknown";
}

Extraction extract_at(const IqStream& window, const DetectorConfig& cfg, int offset) {
  const auto& sched = cfg.schedule;
  Extraction ex;
  ex.offset = offset;
  const auto start = static_cast<std::ptrdiff_t>(sched.start_offset_samples) + offset;
  if (start < 0 || static_cast<std::size_t>(start) + sched.footprint() > window.size()) return ex;

  const auto first = static_cast<std::size_t>(start);
  const std::size_t k = sched.samples_per_element;
  ex.values.resize(sched.n_el);
  for (std::size_t e = 0; e < sched.n_el; ++e) {
    double acc = 0.0;
    for (std::size_t c = 0; c < k; ++c) acc += std::abs(window.samples[first + e * k + c]);
    ex.values[e] = acc / static_cast<double>(k);
  }

  ex.value_noise_std = std::sqrt(cfg.noise_power / 2.0 / static_cast<double>(k));
  if (sched.stealth) {
    const double rx_rms = causal_rms(window.samples, first, sched.stealth->rms_window);
    // The received window power includes the channel noise; remove it.
    ex.local_rms = std::sqrt(std::max(rx_rms * rx_rms - cfg.noise_power, 1e-12));
    const auto& range = cfg.enrolled.front().range();
    for (auto& v : ex.values) v = stealth_unmap(v, ex.local_rms, *sched.stealth, range);
    ex.value_noise_std /= sched.stealth->strength * ex.local_rms;
  }
  return ex;
}

double alignment_score(const IqStream& window, const DetectorConfig& cfg, int offset) {
  const auto ex = extract_at(window, cfg, offset);
  if (ex.values.empty()) return -std::numeric_limits<double>::infinity();
  const auto& sched = cfg.schedule;
  const std::size_t k = sched.samples_per_element;
  const double sigma = magnitude_sigma(cfg);
  const auto nominal = static_cast<std::ptrdiff_t>(sched.start_offset_samples);
  const auto first = nominal + offset;
  const auto last = first + static_cast<std::ptrdiff_t>(sched.footprint());
  const auto n = static_cast<std::ptrdiff_t>(window.size());

  double score = 0.0;
  // Group consistency on raw magnitudes (valid with or without stealth mapping).
  for (std::size_t e = 0; e < sched.n_el; ++e) {
    const auto base = static_cast<std::size_t>(first) + e * k;
    double mean = 0.0;
    for (std::size_t c = 0; c < k; ++c) mean += std::abs(window.samples[base + c]);
    mean /= static_cast<double>(k);
    for (std::size_t c = 0; c < k; ++c) {
      score += log_normal_pdf(std::abs(window.samples[base + c]) - mean, sigma);
    }
  }
  // Every searched position not covered by this footprint is scored as payload.
  const auto span = static_cast<std::ptrdiff_t>(cfg.jitter_search);
  for (auto i = std::max<std::ptrdiff_t>(nominal - span, 0);
       i < std::min(nominal + static_cast<std::ptrdiff_t>(sched.footprint()) + span, n); ++i) {
    if (i < first || i >= last) {
      score += payload_log_density(std::abs(window.samples[static_cast<std::size_t>(i)]), cfg.payload, sigma);
    }
  }
  return score + static_cast<double>(sched.n_el) * best_mean_log_density(ex.values, cfg, ex.value_noise_std);
}

Extraction extract_values(const IqStream& window, const DetectorConfig& cfg) {
  if (window.size() < cfg.schedule.period_samples(window.sample_rate_per_ms)) {
    throw Error(ErrorKind::WindowTooShort, "window shorter than one schedule period");
  }
  Extraction best;
  double best_score = -std::numeric_limits<double>::infinity();
  bool found = false;
  // 0, -1, +1, -2, +2, ... so ties resolve toward the nominal position.
  for (int step = 0; step <= 2 * cfg.jitter_search; ++step) {
    const int offset = (step % 2 == 0) ? step / 2 : -(step + 1) / 2;
    auto ex = extract_at(window, cfg, offset);
    if (ex.values.empty()) continue;
    if (cfg.jitter_search == 0) return ex;
    const double score = alignment_score(window, cfg, offset);
    if (!found || score > best_score) {
      best = std::move(ex);
      best_score = score;
      found = true;
    }
  }
  if (!found) throw Error(ErrorKind::WindowTooShort, "signature slot does not fit in window");
  return best;
}

double mean_log_density(std::span<const double> values, const GaussianMixture& gmm,
                        double value_noise_std) {
  if (values.empty()) return kLogDensityFloor;
  double acc = 0.0;
  for (double v : values) {
    const double d = gmm.observed_pdf(v, value_noise_std);
    acc += d > 0.0 ? std::max(std::log(d), kLogDensityFloor) : kLogDensityFloor;
  }
  return acc / static_cast<double>(values.size());
}

double ks_against(std::span<const double> values, const GaussianMixture& gmm,
                  double value_noise_std) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = gmm.observed_cdf(sorted[i], value_noise_std);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

Classification classify(std::span<const double> values, const DetectorConfig& cfg,
                        double value_noise_std) {
  if (cfg.enrolled.empty()) throw Error(ErrorKind::InvalidArgument, "no enrolled signatures");
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "no values to classify");

  Classification out;
  out.scores.resize(cfg.enrolled.size());
  for (std::size_t k = 0; k < cfg.enrolled.size(); ++k) {
    out.scores[k].loglik = mean_log_density(values, cfg.enrolled[k], value_noise_std);
    out.scores[k].ks = ks_against(values, cfg.enrolled[k], value_noise_std);
  }

  // Larger is better for both scorings.
  const bool by_ks = cfg.scoring == Scoring::MinKs;
  auto score = [&](std::size_t k) { return by_ks ? -out.scores[k].ks : out.scores[k].loglik; };
  for (std::size_t k = 1; k < out.scores.size(); ++k) {
    if (score(k) > score(out.best)) out.best = k;
  }
  double second = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.scores.size(); ++k) {
    if (k != out.best) second = std::max(second, score(k));
  }

  const auto& top = out.scores[out.best];
  if (top.loglik < cfg.loglik_floor) {
    out.verdict = {VerdictKind::NoSignature, 0};
  } else if (score(out.best) - second >= cfg.margin && top.ks <= cfg.ks_reject) {
    out.verdict = {VerdictKind::Signature, out.best};
  } else {
    out.verdict = {VerdictKind::Unknown, 0};
  }
  return out;
}

ReplayCache::ReplayCache(std::size_t horizon, int quantization)
    : horizon_(horizon), quantization_(quantization) {
  if (horizon_ < 1) throw Error(ErrorKind::InvalidArgument, "replay horizon must be >= 1");
}

std::uint64_t ReplayCache::fingerprint(std::span<const double> values) const {
  const double scale = std::pow(10.0, quantization_);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (double v : values) {
    const auto q = static_cast<std::uint64_t>(std::llround(v * scale));
    for (int b = 0; b < 8; ++b) {
      h ^= (q >> (8 * b)) & 0xFFu;
      h *= 0x100000001b3ULL;
    }
  }
  return h ^ values.size();
}

bool ReplayCache::check_and_insert(std::span<const double> values) {
  const std::uint64_t h = fingerprint(values);
  auto& count = counts_[h];
  const bool seen = count > 0;
  ++count;
  order_.push_back(h);
  if (order_.size() > horizon_) {
    const std::uint64_t old = order_.front();
    order_.pop_front();
    if (auto it = counts_.find(old); it != counts_.end() && --it->second == 0) counts_.erase(it);
  }
  return seen;
}

DetectionReport detect_window(const IqStream& window, const DetectorConfig& cfg,
                              std::size_t window_id) {
  DetectionReport rep;
  rep.window_id = window_id;
  rep.start_ms = window.origin_ms;
  rep.end_ms = window.origin_ms + window.duration_ms();
  rep.latency.capture_ms = window.duration_ms();

  const auto t0 = Clock::now();
  rep.extraction = extract_values(window, cfg);
  rep.latency.processing_ms = elapsed_ms(t0);

  const auto t1 = Clock::now();
  rep.classification = classify(rep.extraction.values, cfg, rep.extraction.value_noise_std);
  rep.latency.classification_ms = elapsed_ms(t1);

  rep.latency.total_ms =
      rep.latency.capture_ms + rep.latency.processing_ms + rep.latency.classification_ms;
  return rep;
}

std::vector<double> sample_energies(const IqStream& stream) {
  std::vector<double> e(stream.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::norm(stream.samples[i]);
  return e;
}

EnergyCdf energy_cdf(const IqStream& stream, std::size_t n_points) {
  if (stream.empty()) throw Error(ErrorKind::InvalidArgument, "stream is empty");
  if (n_points < 1) throw Error(ErrorKind::InvalidArgument, "n_points must be >= 1");
  auto e = sample_energies(stream);
  std::sort(e.begin(), e.end());
  EnergyCdf out;
  out.probability.resize(n_points);
  out.energy.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n_points);
    const auto idx = std::min(e.size() - 1, static_cast<std::size_t>(p * static_cast<double>(e.size())));
    out.probability[i] = p;
    out.energy[i] = e[idx];
  }
  return out;
}

double EnergyCdf::at(double e) const {
  if (energy.empty()) return 0.0;
  const auto it = std::upper_bound(energy.begin(), energy.end(), e);
  return static_cast<double>(it - energy.begin()) / static_cast<double>(energy.size());
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::InvalidArgument, "empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    const double x = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double energy_ks(const IqStream& a, const IqStream& b) {
  return ks_two_sample(sample_energies(a), sample_energies(b));
}

}  // namespace veriphy
