#include "veriphy/gmm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "veriphy/error.hpp"

namespace veriphy {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double std_normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_pdf(double x, double mean, double std) noexcept {
  const double z = (x - mean) / std;
  return kInvSqrt2Pi / std * std::exp(-0.5 * z * z);
}

// Gauss-Legendre rule on [-1, 1], computed once by Newton iteration.
constexpr std::size_t kQuadOrder = 48;

struct GaussLegendre {
  std::array<double, kQuadOrder> nodes{};
  std::array<double, kQuadOrder> weights{};

  GaussLegendre() {
    const std::size_t n = kQuadOrder;
    for (std::size_t i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                          (static_cast<double>(n) + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
          p0 = p1;
          p1 = pk;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

const GaussLegendre& gauss_legendre() {
  static const GaussLegendre rule;
  return rule;
}

template <typename F>
double integrate(F&& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  const auto& gl = gauss_legendre();
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double acc = 0.0;
  for (std::size_t i = 0; i < kQuadOrder; ++i) acc += gl.weights[i] * f(mid + half * gl.nodes[i]);
  return acc * half;
}

void validate_range(const AmplitudeRange& r, const char* what) {
  if (!(r.min > 0.0 && r.min < r.max && r.max <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                std::string(what) + " must satisfy 0 < min < max <= 1");
  }
}

struct KsGrid {
  double lo;
  double step;
};

KsGrid ks_grid(const GaussianMixture& a, const GaussianMixture& b) {
  const double sigma = std::max(a.max_std(), b.max_std());
  const double lo = std::min(a.range().min, b.range().min) - kKsGridSigmas * sigma;
  const double hi = std::max(a.range().max, b.range().max) + kKsGridSigmas * sigma;
  return {lo, (hi - lo) / static_cast<double>(kKsGridPoints - 1)};
}

}  // namespace

GaussianMixture::GaussianMixture(std::string id, std::vector<GaussianComponent> components,
                                 AmplitudeRange range, std::size_t max_components)
    : id_(std::move(id)), components_(std::move(components)), range_(range) {
  validate_range(range_, "amplitude_range");
  if (components_.empty()) {
    throw Error(ErrorKind::InvalidArgument, "mixture '" + id_ + "' has no components");
  }
  if (components_.size() > max_components) {
    throw Error(ErrorKind::InvalidArgument, "mixture '" + id_ + "' exceeds max_components");
  }
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0 && c.weight <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "component weight must be in (0, 1]");
    }
    if (!(c.std > 0.0) || !std::isfinite(c.std)) {
      throw Error(ErrorKind::InvalidArgument, "component std must be positive");
    }
    if (!range_.contains(c.mean)) {
      throw Error(ErrorKind::InvalidArgument, "component mean outside amplitude_range");
    }
    total += c.weight;
    max_std_ = std::max(max_std_, c.std);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "mixture weights must sum to 1");
  }
  truncation_.reserve(components_.size());
  for (const auto& c : components_) {
    const double lower = std_normal_cdf((range_.min - c.mean) / c.std);
    const double upper = std_normal_cdf((range_.max - c.mean) / c.std);
    truncation_.push_back({lower, upper - lower});
  }
}

double GaussianMixture::component_cdf(std::size_t k, double x) const noexcept {
  if (x <= range_.min) return 0.0;
  if (x >= range_.max) return 1.0;
  const auto& c = components_[k];
  const auto& t = truncation_[k];
  return std::clamp((std_normal_cdf((x - c.mean) / c.std) - t.lower_cdf) / t.mass, 0.0, 1.0);
}

double GaussianMixture::pdf(double x) const noexcept {
  if (!range_.contains(x)) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    acc += c.weight * normal_pdf(x, c.mean, c.std) / truncation_[k].mass;
  }
  return acc;
}

double GaussianMixture::cdf(double x) const noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) acc += components_[k].weight * component_cdf(k, x);
  return std::clamp(acc, 0.0, 1.0);
}

double GaussianMixture::observed_pdf(double x, double noise_std) const noexcept {
  if (!(noise_std > 0.0)) return pdf(x);
  const double s2 = noise_std * noise_std;
  double acc = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const double v2 = c.std * c.std;
    const double total = v2 + s2;
    // Product of the two Gaussians factors into N(x; mean, v2 + s2) times a
    // Gaussian in the latent amplitude y, which is then integrated over the range.
    const double post_mean = (c.mean * s2 + x * v2) / total;
    const double post_std = std::sqrt(v2 * s2 / total);
    const double inside = std_normal_cdf((range_.max - post_mean) / post_std) -
                          std_normal_cdf((range_.min - post_mean) / post_std);
    acc += c.weight * normal_pdf(x, c.mean, std::sqrt(total)) * inside / truncation_[k].mass;
  }
  return acc;
}

double GaussianMixture::component_observed_cdf(std::size_t k, double x,
                                               double noise_std) const noexcept {
  const auto& c = components_[k];
  const double lo = std::max(range_.min, c.mean - 8.0 * c.std);
  const double hi = std::min(range_.max, c.mean + 8.0 * c.std);
  if (noise_std <= c.std) {
    // Integrate over the noise; the truncated CDF has kinks at the range ends,
    // so split there.
    const double elo = -8.0 * noise_std;
    const double ehi = 8.0 * noise_std;
    std::array<double, 4> cuts{elo, std::clamp(x - range_.max, elo, ehi),
                               std::clamp(x - range_.min, elo, ehi), ehi};
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      acc += integrate(
          [&](double e) { return normal_pdf(e, 0.0, noise_std) * component_cdf(k, x - e); },
          cuts[i], cuts[i + 1]);
    }
    return acc;
  }
  const double acc = integrate(
      [&](double y) {
        return normal_pdf(y, c.mean, c.std) * std_normal_cdf((x - y) / noise_std);
      },
      lo, hi);
  return acc / truncation_[k].mass;
}

double GaussianMixture::observed_cdf(double x, double noise_std) const noexcept {
  if (!(noise_std > 0.0)) return cdf(x);
  double acc = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    acc += components_[k].weight * component_observed_cdf(k, x, noise_std);
  }
  return std::clamp(acc, 0.0, 1.0);
}

double ks_distance(const GaussianMixture& a, const GaussianMixture& b) {
  const auto grid = ks_grid(a, b);
  double sup = 0.0;
  for (std::size_t i = 0; i < kKsGridPoints; ++i) {
    const double x = grid.lo + grid.step * static_cast<double>(i);
    sup = std::max(sup, std::abs(a.cdf(x) - b.cdf(x)));
  }
  return sup;
}

bool ks_distance_exceeds(const GaussianMixture& a, const GaussianMixture& b, double eps) {
  const auto grid = ks_grid(a, b);
  for (std::size_t i = 0; i < kKsGridPoints; ++i) {
    const double x = grid.lo + grid.step * static_cast<double>(i);
    if (std::abs(a.cdf(x) - b.cdf(x)) > eps) return true;
  }
  return false;
}

std::vector<double> sample(const GaussianMixture& gmm, std::size_t n, Rng& rng) {
  const auto comps = gmm.components();
  std::vector<double> cumulative(comps.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < comps.size(); ++k) cumulative[k] = acc += comps[k].weight;
  cumulative.back() = 1.0;

  std::uniform_real_distribution<double> pick(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out;
  out.reserve(n);
  while (out.size() < n) {
    const double u = pick(rng);
    const auto k = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    const auto& c = comps[std::min(k, comps.size() - 1)];
    // Redraw within the chosen component so each component is truncated on
    // its own, matching pdf() and cdf().
    std::size_t retries = 0;
    for (;;) {
      const double v = c.mean + c.std * normal(rng);
      if (gmm.range().contains(v)) {
        out.push_back(v);
        break;
      }
      if (++retries >= kMaxSampleRetries) {
        throw Error(ErrorKind::SamplingFailed,
                    "mixture '" + gmm.id() + "': too many out-of-range draws");
      }
    }
  }
  return out;
}

void GenerationConfig::validate() const {
  if (n_signatures < 1) throw Error(ErrorKind::InvalidArgument, "n_signatures must be >= 1");
  if (!(ks_epsilon > 0.0 && ks_epsilon < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "ks_epsilon must be in (0, 1)");
  }
  if (max_components < 1) throw Error(ErrorKind::InvalidArgument, "max_components must be >= 1");
  validate_range(amplitude_range, "amplitude_range");
  if (!(std_range.min > 0.0 && std_range.min <= std_range.max)) {
    throw Error(ErrorKind::InvalidArgument, "std_range must satisfy 0 < min <= max");
  }
  if (max_attempts < n_signatures) {
    throw Error(ErrorKind::InvalidArgument, "max_attempts must be >= n_signatures");
  }
}

GaussianMixture random_mixture(const GenerationConfig& cfg, std::string id, Rng& rng) {
  std::uniform_int_distribution<std::size_t> count(1, cfg.max_components);
  std::uniform_real_distribution<double> mean(cfg.amplitude_range.min, cfg.amplitude_range.max);
  std::uniform_real_distribution<double> width(cfg.std_range.min, cfg.std_range.max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t k = count(rng);
  std::vector<GaussianComponent> comps(k);
  double total = 0.0;
  for (auto& c : comps) {
    c.mean = mean(rng);
    c.std = cfg.std_range.max > cfg.std_range.min ? width(rng) : cfg.std_range.min;
    c.weight = 1.0 - unit(rng);  // (0, 1]
    total += c.weight;
  }
  for (auto& c : comps) c.weight /= total;
  return GaussianMixture(std::move(id), std::move(comps), cfg.amplitude_range, cfg.max_components);
}

SignatureSet generate_signature_set(const GenerationConfig& cfg) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed);
  SignatureSet set;
  set.config = cfg;
  while (set.signatures.size() < cfg.n_signatures) {
    if (set.attempts >= cfg.max_attempts) {
      throw Error(ErrorKind::AttemptsExhausted,
                  "accepted " + std::to_string(set.signatures.size()) + " of " +
                      std::to_string(cfg.n_signatures) + " signatures in " +
                      std::to_string(cfg.max_attempts) + " attempts");
    }
    ++set.attempts;
    auto candidate =
        random_mixture(cfg, "sig" + std::to_string(set.signatures.size() + 1), rng);
    const bool distinct =
        std::all_of(set.signatures.begin(), set.signatures.end(), [&](const auto& kept) {
          return ks_distance_exceeds(candidate, kept, cfg.ks_epsilon);
        });
    if (distinct) set.signatures.push_back(std::move(candidate));
  }
  return set;
}

}  // namespace veriphy
