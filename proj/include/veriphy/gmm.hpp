#pragma once

// Gaussian mixture signature distributions.
//
// A mixture lives on a normalized amplitude range [m_min, m_max]. Each
// component is truncated to that range, so pdf/cdf describe exactly the
// distribution that sample() draws from.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "veriphy/random.hpp"

namespace veriphy {

struct AmplitudeRange {
  double min = 0.5;
  double max = 1.0;

  double midrange() const noexcept { return 0.5 * (min + max); }
  double width() const noexcept { return max - min; }
  bool contains(double x) const noexcept { return x >= min && x <= max; }
};

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.75;
  double std = 0.02;
};

class GaussianMixture {
 public:
  /// Weights must sum to 1 within 1e-9; std > 0; means inside the range.
  GaussianMixture(std::string id, std::vector<GaussianComponent> components,
                  AmplitudeRange range = {},
                  std::size_t max_components = std::numeric_limits<std::size_t>::max());

  const std::string& id() const noexcept { return id_; }
  std::span<const GaussianComponent> components() const noexcept { return components_; }
  const AmplitudeRange& range() const noexcept { return range_; }
  double max_std() const noexcept { return max_std_; }

  double pdf(double x) const noexcept;
  double cdf(double x) const noexcept;

  /// Density and CDF of (X + E) with X from this mixture and E ~ N(0, noise_std^2).
  /// noise_std == 0 reduces to pdf()/cdf().
  double observed_pdf(double x, double noise_std) const noexcept;
  double observed_cdf(double x, double noise_std) const noexcept;

 private:
  struct Truncation {
    double lower_cdf;  // Phi((m_min - mean) / std)
    double mass;       // Phi((m_max - mean) / std) - lower_cdf
  };

  double component_cdf(std::size_t k, double x) const noexcept;
  double component_observed_cdf(std::size_t k, double x, double noise_std) const noexcept;

  std::string id_;
  std::vector<GaussianComponent> components_;
  std::vector<Truncation> truncation_;
  AmplitudeRange range_;
  double max_std_ = 0.0;
};

inline double pdf(const GaussianMixture& gmm, double x) noexcept { return gmm.pdf(x); }
inline double cdf(const GaussianMixture& gmm, double x) noexcept { return gmm.cdf(x); }

inline constexpr std::size_t kKsGridPoints = 10001;
inline constexpr double kKsGridSigmas = 6.0;

/// sup |cdf_a - cdf_b| over kKsGridPoints uniform points spanning the union of
/// both ranges widened by kKsGridSigmas times the largest component std.
double ks_distance(const GaussianMixture& a, const GaussianMixture& b);

/// Same grid as ks_distance; returns as soon as some grid point exceeds eps.
bool ks_distance_exceeds(const GaussianMixture& a, const GaussianMixture& b, double eps);

inline constexpr std::size_t kMaxSampleRetries = 1000;

/// n draws; out-of-range draws are rejected and redrawn. Throws
/// ErrorKind::SamplingFailed after kMaxSampleRetries consecutive rejections.
std::vector<double> sample(const GaussianMixture& gmm, std::size_t n, Rng& rng);

struct GenerationConfig {
  std::size_t n_signatures = 5;
  double ks_epsilon = 0.2;
  std::size_t max_components = 5;
  AmplitudeRange amplitude_range{};
  AmplitudeRange std_range{0.01, 0.05};
  std::size_t max_attempts = 10000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SignatureSet {
  std::vector<GaussianMixture> signatures;
  GenerationConfig config;
  std::size_t attempts = 0;
};

/// Rejection sampling of random mixtures: a candidate is kept only if its KS
/// distance to every mixture kept so far exceeds ks_epsilon. Throws
/// ErrorKind::AttemptsExhausted when max_attempts candidates run out first.
SignatureSet generate_signature_set(const GenerationConfig& cfg);

/// One random candidate mixture (component count, means, stds, weights).
GaussianMixture random_mixture(const GenerationConfig& cfg, std::string id, Rng& rng);

}  // namespace veriphy
