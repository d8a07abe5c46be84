#pragma once

// Helpers shared by the test suites. Oracles here are written independently of
// the library code they check.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing {

inline constexpr double kPi = 3.14159265358979323846;

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

struct Comp {
  double w, mu, sd;
};

/// Mixture of Gaussians truncated to [lo, hi], evaluated from first principles.
inline double truncated_cdf(const std::vector<Comp>& comps, double lo, double hi, double x) {
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  double acc = 0.0;
  for (const auto& c : comps) {
    const double a = normal_cdf((lo - c.mu) / c.sd);
    const double b = normal_cdf((hi - c.mu) / c.sd);
    acc += c.w * (normal_cdf((x - c.mu) / c.sd) - a) / (b - a);
  }
  return acc;
}

inline double truncated_pdf(const std::vector<Comp>& comps, double lo, double hi, double x) {
  if (x < lo || x > hi) return 0.0;
  double acc = 0.0;
  for (const auto& c : comps) {
    const double mass = normal_cdf((hi - c.mu) / c.sd) - normal_cdf((lo - c.mu) / c.sd);
    acc += c.w * normal_pdf((x - c.mu) / c.sd) / c.sd / mass;
  }
  return acc;
}

/// Independent truncated sampler (its own RNG type and selection logic). Each
/// component is truncated separately.
inline std::vector<double> truncated_draws(const std::vector<Comp>& comps, double lo, double hi,
                                           std::size_t n, unsigned seed) {
  std::minstd_rand rng(seed);
  std::vector<double> weights;
  for (const auto& c : comps) weights.push_back(c.w);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<double> out;
  out.reserve(n);
  while (out.size() < n) {
    const auto& c = comps[pick(rng)];
    double v;
    do {
      v = std::normal_distribution<double>(c.mu, c.sd)(rng);
    } while (v < lo || v > hi);
    out.push_back(v);
  }
  return out;
}

/// Two-sample KS by evaluating both empirical CDFs at every pooled point.
inline double brute_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> pts = a;
  pts.insert(pts.end(), b.begin(), b.end());
  std::sort(pts.begin(), pts.end());
  double d = 0.0;
  for (double x : pts) {
    const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / a.size();
    const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / b.size();
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("veriphy_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
