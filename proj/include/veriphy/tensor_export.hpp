#pragma once

// Export of labeled windows as a dense (N, 60, 36, 2) float32 tensor.
//
// Every 1 ms of samples (2160) becomes one example. Element [n][g][s][c] is
// component c (0 = I, 1 = Q) of sample 36*g + s of that millisecond. Longer
// windows yield consecutive examples that share a group id.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "veriphy/metrics.hpp"

namespace veriphy {

inline constexpr std::size_t kTensorGroups = 60;
inline constexpr std::size_t kTensorGroupSamples = 36;
inline constexpr std::size_t kTensorExampleSamples = kTensorGroups * kTensorGroupSamples;
static_assert(kTensorExampleSamples == kSampleRatePerMs);

struct TensorExport {
  std::filesystem::path tensor_path;    // tensors.f32
  std::filesystem::path labels_path;    // labels.i32
  std::filesystem::path manifest_path;  // manifest.json
  std::array<std::size_t, 4> shape{0, kTensorGroups, kTensorGroupSamples, 2};
  std::size_t group_size = 1;           // examples per source window
  std::size_t tensor_bytes = 0;
};

/// Flat offset of [n][g][s][c].
constexpr std::size_t tensor_offset(std::size_t n, std::size_t g, std::size_t s,
                                    std::size_t c) noexcept {
  return ((n * kTensorGroups + g) * kTensorGroupSamples + s) * 2 + c;
}

/// Throws ShapeMismatch unless every window has the same length, a positive
/// multiple of 2160 samples.
TensorExport export_tensors(std::span<const LabeledWindow> windows,
                            const std::vector<std::string>& class_names,
                            const std::filesystem::path& out_dir,
                            const nlohmann::json& extra_metadata = nlohmann::json::object());

struct TensorData {
  std::array<std::size_t, 4> shape{};
  std::vector<float> values;
  std::vector<std::int32_t> labels;
  nlohmann::json manifest;
};

TensorData read_tensors(const std::filesystem::path& dir);

}  // namespace veriphy
