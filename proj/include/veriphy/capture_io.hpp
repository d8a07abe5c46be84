#pragma once

// Binary I/Q capture files.
//
//   offset  size  field
//   0       4     magic "VPHY"
//   4       2     format version (u16, currently 1)
//   6       2     flags (u16, CaptureFlags)
//   8       4     sample rate, samples per ms (u32)
//   12      8     sample count (u64)
//   20      ...   interleaved float32 I0,Q0,I1,Q1,...
//
// All fields little-endian. Ground truth lives in a `<name>.meta.json` sidecar.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "veriphy/baseband.hpp"

namespace veriphy {

inline constexpr std::uint16_t kCaptureVersion = 1;
inline constexpr std::size_t kCaptureHeaderBytes = 20;

enum CaptureFlags : std::uint16_t {
  kCaptureEmbedded = 1u << 0,
  kCaptureStealth = 1u << 1,
  kCaptureChannel = 1u << 2,
};

struct CaptureHeader {
  std::uint16_t version = kCaptureVersion;
  std::uint16_t flags = 0;
  std::uint32_t sample_rate_per_ms = kSampleRatePerMs;
  std::uint64_t sample_count = 0;
};

void write_capture(std::ostream& out, const IqStream& stream, std::uint16_t flags = 0);
void write_capture(const std::filesystem::path& path, const IqStream& stream,
                   std::uint16_t flags = 0);

CaptureHeader read_capture_header(std::istream& in);
IqStream read_capture(std::istream& in, CaptureHeader* header = nullptr);
IqStream read_capture(const std::filesystem::path& path, CaptureHeader* header = nullptr);

/// `dir/name.iq` -> `dir/name.meta.json`
std::filesystem::path sidecar_path(const std::filesystem::path& capture);

}  // namespace veriphy
