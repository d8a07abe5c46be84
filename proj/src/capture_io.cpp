#include "veriphy/capture_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "veriphy/error.hpp"

namespace veriphy {
namespace {

constexpr std::array<char, 4> kMagic{'V', 'P', 'H', 'Y'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFFu);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error(ErrorKind::Format, "truncated capture header");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

void put_f32(std::ostream& out, double value) {
  put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

}  // namespace

void write_capture(std::ostream& out, const IqStream& stream, std::uint16_t flags) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(out, kCaptureVersion);
  put_le<std::uint16_t>(out, flags);
  put_le<std::uint32_t>(out, stream.sample_rate_per_ms);
  put_le<std::uint64_t>(out, stream.size());
  for (const auto& s : stream.samples) {
    put_f32(out, s.real());
    put_f32(out, s.imag());
  }
  if (!out) throw Error(ErrorKind::Io, "capture write failed");
}

void write_capture(const std::filesystem::path& path, const IqStream& stream,
                   std::uint16_t flags) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write_capture(out, stream, flags);
}

CaptureHeader read_capture_header(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error(ErrorKind::Format, "not a VPHY capture");
  CaptureHeader h;
  h.version = get_le<std::uint16_t>(in);
  if (h.version != kCaptureVersion) {
    throw Error(ErrorKind::Format, "unsupported capture version " + std::to_string(h.version));
  }
  h.flags = get_le<std::uint16_t>(in);
  h.sample_rate_per_ms = get_le<std::uint32_t>(in);
  h.sample_count = get_le<std::uint64_t>(in);
  return h;
}

IqStream read_capture(std::istream& in, CaptureHeader* header) {
  const CaptureHeader h = read_capture_header(in);
  if (header) *header = h;
  IqStream out;
  out.sample_rate_per_ms = h.sample_rate_per_ms;
  out.samples.resize(h.sample_count);
  std::vector<unsigned char> body(h.sample_count * 8);
  in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (static_cast<std::size_t>(in.gcount()) != body.size()) {
    throw Error(ErrorKind::Format, "capture body shorter than header sample_count");
  }
  auto f32_at = [&](std::size_t off) {
    std::uint32_t bits = 0;
    for (std::size_t i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(body[off + i]) << (8 * i);
    return static_cast<double>(std::bit_cast<float>(bits));
  };
  for (std::size_t i = 0; i < h.sample_count; ++i) {
    out.samples[i] = {f32_at(8 * i), f32_at(8 * i + 4)};
  }
  return out;
}

IqStream read_capture(const std::filesystem::path& path, CaptureHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  return read_capture(in, header);
}

std::filesystem::path sidecar_path(const std::filesystem::path& capture) {
  auto p = capture;
  p.replace_extension(".meta.json");
  return p;
}

}  // namespace veriphy
