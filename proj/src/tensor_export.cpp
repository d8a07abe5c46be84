#include "veriphy/tensor_export.hpp"

#include <bit>
#include <iterator>
#include <cstring>
#include <fstream>

#include "veriphy/error.hpp"

namespace veriphy {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[maybe_unused]] constexpr std::uint32_t swap32(std::uint32_t v) noexcept {
  return (v >> 24) | ((v >> 8) & 0xFF00u) | ((v << 8) & 0xFF0000u) | (v << 24);
}

template <typename T>
void put_le(std::vector<char>& buf, T v) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  if constexpr (std::endian::native == std::endian::big) bits = swap32(bits);
  char b[4];
  std::memcpy(b, &bits, 4);
  buf.insert(buf.end(), b, b + 4);
}

template <typename T>
std::vector<T> get_le(const std::vector<char>& buf) {
  std::vector<T> out(buf.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, buf.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = swap32(bits);
    std::memcpy(&out[i], &bits, 4);
  }
  return out;
}

void write_bytes(const fs::path& path, const std::vector<char>& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TensorExport export_tensors(std::span<const LabeledWindow> windows,
                            const std::vector<std::string>& class_names, const fs::path& out_dir,
                            const json& extra_metadata) {
  if (windows.empty()) throw Error(ErrorKind::EmptyDataset, "no windows to export");
  const std::size_t len = windows.front().window.size();
  if (len == 0 || len % kTensorExampleSamples != 0) {
    throw Error(ErrorKind::ShapeMismatch,
                "window of " + std::to_string(len) + " samples is not a multiple of 2160");
  }
  for (const auto& w : windows) {
    if (w.window.size() != len) throw Error(ErrorKind::ShapeMismatch, "windows differ in length");
    if (w.window.sample_rate_per_ms != kSampleRatePerMs) {
      throw Error(ErrorKind::ShapeMismatch, "sample rate is not 2160 per ms");
    }
    if (w.label >= class_names.size()) throw Error(ErrorKind::InvalidArgument, "label out of range");
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + out_dir.string());

  TensorExport ex;
  ex.group_size = len / kTensorExampleSamples;
  ex.shape[0] = windows.size() * ex.group_size;
  ex.tensor_path = out_dir / "tensors.f32";
  ex.labels_path = out_dir / "labels.i32";
  ex.manifest_path = out_dir / "manifest.json";

  // Row-major [n][g][s][c] is exactly the interleaved sample order.
  std::vector<char> tensor;
  tensor.reserve(windows.size() * len * 8);
  std::vector<char> labels;
  labels.reserve(ex.shape[0] * 4);
  for (const auto& w : windows) {
    for (const auto& s : w.window.samples) {
      put_le(tensor, static_cast<float>(s.real()));
      put_le(tensor, static_cast<float>(s.imag()));
    }
    for (std::size_t k = 0; k < ex.group_size; ++k) put_le(labels, static_cast<std::int32_t>(w.label));
  }
  ex.tensor_bytes = tensor.size();
  write_bytes(ex.tensor_path, tensor);
  write_bytes(ex.labels_path, labels);

  json manifest = {
      {"shape", ex.shape},
      {"dtype", "float32"},
      {"byte_order", "little"},
      {"layout", "[n][group][sample][iq], sample index = 36*group + sample"},
      {"tensor_file", ex.tensor_path.filename().string()},
      {"labels_file", ex.labels_path.filename().string()},
      {"labels_dtype", "int32"},
      {"class_names", class_names},
      {"group_size", ex.group_size},
      {"n_groups", windows.size()},
      {"group_of_example", "example_index / group_size"},
      {"transmissions_per_group", 1},
      {"sample_rate_per_ms", kSampleRatePerMs},
      {"reference_bandwidth_mhz", kReferenceBandwidthMHz},
  };
  for (const auto& [k, v] : extra_metadata.items()) manifest[k] = v;
  std::ofstream out(ex.manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + ex.manifest_path.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed: " + ex.manifest_path.string());
  return ex;
}

TensorData read_tensors(const fs::path& dir) {
  TensorData td;
  {
    std::ifstream in(dir / "manifest.json", std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + (dir / "manifest.json").string());
    try {
      td.manifest = json::parse(in);
      td.shape = td.manifest.at("shape").get<std::array<std::size_t, 4>>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Format, std::string("bad tensor manifest: ") + e.what());
    }
  }
  const auto raw = read_bytes(dir / td.manifest.value("tensor_file", "tensors.f32"));
  const auto raw_labels = read_bytes(dir / td.manifest.value("labels_file", "labels.i32"));
  const std::size_t expected = td.shape[0] * td.shape[1] * td.shape[2] * td.shape[3];
  if (raw.size() != expected * 4 || raw_labels.size() != td.shape[0] * 4) {
    throw Error(ErrorKind::Format, "tensor files do not match the manifest shape");
  }
  td.values = get_le<float>(raw);
  td.labels = get_le<std::int32_t>(raw_labels);
  return td;
}

}  // namespace veriphy
