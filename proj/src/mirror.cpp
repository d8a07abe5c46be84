#include "veriphy/mirror.hpp"

#include <algorithm>
#include <bit>

#include "veriphy/error.hpp"

namespace veriphy {

std::optional<IqTee::Chunk> IqTee::Branch::next() {
  std::unique_lock lock(mutex_);
  ready_.wait(lock, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  Chunk c = std::move(queue_.front());
  queue_.pop_front();
  return c;
}

std::vector<Sample> IqTee::Branch::drain() {
  std::vector<Sample> out;
  while (auto c = next()) out.insert(out.end(), (*c)->begin(), (*c)->end());
  return out;
}

void IqTee::Branch::deliver(Chunk chunk) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(chunk));
  }
  ready_.notify_one();
}

void IqTee::Branch::finish() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_.notify_all();
}

IqTee::IqTee(std::size_t branches) {
  if (branches < 1) throw Error(ErrorKind::InvalidArgument, "tee needs at least one branch");
  branches_.reserve(branches);
  for (std::size_t i = 0; i < branches; ++i) branches_.push_back(std::make_unique<Branch>());
}

void IqTee::push(std::span<const Sample> samples) {
  if (closed_) throw Error(ErrorKind::InvalidArgument, "push after close");
  if (samples.empty()) return;
  auto chunk = std::make_shared<const std::vector<Sample>>(samples.begin(), samples.end());
  for (auto& b : branches_) b->deliver(chunk);
}

void IqTee::close() {
  closed_ = true;
  for (auto& b : branches_) b->finish();
}

std::array<IqStream, 2> mirror(const IqStream& stream, std::size_t chunk) {
  chunk = std::max<std::size_t>(chunk, 1);
  IqTee tee(2);
  for (std::size_t i = 0; i < stream.size(); i += chunk) {
    const auto n = std::min(chunk, stream.size() - i);
    tee.push(std::span<const Sample>(stream.samples).subspan(i, n));
  }
  tee.close();
  std::array<IqStream, 2> out;
  for (std::size_t b = 0; b < 2; ++b) {
    out[b].sample_rate_per_ms = stream.sample_rate_per_ms;
    out[b].origin_ms = stream.origin_ms;
    out[b].samples = tee.branch(b).drain();
  }
  return out;
}

std::uint64_t stream_checksum(std::span<const Sample> samples) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& s : samples) {
    for (double part : {s.real(), s.imag()}) {
      const auto bits = std::bit_cast<std::uint64_t>(part);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xFFu;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace veriphy
