#pragma once

// I/Q mirroring: one producer, several independent consumers. Every branch
// sees every chunk in order; a slow branch never holds back the producer or
// the other branches, and chunks are shared read-only.

#include <array>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "veriphy/baseband.hpp"

namespace veriphy {

class IqTee {
 public:
  using Chunk = std::shared_ptr<const std::vector<Sample>>;

  class Branch {
   public:
    /// Blocks until a chunk arrives; nullopt once the tee is closed and drained.
    std::optional<Chunk> next();
    /// Everything remaining, until close().
    std::vector<Sample> drain();

   private:
    friend class IqTee;
    void deliver(Chunk chunk);
    void finish();

    std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<Chunk> queue_;
    bool closed_ = false;
  };

  explicit IqTee(std::size_t branches = 2);
  IqTee(const IqTee&) = delete;
  IqTee& operator=(const IqTee&) = delete;

  std::size_t branch_count() const noexcept { return branches_.size(); }
  Branch& branch(std::size_t i) { return *branches_.at(i); }

  void push(std::span<const Sample> samples);
  void close();

 private:
  std::vector<std::unique_ptr<Branch>> branches_;
  bool closed_ = false;
};

/// Pushes the whole stream through a two-branch tee in `chunk`-sample pieces
/// and returns what each branch received.
std::array<IqStream, 2> mirror(const IqStream& stream, std::size_t chunk = kSampleRatePerMs);

/// FNV-1a over the raw sample bytes.
std::uint64_t stream_checksum(std::span<const Sample> samples) noexcept;

}  // namespace veriphy
