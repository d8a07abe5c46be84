#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "veriphy/mirror.hpp"

using namespace veriphy;
using namespace std::chrono_literals;

TEST_SUITE("mirror") {

TEST_CASE("both branches see identical streams") {
  Rng rng = make_rng(1);
  const auto p = generate_payload(7.3, Modulation::Qam16, rng);
  for (std::size_t chunk : {1u, 100u, 2160u, 100000u}) {
    const auto m = mirror(p, chunk);
    CHECK(m[0].samples == p.samples);
    CHECK(m[1].samples == p.samples);
    CHECK(stream_checksum(m[0].samples) == stream_checksum(m[1].samples));
  }
}

TEST_CASE("mirror of an empty stream") {
  const auto m = mirror(IqStream{});
  CHECK(m[0].empty());
  CHECK(m[1].empty());
}

TEST_CASE("a slow branch does not hold back a fast one") {
  Rng rng = make_rng(2);
  const auto p = generate_payload(20.0, Modulation::Qpsk, rng);
  IqTee tee(2);
  std::vector<Sample> fast;
  std::atomic<bool> fast_done{false};
  std::atomic<bool> slow_started{false};
  std::vector<Sample> slow;

  std::jthread fast_consumer([&] {
    fast = tee.branch(1).drain();
    fast_done = true;
  });
  std::jthread slow_consumer([&] {
    slow_started = true;
    std::this_thread::sleep_for(200ms);  // a stalled monitor tap
    while (auto c = tee.branch(0).next()) {
      slow.insert(slow.end(), (*c)->begin(), (*c)->end());
      std::this_thread::sleep_for(1ms);
    }
  });

  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < p.size(); i += 2160) {
    tee.push(std::span<const Sample>(p.samples).subspan(i, 2160));
  }
  tee.close();
  const auto push_time = std::chrono::steady_clock::now() - t0;
  while (!fast_done) std::this_thread::sleep_for(1ms);
  const auto fast_time = std::chrono::steady_clock::now() - t0;

  CHECK(push_time < 150ms);
  CHECK(fast_time < 150ms);
  fast_consumer.join();
  slow_consumer.join();
  CHECK(fast == p.samples);
  CHECK(slow == p.samples);
}

TEST_CASE("chunks are shared read-only") {
  IqTee tee(3);
  const std::vector<Sample> data{{1, 2}, {3, 4}};
  tee.push(data);
  tee.close();
  auto a = tee.branch(0).next();
  auto b = tee.branch(1).next();
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->get() == b->get());
  CHECK(**a == data);
  CHECK_FALSE(tee.branch(0).next().has_value());
  CHECK(tee.branch(2).drain() == data);
}

TEST_CASE("checksum distinguishes streams") {
  std::vector<Sample> a{{1, 0}, {0, 1}};
  std::vector<Sample> b{{0, 1}, {1, 0}};
  CHECK(stream_checksum(a) != stream_checksum(b));
  CHECK(stream_checksum(a) == stream_checksum(a));
}

}  // TEST_SUITE
