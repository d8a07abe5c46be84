#include <doctest.h>

#include <cmath>
#include <set>

#include "support.hpp"
#include "veriphy/embed.hpp"
#include "veriphy/error.hpp"

using namespace veriphy;

namespace {

const GaussianMixture& source() {
  static const GaussianMixture g("s", {{0.4, 0.62, 0.02}, {0.6, 0.86, 0.03}});
  return g;
}

EmbedSchedule schedule(std::size_t k = 1, double q = 1.0) {
  EmbedSchedule s;
  s.n_el = 50;
  s.period_ms = 1.0;
  s.samples_per_element = k;
  s.gating_prob = q;
  return s;
}

IqStream payload(double ms, Modulation m, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return generate_payload(ms, m, rng);
}

}  // namespace

TEST_SUITE("embed") {

TEST_CASE("ten slots on a ten millisecond stream") {
  const auto p = payload(10.0, Modulation::Qam16, 1);
  Rng rng = make_rng(2);
  const auto r = embed(p, source(), schedule(1), rng);
  CHECK(r.record.slots.size() == 10);
  CHECK(r.record.transmitted_count() == 10);
  CHECK(r.record.modified_sample_count() == 500);

  std::size_t changed = 0;
  for (std::size_t i = 0; i < p.size(); ++i) changed += r.stream.samples[i] != p.samples[i];
  CHECK(changed == 500);

  Rng rng3 = make_rng(2);
  CHECK(embed(p, source(), schedule(3), rng3).record.modified_sample_count() == 1500);
}

TEST_CASE("fully gated schedule leaves the stream identical") {
  const auto p = payload(10.0, Modulation::Qam16, 3);
  Rng rng = make_rng(4);
  const auto r = embed(p, source(), schedule(3, 0.0), rng);
  CHECK(r.stream.samples == p.samples);
  CHECK(r.record.slots.size() == 10);
  CHECK(r.record.transmitted_count() == 0);
  for (const auto& s : r.record.slots) CHECK(s.signature.values.empty());
}

TEST_CASE("gating frequency follows the probability") {
  const auto p = payload(2000.0, Modulation::Qpsk, 5);
  Rng rng = make_rng(6);
  const auto r = embed(p, source(), schedule(1, 0.75), rng);
  const double rate = static_cast<double>(r.record.transmitted_count()) / r.record.slots.size();
  CHECK(rate == doctest::Approx(0.75).epsilon(0.05));
}

TEST_CASE("magnitudes at recorded indices equal the signature values") {
  const auto p = payload(10.0, Modulation::Qam16, 7);
  for (std::size_t k : {1u, 3u}) {
    Rng rng = make_rng(8);
    const auto r = embed(p, source(), schedule(k), rng);
    for (const auto& slot : r.record.slots) {
      const auto idx = r.record.sample_indices(slot);
      REQUIRE(idx.size() == 50 * k);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        REQUIRE(std::abs(std::abs(r.stream.samples[idx[j]]) - slot.signature.values[j / k]) <= 1e-6);
      }
    }
  }
}

TEST_CASE("non-target samples are bit-identical and phase is preserved") {
  const auto p = payload(10.0, Modulation::Qam16, 9);
  for (bool stealth : {false, true}) {
    auto sched = schedule(3, 0.75);
    if (stealth) sched.stealth = StealthConfig{};
    Rng rng = make_rng(10);
    const auto r = embed(p, source(), sched, rng);
    std::set<std::size_t> touched;
    for (const auto& slot : r.record.slots) {
      if (!slot.transmitted) continue;
      for (auto i : r.record.sample_indices(slot)) touched.insert(i);
    }
    CHECK(touched.size() == r.record.modified_sample_count());
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (touched.count(i)) {
        REQUIRE(std::abs(std::arg(r.stream.samples[i]) - std::arg(p.samples[i])) <= 1e-9);
      } else {
        REQUIRE(r.stream.samples[i] == p.samples[i]);
      }
    }
  }
}

TEST_CASE("slot placement and timing") {
  auto p = payload(5.0, Modulation::Qpsk, 11);
  p.origin_ms = 100.0;
  auto sched = schedule(3);
  sched.start_offset_samples = 700;
  Rng rng = make_rng(12);
  const auto r = embed(p, source(), sched, rng);
  REQUIRE(r.record.slots.size() == 5);
  for (std::size_t j = 0; j < 5; ++j) {
    const auto& s = r.record.slots[j];
    CHECK(s.slot_index == j);
    CHECK(s.first_sample == j * 2160 + 700);
    CHECK(s.time_ms == doctest::Approx(100.0 + (j * 2160 + 700) / 2160.0));
    CHECK(s.signature.issued_at_ms == s.time_ms);
    CHECK(s.signature.source_id == "s");
    CHECK(s.signature.values.size() == 50);
  }
}

TEST_CASE("signatures are fresh across consecutive transmissions") {
  const auto p = payload(100.0, Modulation::Qam16, 13);
  Rng rng = make_rng(14);
  const auto r = embed(p, source(), schedule(1), rng);
  std::set<std::vector<double>> seen;
  for (const auto& s : r.record.slots) seen.insert(s.signature.values);
  CHECK(seen.size() == 100);
}

TEST_CASE("embedding is deterministic per seed") {
  const auto p = payload(10.0, Modulation::Qam16, 15);
  Rng a = make_rng(16), b = make_rng(16);
  CHECK(embed(p, source(), schedule(3, 0.75), a).stream.samples ==
        embed(p, source(), schedule(3, 0.75), b).stream.samples);
}

TEST_CASE("schedule errors") {
  const auto p = payload(1.0, Modulation::Qam16, 17);
  Rng rng = make_rng(18);
  auto dense = schedule(1);
  dense.n_el = 2161;
  try {
    embed(p, source(), dense, rng);
    FAIL("expected ScheduleTooDense");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ScheduleTooDense);
  }
  auto k3 = schedule(3);
  k3.n_el = 721;
  CHECK_THROWS_AS(k3.validate(), Error);

  auto late = schedule(1);
  late.start_offset_samples = 2150;
  try {
    embed(p, source(), late, rng);
    FAIL("expected StreamTooShort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StreamTooShort);
  }

  auto bad = schedule(1);
  bad.gating_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = schedule(1);
  bad.stealth = StealthConfig{0.0, 256};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.stealth = StealthConfig{0.5, 8};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.stealth = StealthConfig{0.5, 256};
  bad.start_offset_samples = 100;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("stealth map formula") {
  const AmplitudeRange r{0.5, 1.0};
  StealthConfig cfg{0.15, 256};
  CHECK(stealth_map(0.75, 1.3, cfg, r) == 1.3);
  CHECK(stealth_map(1.0, 1.0, cfg, r) == doctest::Approx(1.0375).epsilon(1e-12));
  CHECK(stealth_unmap(1.3, 1.3, cfg, r) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("stealth unmap inverts the map") {
  const AmplitudeRange r{0.5, 1.0};
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> v(0.5, 1.0);
  for (double beta : {0.15, 0.5, 1.0}) {
    StealthConfig cfg{beta, 256};
    for (int i = 0; i < 10000; ++i) {
      const double x = v(rng);
      REQUIRE(std::abs(stealth_unmap(stealth_map(x, 0.87, cfg, r), 0.87, cfg, r) - x) <= 1e-12);
    }
  }
}

TEST_CASE("causal rms uses only preceding samples") {
  std::vector<Sample> s(600);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = {i < 300 ? 2.0 : 5.0, 0.0};
  CHECK(causal_rms(s, 300, 256) == doctest::Approx(2.0));
  CHECK(causal_rms(s, 0, 256) == 0.0);
  CHECK(causal_rms(s, 10, 256) == doctest::Approx(2.0));
  // Window straddling the step: 56 samples at 2, 200 at 5.
  CHECK(causal_rms(s, 500, 256) == doctest::Approx(std::sqrt((56 * 4.0 + 200 * 25.0) / 256)));
}

TEST_CASE("stealth magnitudes follow the causal rms of the unmodified prefix") {
  const auto p = payload(5.0, Modulation::Qam16, 20);
  auto sched = schedule(3);
  sched.stealth = StealthConfig{};
  Rng rng = make_rng(21);
  const auto r = embed(p, source(), sched, rng);
  for (const auto& slot : r.record.slots) {
    // Oracle: rms of the 256 input samples before the slot.
    double acc = 0.0;
    for (std::size_t i = slot.first_sample - 256; i < slot.first_sample; ++i) acc += std::norm(p.samples[i]);
    const double rms = std::sqrt(acc / 256.0);
    CHECK(slot.local_rms == doctest::Approx(rms).epsilon(1e-12));
    const auto idx = r.record.sample_indices(slot);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double expected = rms * (1.0 + (slot.signature.values[j / 3] - 0.75));
      REQUIRE(std::abs(std::abs(r.stream.samples[idx[j]]) - expected) <= 1e-9);
    }
  }
}

TEST_CASE("stealth on constant envelope recovers values exactly") {
  const auto p = payload(10.0, Modulation::Qpsk, 22);
  auto sched = schedule(1);
  sched.stealth = StealthConfig{0.15, 256};
  Rng rng = make_rng(23);
  const auto r = embed(p, source(), sched, rng);
  for (const auto& slot : r.record.slots) {
    const double rms = causal_rms(r.stream.samples, slot.first_sample, 256);
    CHECK(rms == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t e = 0; e < 50; ++e) {
      const double obs = std::abs(r.stream.samples[slot.first_sample + e]);
      REQUIRE(std::abs(stealth_unmap(obs, rms, *sched.stealth, {0.5, 1.0}) - slot.signature.values[e]) <= 1e-6);
    }
  }
}

}  // TEST_SUITE
