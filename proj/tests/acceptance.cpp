// Acceptance checks. Prints one PASS/FAIL line per criterion, followed by
// indented detail lines. Pass criterion ids (C1 .. C10) to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "support.hpp"
#include "veriphy/baseband.hpp"
#include "veriphy/dataset.hpp"
#include "veriphy/detector.hpp"
#include "veriphy/embed.hpp"
#include "veriphy/error.hpp"
#include "veriphy/experiment.hpp"
#include "veriphy/gmm.hpp"
#include "veriphy/runner.hpp"
#include "veriphy/tensor_export.hpp"

using namespace veriphy;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string summary;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { details.push_back("     " + what); }
};

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

std::vector<testing::Comp> oracle_comps(const GaussianMixture& g) {
  std::vector<testing::Comp> out;
  for (const auto& c : g.components()) out.push_back({c.weight, c.mean, c.std});
  return out;
}

double max_pairwise_ks(const SignatureSet& set, double* min_ks = nullptr) {
  double hi = 0.0, lo = 1.0;
  const auto& s = set.signatures;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const double d = ks_distance(s[i], s[j]);
      hi = std::max(hi, d);
      lo = std::min(lo, d);
    }
  }
  if (min_ks) *min_ks = lo;
  return hi;
}

// Shared by C4, C5 and C8.
ExperimentConfig accuracy_config(bool stealth) {
  ExperimentConfig cfg;
  cfg.preset = 3;
  cfg.apply_preset();
  cfg.n_signatures = 5;
  cfg.channel.snr_db = 20.0;
  cfg.windows_per_class = 1000;
  cfg.stealth = stealth;
  cfg.seed = 1;
  cfg.validate();
  return cfg;
}

const SignatureSet& accuracy_signatures() {
  static const SignatureSet s = generate_signature_set(accuracy_config(false).generation_config());
  return s;
}

struct AccuracyRun {
  EvalRun run;
  double seconds = 0.0;
  double none_fp_rate = 0.0;
};

const AccuracyRun& accuracy_run(bool stealth) {
  static std::map<bool, AccuracyRun> cache;
  if (auto it = cache.find(stealth); it != cache.end()) return it->second;
  const auto t0 = Clock::now();
  const auto cfg = accuracy_config(stealth);
  const auto ds = synthesize_dataset(cfg, accuracy_signatures());
  AccuracyRun r;
  r.run = run_eval(ds);
  r.seconds = seconds_since(t0);
  const auto none = ds.signatures.signatures.size();
  std::size_t none_total = 0, none_claimed = 0;
  for (std::size_t i = 0; i < ds.windows.size(); ++i) {
    if (ds.windows[i].label != none) continue;
    ++none_total;
    none_claimed += r.run.evaluation.reports[i].classification.verdict.kind == VerdictKind::Signature;
  }
  r.none_fp_rate = none_total ? static_cast<double>(none_claimed) / static_cast<double>(none_total) : 0.0;
  return cache.emplace(stealth, std::move(r)).first->second;
}

Outcome c1() {
  Outcome o;
  o.summary = "signature-set generation";
  const auto t0 = Clock::now();
  std::size_t ok = 0;
  bool all_separated = true;
  double global_min = 1.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    GenerationConfig g;
    g.n_signatures = 5;
    g.ks_epsilon = 0.2;
    g.max_components = 5;
    g.amplitude_range = {0.5, 1.0};
    g.max_attempts = 10000;
    g.seed = seed;
    try {
      const auto set = generate_signature_set(g);
      ++ok;
      double lo = 1.0;
      max_pairwise_ks(set, &lo);
      global_min = std::min(global_min, lo);
      if (!(lo > 0.2)) all_separated = false;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::AttemptsExhausted) throw;
    }
  }
  const double secs = seconds_since(t0);
  o.require(ok >= 95, fmt("%zu/100 seeds generated N=5 within 10000 attempts (need >= 95)", ok));
  o.require(all_separated, fmt("every emitted pair has KS > 0.2 (smallest %.4f)", global_min));
  o.require(secs < 30.0, fmt("100 generations took %.2f s (limit 30 s)", secs));

  GenerationConfig four;
  four.n_signatures = 4;
  four.seed = 1;
  const auto set4 = generate_signature_set(four);
  double lo4 = 1.0;
  const double hi4 = max_pairwise_ks(set4, &lo4);
  std::string pairs;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      pairs += fmt(" %.3f", ks_distance(set4.signatures[i], set4.signatures[j]));
    }
  }
  o.require(lo4 >= 0.2 && hi4 <= 0.8,
            fmt("4-signature run (seed 1) pairwise KS in [0.2, 0.8]: observed [%.3f, %.3f]", lo4, hi4));
  o.note("pairs:" + pairs);

  std::size_t in_band = 0;
  double mean_max = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    four.seed = seed;
    const double hi = max_pairwise_ks(generate_signature_set(four));
    in_band += hi <= 0.8;
    mean_max += hi / 100.0;
  }
  o.note(fmt("band over 100 seeds: %zu/100 four-signature sets stay <= 0.8, mean max KS %.3f", in_band, mean_max));
  o.note("the upper bound is a property of the generator settings, not a defect: with component");
  o.note("std in [0.01, 0.05] and 1-5 components on [0.5, 1], two independent draws are often");
  o.note("near-disjoint, which puts their KS distance close to 1. Only the lower bound is");
  o.note("enforced by rejection. Left failing rather than narrowing the generator.");
  return o;
}

Outcome c2() {
  Outcome o;
  o.summary = "KS engine vs two-sample brute force (1e6 draws per mixture)";
  GenerationConfig g;
  Rng rng = make_rng(2024);
  double worst = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    const auto a = random_mixture(g, "a", rng);
    const auto b = random_mixture(g, "b", rng);
    const double exact = ks_distance(a, b);
    const auto da = testing::truncated_draws(oracle_comps(a), 0.5, 1.0, 1000000, 7919u * pair + 1);
    const auto db = testing::truncated_draws(oracle_comps(b), 0.5, 1.0, 1000000, 7919u * pair + 2);
    const double brute = testing::brute_ks(da, db);
    worst = std::max(worst, std::abs(exact - brute));
    if (std::abs(exact - brute) > 2e-3) o.note(fmt("pair %d: ks_distance %.5f brute %.5f", pair, exact, brute));
  }
  o.require(worst <= 2e-3, fmt("20 random pairs, worst |difference| %.2e (limit 2e-3)", worst));
  return o;
}

double max_abs_error(const EmbedResult& sent, const IqStream& received, const DetectorConfig& cfg,
                     double* rms_error, std::size_t* transmissions) {
  const std::size_t period = cfg.schedule.period_samples(received.sample_rate_per_ms);
  double worst = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const auto& slot : sent.record.slots) {
    if (!slot.transmitted) continue;
    IqStream window;
    window.sample_rate_per_ms = received.sample_rate_per_ms;
    const auto begin = received.samples.begin() + static_cast<std::ptrdiff_t>(slot.slot_index * period);
    window.samples.assign(begin, begin + static_cast<std::ptrdiff_t>(period));
    const auto ex = extract_values(window, cfg);
    for (std::size_t e = 0; e < ex.values.size(); ++e) {
      const double d = ex.values[e] - slot.signature.values[e];
      worst = std::max(worst, std::abs(d));
      sq += d * d;
      ++count;
    }
    ++*transmissions;
  }
  *rms_error = std::sqrt(sq / static_cast<double>(std::max<std::size_t>(count, 1)));
  return worst;
}

Outcome c3() {
  Outcome o;
  o.summary = "embedding round trip";
  const auto& sigs = accuracy_signatures().signatures;

  auto run = [&](Modulation mod, bool stealth, double snr, std::uint64_t seed, double* rms, std::size_t* n) {
    DetectorConfig cfg;
    cfg.enrolled = sigs;
    cfg.schedule.gating_prob = 1.0;
    cfg.schedule.seed = seed;
    if (stealth) cfg.schedule.stealth = StealthConfig{};
    cfg.jitter_search = 0;
    cfg.noise_power = std::isfinite(snr) ? noise_power_for_snr(snr) : 0.0;
    double worst = 0.0;
    *rms = 0.0;
    *n = 0;
    double sq = 0.0;
    for (std::size_t s = 0; s < sigs.size(); ++s) {
      Rng rng = make_rng(seed, s);
      const auto payload = generate_payload(200.0, mod, rng);
      const auto sent = embed(payload, sigs[s], cfg.schedule, rng);
      ChannelConfig ch;
      ch.snr_db = snr;
      Rng chr = make_rng(seed, 100 + s);
      const auto rx = transmit(sent.stream, ch, chr).stream;
      double r = 0.0;
      std::size_t before = *n;
      worst = std::max(worst, max_abs_error(sent, rx, cfg, &r, n));
      sq += r * r * static_cast<double>(*n - before);
    }
    *rms = std::sqrt(sq / static_cast<double>(*n));
    return worst;
  };

  double rms = 0.0;
  std::size_t n = 0;
  const double inf = std::numeric_limits<double>::infinity();
  const double normal = run(Modulation::Qam16, false, inf, 31, &rms, &n);
  o.require(n >= 1000 && normal <= 1e-6,
            fmt("noiseless normal mode, %zu transmissions: max error %.2e (limit 1e-6)", n, normal));
  const double qpsk = run(Modulation::Qpsk, true, inf, 32, &rms, &n);
  o.require(n >= 1000 && qpsk <= 1e-6,
            fmt("stealth on constant-envelope payload, %zu transmissions: max error %.2e (limit 1e-6)", n, qpsk));
  run(Modulation::Qam16, true, 20.0, 33, &rms, &n);
  o.require(rms <= 0.05, fmt("stealth on 16QAM at 20 dB, %zu transmissions: RMS error %.4f (limit 0.05)", n, rms));
  return o;
}

Outcome c4() {
  Outcome o;
  o.summary = "detection accuracy, 5 signatures, n_el=50, t=1 ms, 20 dB";
  const auto& r = accuracy_run(false);
  const auto& m = r.run.evaluation.metrics;
  o.require(m.total >= 6000, fmt("%zu windows evaluated (1000 per class)", m.total));
  o.require(m.accuracy >= 0.93, fmt("accuracy %.4f (need >= 0.93)", m.accuracy));
  o.require(m.f1_macro >= 0.93, fmt("macro F1 %.4f (need >= 0.93)", m.f1_macro));
  o.require(r.none_fp_rate <= 0.05, fmt("no-signature windows claimed by a signature: %.2f%% (limit 5%%)",
                                        100.0 * r.none_fp_rate));
  o.require(r.seconds < 300.0, fmt("synthesis + evaluation took %.1f s (limit 300 s)", r.seconds));
  return o;
}

Outcome c5() {
  Outcome o;
  o.summary = "stealth accuracy retention";
  const double base = accuracy_run(false).run.evaluation.metrics.accuracy;
  const auto& r = accuracy_run(true);
  const double acc = r.run.evaluation.metrics.accuracy;
  const double drop = 100.0 * (base - acc);
  o.require(drop <= 5.0, fmt("accuracy %.4f with stealth vs %.4f without: drop %.2f pp (limit 5)", acc, base, drop));
  o.note(fmt("stealth macro F1 %.4f", r.run.evaluation.metrics.f1_macro));
  return o;
}

Outcome c6() {
  Outcome o;
  o.summary = "covertness of the energy profile on 16QAM";
  auto cfg = accuracy_config(true);
  const auto rep = run_covertness(cfg, accuracy_signatures(), 10, 100.0);
  double max_normal_gap = 1.0;
  for (const auto& t : rep.trials) {
    o.note(fmt("seed %llu %s: KS stealth %.4f normal %.4f", static_cast<unsigned long long>(t.seed),
               t.signature_id.c_str(), t.ks_stealth, t.ks_normal));
    max_normal_gap = std::min(max_normal_gap, t.ks_normal - t.ks_stealth);
  }
  o.require(rep.trials.size() == 10 && rep.max_ks_stealth <= 0.05,
            fmt("10 seeds, max KS(stealth, baseline) %.4f (limit 0.05)", rep.max_ks_stealth));
  o.require(rep.stealth_always_lower,
            fmt("stealth strictly below normal in every trial (smallest margin %.4f)", max_normal_gap));
  return o;
}

Outcome c7() {
  Outcome o;
  o.summary = "replay detection, horizon 100";
  const auto& sigs = accuracy_signatures().signatures;
  DetectorConfig cfg;
  cfg.enrolled = sigs;
  cfg.schedule.gating_prob = 1.0;
  cfg.noise_power = noise_power_for_snr(20.0);
  ReplayCache cache(100, cfg.quantization);

  ChannelConfig ch;
  ch.snr_db = 20.0;
  std::vector<IqStream> sent;
  std::size_t false_flags = 0, fresh = 0, replays = 0, caught = 0;
  std::vector<std::size_t> gaps;
  Rng attacker = make_rng(77);
  std::uniform_int_distribution<std::size_t> gap_of(1, 99);
  std::size_t submissions = 0;
  std::vector<std::size_t> sent_at;
  for (std::size_t i = 0; i < 10000; ++i) {
    Rng rng = make_rng(7000 + i);
    const auto payload = generate_payload(1.0, Modulation::Qam16, rng);
    auto s = cfg.schedule;
    s.seed = 7000 + i;
    const auto e = embed(payload, sigs[i % sigs.size()], s, rng);
    auto rx = transmit(e.stream, ch, rng).stream;
    const auto ex = extract_values(rx, cfg);
    false_flags += check_replay(ex.values, cache);
    ++fresh;
    sent.push_back(std::move(rx));
    sent_at.push_back(submissions++);

    // Every fifth step the attacker replays a capture heard `gap` submissions ago.
    if (i % 5 == 4) {
      const std::size_t gap = std::min(gap_of(attacker), submissions);
      std::size_t k = sent.size();
      while (k > 0 && sent_at[k - 1] + gap > submissions) --k;
      if (k == 0) continue;
      const auto ex2 = extract_values(sent[k - 1], cfg);
      caught += check_replay(ex2.values, cache);
      ++replays;
      ++submissions;
    }
  }
  o.require(caught == replays, fmt("%zu/%zu exact retransmissions within the horizon flagged", caught, replays));
  o.require(false_flags == 0, fmt("%zu false flags over %zu fresh transmissions at 20 dB", false_flags, fresh));
  return o;
}

Outcome c8() {
  Outcome o;
  o.summary = "pipeline latency";
  const auto& run = accuracy_run(false).run;
  const auto& m = run.evaluation.metrics;
  const double mean = m.mean_latency.processing_ms + m.mean_latency.classification_ms;
  double worst = 0.0;
  for (const auto& r : run.evaluation.reports) {
    worst = std::max(worst, r.latency.processing_ms + r.latency.classification_ms);
  }
  o.require(mean < 20.0, fmt("mean processing + classification %.3f ms per 1 ms window (limit 20 ms)", mean));
  o.note(fmt("slowest window %.3f ms", worst));
  const auto table = summary_table({run});
  bool rows = true;
  for (const char* row : {"I/Q capture time", "Processing time", "Classification time", "Total time"}) {
    rows = rows && table.find(row) != std::string::npos;
  }
  o.require(rows, "summary table has the capture, processing, classification and total rows");
  return o;
}

Outcome c9() {
  Outcome o;
  o.summary = "tensor export layout";
  ExperimentConfig cfg;
  cfg.windows_per_class = 100;
  cfg.apply_preset();
  const auto ds = synthesize_dataset(cfg, accuracy_signatures());
  testing::TempDir tmp;
  write_dataset(ds, tmp.path() / "ds");
  const auto stored = read_dataset(tmp.path() / "ds");
  const auto ex = export_tensors(stored.windows, stored.class_names(), tmp.path() / "t");
  const std::size_t n = stored.windows.size();
  const std::uintmax_t expect = static_cast<std::uintmax_t>(n) * 60 * 36 * 2 * 4;
  o.require(fs::file_size(ex.tensor_path) == expect && expect == 10368000,
            fmt("%zu windows -> %ju bytes (expected %ju)", n, static_cast<std::uintmax_t>(fs::file_size(ex.tensor_path)),
                expect));
  o.require(fs::file_size(ex.labels_path) == n * 4, "labels file is one int32 per example");

  const auto td = read_tensors(tmp.path() / "t");
  bool law = td.shape == std::array<std::size_t, 4>{n, 60, 36, 2} && td.values.size() == n * 4320;
  bool lossless = true;
  for (std::size_t w = 0; w < n && law; ++w) {
    const auto& smp = stored.windows[w].window.samples;
    for (std::size_t g = 0; g < 60; ++g) {
      for (std::size_t s = 0; s < 36; ++s) {
        const auto& x = smp[36 * g + s];
        const float re = td.values[tensor_offset(w, g, s, 0)];
        const float im = td.values[tensor_offset(w, g, s, 1)];
        law = law && re == static_cast<float>(ds.windows[w].window.samples[36 * g + s].real()) &&
              im == static_cast<float>(ds.windows[w].window.samples[36 * g + s].imag());
        lossless = lossless && static_cast<double>(re) == x.real() && static_cast<double>(im) == x.imag();
      }
    }
    law = law && td.labels[w] == static_cast<std::int32_t>(ds.windows[w].label);
  }
  o.require(law, "element [n][g][s][c] equals component c of sample 36g+s of window n, for every element");
  o.require(lossless, "capture -> tensor -> reader round trip is bit-exact");
  return o;
}

Outcome c10() {
  Outcome o;
  o.summary = "determinism of run_eval";
  ExperimentConfig cfg;
  cfg.windows_per_class = 200;
  cfg.channel.timing_jitter_samples = 2;
  cfg.apply_preset();
  auto once = [&](unsigned threads) {
    auto c = cfg;
    c.threads = threads;
    const auto sigs = generate_signature_set(c.generation_config());
    return without_latency(eval_json(run_eval(synthesize_dataset(c, sigs)))).dump();
  };
  const auto a = once(0);
  const auto b = once(0);
  const auto c = once(1);
  o.require(a == b, fmt("two runs, identical metrics JSON without latency (%zu bytes)", a.size()));
  o.require(a == c, "single-threaded run matches as well");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"C1", c1}, {"C2", c2}, {"C3", c3}, {"C4", c4}, {"C5", c5},
      {"C6", c6}, {"C7", c7}, {"C8", c8}, {"C9", c9}, {"C10", c10},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, fn] : all) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.summary = std::string("threw: ") + e.what();
    }
    std::printf("%-4s %s  %s (%.1f s)\n", id.c_str(), out.pass ? "PASS" : "FAIL", out.summary.c_str(),
                seconds_since(t0));
    for (const auto& d : out.details) std::printf("       %s\n", d.c_str());
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed == 0 ? 0 : 1;
}
