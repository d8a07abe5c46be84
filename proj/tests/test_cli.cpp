#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(VERIPHY_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json load(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream(p) << j.dump(2);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-sigs writes a signature set") {
  testing::TempDir tmp;
  REQUIRE(run("gen-sigs --seed 3 --out " + tmp.path().string()) == 0);
  const auto j = load(tmp.path() / "signatures.json");
  CHECK(j["signatures"].size() == 5);
}

TEST_CASE("flags override the config file, which overrides defaults") {
  testing::TempDir tmp;
  const auto cfg = tmp.path() / "cfg.json";
  write_json(cfg, {{"seed", 5}, {"windows_per_class", 2}, {"channel", {{"snr_db", 12.0}}}});
  const auto out = tmp.path() / "ds";
  REQUIRE(run("dataset --config " + cfg.string() + " --seed 7 --out " + out.string()) == 0);
  const auto c = load(out / "dataset.json")["config"];
  CHECK(c["seed"] == 7);
  CHECK(c["windows_per_class"] == 2);
  CHECK(c["channel"]["snr_db"] == 12.0);
  CHECK(c["n_el"] == 50);
  CHECK(load(out / "dataset.json")["n_windows"] == 12);
}

TEST_CASE("custom signature length from flags") {
  testing::TempDir tmp;
  REQUIRE(run("dataset --n-el 30 --windows-per-class 1 --out " + tmp.path().string()) == 0);
  const auto c = load(tmp.path() / "dataset.json")["config"];
  CHECK(c["n_el"] == 30);
  CHECK(c["preset"] == 0);
}

TEST_CASE("dataset, export and detect end to end") {
  testing::TempDir tmp;
  const auto ds = tmp.path() / "ds";
  REQUIRE(run("dataset --windows-per-class 3 --out " + ds.string()) == 0);
  REQUIRE(run("export-tensors --dataset " + ds.string() + " --out " + (tmp.path() / "t").string()) == 0);
  CHECK(fs::file_size(tmp.path() / "t" / "tensors.f32") == 18ull * 2160 * 2 * 4);
  REQUIRE(run("detect --dataset " + ds.string() + " --out " + (tmp.path() / "e").string()) == 0);
  const auto m = load(tmp.path() / "e" / "metrics.json");
  CHECK(m.contains("accuracy"));
  CHECK(fs::exists(tmp.path() / "e" / "confusion.csv"));
}

TEST_CASE("embed then detect a single capture") {
  testing::TempDir tmp;
  REQUIRE(run("embed --signature 1 --duration-ms 5 --out " + tmp.path().string()) == 0);
  REQUIRE(fs::exists(tmp.path() / "capture.iq"));
  REQUIRE(run("detect --input " + (tmp.path() / "capture.iq").string() + " --out " +
              tmp.path().string()) == 0);
  const auto d = load(tmp.path() / "detections.json");
  REQUIRE(d.is_array());
  CHECK(d.size() == 5);
  CHECK(d[0].contains("verdict"));
}

TEST_CASE("covertness writes its tables") {
  testing::TempDir tmp;
  REQUIRE(run("covertness --seeds 2 --duration-ms 10 --out " + tmp.path().string()) == 0);
  CHECK(fs::exists(tmp.path() / "covertness.csv"));
  CHECK(fs::exists(tmp.path() / "covertness_cdf.csv"));
}

TEST_CASE("exit codes") {
  testing::TempDir tmp;
  CHECK(run("dataset --preset 9") == 2);
  CHECK(run("dataset --snr nope") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("detect") == 2);

  const auto bad = tmp.path() / "bad.json";
  write_json(bad, {{"n_signatures", "five"}});
  CHECK(run("gen-sigs --config " + bad.string() + " --out " + tmp.path().string()) == 2);
  std::ofstream(tmp.path() / "broken.json") << "{ not json";
  CHECK(run("gen-sigs --config " + (tmp.path() / "broken.json").string()) == 2);

  const auto hard = tmp.path() / "hard.json";
  write_json(hard, {{"n_signatures", 20}, {"generation", {{"ks_epsilon", 0.9}, {"max_attempts", 50}}}});
  CHECK(run("gen-sigs --config " + hard.string() + " --out " + tmp.path().string()) == 3);

  fs::create_directories(tmp.path() / "empty");
  CHECK(run("detect --dataset " + (tmp.path() / "empty").string()) == 4);
  std::ofstream(tmp.path() / "junk.iq") << "not a capture";
  CHECK(run("detect --input " + (tmp.path() / "junk.iq").string() + " --out " + tmp.path().string()) == 4);
}

}  // TEST_SUITE
