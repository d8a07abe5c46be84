#include "veriphy/signature_io.hpp"

#include <fstream>

#include "veriphy/error.hpp"

namespace veriphy {

using nlohmann::json;

json to_json(const AmplitudeRange& r) { return json::array({r.min, r.max}); }

json to_json(const GaussianMixture& gmm) {
  json comps = json::array();
  for (const auto& c : gmm.components()) {
    comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"std", c.std}});
  }
  return {{"id", gmm.id()}, {"components", comps}, {"amplitude_range", to_json(gmm.range())}};
}

json to_json(const GenerationConfig& cfg) {
  return {{"n_signatures", cfg.n_signatures},
          {"ks_epsilon", cfg.ks_epsilon},
          {"max_components", cfg.max_components},
          {"amplitude_range", to_json(cfg.amplitude_range)},
          {"std_range", to_json(cfg.std_range)},
          {"max_attempts", cfg.max_attempts},
          {"seed", cfg.seed}};
}

json to_json(const SignatureSet& set) {
  json sigs = json::array();
  for (const auto& g : set.signatures) sigs.push_back(to_json(g));
  return {{"signatures", sigs}, {"generation", to_json(set.config)}, {"attempts", set.attempts}};
}

AmplitudeRange range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorKind::Format, "range must be a two-element array");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

GaussianMixture mixture_from_json(const json& j) {
  try {
    std::vector<GaussianComponent> comps;
    for (const auto& c : j.at("components")) {
      comps.push_back({c.at("weight").get<double>(), c.at("mean").get<double>(),
                       c.at("std").get<double>()});
    }
    return GaussianMixture(j.at("id").get<std::string>(), std::move(comps),
                           range_from_json(j.at("amplitude_range")));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad mixture: ") + e.what());
  }
}

GenerationConfig generation_config_from_json(const json& j, GenerationConfig cfg) {
  try {
    if (j.contains("n_signatures")) cfg.n_signatures = j["n_signatures"].get<std::size_t>();
    if (j.contains("ks_epsilon")) cfg.ks_epsilon = j["ks_epsilon"].get<double>();
    if (j.contains("max_components")) cfg.max_components = j["max_components"].get<std::size_t>();
    if (j.contains("amplitude_range")) cfg.amplitude_range = range_from_json(j["amplitude_range"]);
    if (j.contains("std_range")) cfg.std_range = range_from_json(j["std_range"]);
    if (j.contains("max_attempts")) cfg.max_attempts = j["max_attempts"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad generation config: ") + e.what());
  }
  return cfg;
}

SignatureSet signature_set_from_json(const json& j) {
  SignatureSet set;
  if (!j.contains("signatures")) throw Error(ErrorKind::Format, "missing 'signatures'");
  for (const auto& s : j["signatures"]) set.signatures.push_back(mixture_from_json(s));
  if (j.contains("generation")) set.config = generation_config_from_json(j["generation"]);
  set.attempts = j.value("attempts", std::size_t{0});
  return set;
}

void save_signature_set(const SignatureSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_json(set).dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

SignatureSet load_signature_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, path.string() + ": " + e.what());
  }
  return signature_set_from_json(j);
}

}  // namespace veriphy
