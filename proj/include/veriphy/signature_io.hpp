#pragma once

// JSON form of a signature set: the shared secret handed to both the
// generator (UE) side and the detector (gNB) side.

#include <filesystem>

#include <json.hpp>

#include "veriphy/gmm.hpp"

namespace veriphy {

nlohmann::json to_json(const AmplitudeRange& r);
nlohmann::json to_json(const GaussianMixture& gmm);
nlohmann::json to_json(const GenerationConfig& cfg);
nlohmann::json to_json(const SignatureSet& set);

AmplitudeRange range_from_json(const nlohmann::json& j);
GaussianMixture mixture_from_json(const nlohmann::json& j);
/// Missing keys keep their defaults.
GenerationConfig generation_config_from_json(const nlohmann::json& j, GenerationConfig base = {});
SignatureSet signature_set_from_json(const nlohmann::json& j);

void save_signature_set(const SignatureSet& set, const std::filesystem::path& path);
SignatureSet load_signature_set(const std::filesystem::path& path);

}  // namespace veriphy
