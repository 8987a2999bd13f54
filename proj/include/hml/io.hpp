#pragma once

#include "hml/harness.hpp"

#include "json.hpp"

#include <filesystem>

namespace hml {

using nlohmann::json;

void to_json(json& j, const ModelParams& p);
void from_json(const json& j, ModelParams& p);
void to_json(json& j, const GameConfig& g);
void from_json(const json& j, GameConfig& g);
void to_json(json& j, const CurriculumConfig& c);
void from_json(const json& j, CurriculumConfig& c);
void to_json(json& j, const FilterConfig& f);
void from_json(const json& j, FilterConfig& f);
void to_json(json& j, const GaPhase& g);
void from_json(const json& j, GaPhase& g);
void to_json(json& j, const GaConfig& g);
void from_json(const json& j, GaConfig& g);
void to_json(json& j, const Arm& a);
void from_json(const json& j, Arm& a);
void to_json(json& j, const ModelBPreset& m);
void from_json(const json& j, ModelBPreset& m);
void to_json(json& j, const ExperimentSpec& s);
void from_json(const json& j, ExperimentSpec& s);
void to_json(json& j, const SynergySystem& s);
void to_json(json& j, const RunManifest& m);
void from_json(const json& j, RunManifest& m);

/// Reads a JSON spec; keys absent from the document keep the values of
/// `base`. Unknown keys and wrong types are rejected with the offending path.
ExperimentSpec load_spec(const std::filesystem::path& file, ExperimentSpec base);
ExperimentSpec parse_spec(const json& doc, ExperimentSpec base);

/// Reads a ModelParams document (e.g. data/default_params.json).
ModelParams load_params(const std::filesystem::path& file);

json read_json(const std::filesystem::path& file);
void write_json(const std::filesystem::path& file, const json& doc);

}  // namespace hml
