#pragma once

#include <string>

#include "json.hpp"

#include "dsoft/forest.hpp"
#include "dsoft/tree.hpp"

namespace dsoft {

inline constexpr int kModelSchemaVersion = 1;

/// Versioned JSON model schema. Keys are emitted sorted and doubles with
/// shortest round-trip encoding, so equal models serialize byte-identically
/// and every numeric field survives a round trip bit-exactly.
nlohmann::json model_to_json(const DistModel& model);
DistModel model_from_json(const nlohmann::json& j);

nlohmann::json forest_to_json(const ForestModel& forest);
ForestModel forest_from_json(const nlohmann::json& j);

void save_model(const DistModel& model, const std::string& path);
void save_forest(const ForestModel& forest, const std::string& path);

/// Model files carry a "kind" discriminator ("tree" or "forest").
bool is_forest_file(const nlohmann::json& j);
DistModel load_model(const std::string& path);
ForestModel load_forest(const std::string& path);
nlohmann::json load_model_json(const std::string& path);

}  // namespace dsoft
