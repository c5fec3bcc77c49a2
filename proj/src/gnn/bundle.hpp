#pragma once

#include <iosfwd>

#include <json.hpp>

#include "gnn/model.hpp"

namespace como::gnn {

nlohmann::ordered_json to_json(const ModelConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const morpho::Standardizer& s);
morpho::Standardizer standardizer_from_json(const nlohmann::json& j);

/// Trained model plus the standardization it expects.
struct Bundle {
    Model model;
    morpho::Standardizer standardizer;
};

void save_bundle(std::ostream& out, const Model& model, const morpho::Standardizer& standardizer);
/// Throws DataError on a malformed or mismatched file.
Bundle load_bundle(std::istream& in);

}  // namespace como::gnn
