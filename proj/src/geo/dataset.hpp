#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "geo/geometry.hpp"

namespace como::geo {

/// Land-use classes in the column order of the confusion matrix.
enum class UrbanFunction : int {
    commercial = 0,
    industrial,
    institutional,
    mixed_use,
    public_open_space,
    residential,
};

inline constexpr std::size_t kFunctionCount = 6;
inline constexpr std::size_t kMinBuildingsPerBlock = 4;

std::string_view function_name(UrbanFunction f);
std::optional<UrbanFunction> parse_function(std::string_view label);
/// Comma-separated list of accepted labels, for error messages.
std::string allowed_function_labels();

struct Building {
    std::string id;
    Polygon footprint;
    std::string block_id;
};

struct Block {
    std::string id;
    Polygon boundary;
    UrbanFunction function = UrbanFunction::residential;
    std::vector<std::string> building_ids;
    /// At least kMinBuildingsPerBlock buildings.
    bool eligible = false;
};

struct Neighborhood {
    std::string id;
    std::string name;
    Polygon boundary;
};

/// Per-feature note produced while reading: either a repair that was applied
/// or the reason a feature was dropped.
struct Diagnostic {
    std::string source;
    std::size_t feature_index = 0;
    std::string feature_id;
    std::string message;
    bool rejected = false;
};

struct Dataset {
    std::vector<Building> buildings;
    std::vector<Block> blocks;
    std::vector<Diagnostic> diagnostics;

    const Block* find_block(std::string_view id) const;
};

/// Reads building and block FeatureCollections, repairs ring closure and
/// orientation, assigns each building to the block containing its centroid
/// (boundary ties go to the smallest block id) and flags small blocks.
/// Throws DataError on malformed JSON, unknown function labels, or
/// coordinates that look like longitude/latitude.
Dataset parse_dataset(std::istream& buildings, std::istream& blocks);

std::vector<Neighborhood> parse_neighborhoods(std::istream& in);

/// GeoJSON Polygon geometry object (rings closed, exterior first).
nlohmann::json polygon_to_geojson(const Polygon& p);
/// Polygon or single-part MultiPolygon geometry. Repairs closure/orientation;
/// `repaired` is set when the input ring was not closed.
Polygon polygon_from_geojson(const nlohmann::json& geometry, bool* repaired = nullptr);

/// Polygon or MultiPolygon geometry for a set of parts.
nlohmann::json parts_to_geojson(const std::vector<Polygon>& parts);

}  // namespace como::geo
