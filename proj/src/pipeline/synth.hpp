#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "geo/geometry.hpp"

namespace como::pipeline {

/// Desk-scale stand-in for a city. Class A (residential) has elongated
/// bars, class B (commercial) compact near-squares, class C (institutional)
/// a few mid-size buildings with small auxiliary sheds.
struct SynthSpec {
    std::size_t classes = 3;
    std::size_t blocks_per_class = 50;
    std::uint64_t seed = 1;
};

struct SynthData {
    nlohmann::ordered_json buildings;
    nlohmann::ordered_json blocks;
    nlohmann::ordered_json neighborhoods;
    /// Labels and planted features per block.
    nlohmann::ordered_json truth;
    geo::Point center;
};

/// Throws ConfigError unless 2 <= classes <= 3 and blocks_per_class >= 1.
SynthData generate_synthetic(const SynthSpec& spec);

/// Writes buildings.geojson, blocks.geojson, neighborhoods.geojson,
/// truth.json and a ready-to-run pipeline.conf into `dir`.
void write_synthetic(const SynthData& data, const std::string& dir, std::uint64_t seed);

}  // namespace como::pipeline
