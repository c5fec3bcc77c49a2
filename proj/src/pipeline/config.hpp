#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "explain/explainer.hpp"
#include "geo/tessellation.hpp"
#include "gnn/model.hpp"
#include "symbolic/symbolic.hpp"

namespace como::pipeline {

/// Everything a run depends on. Read from a flat `key = value` file; see
/// `config_keys()` for the schema.
struct PipelineConfig {
    std::string buildings;
    std::string blocks;
    /// Optional; without it the neighborhood step is skipped.
    std::string neighborhoods;
    std::string out = "como-out";
    /// Required by the analysis stage.
    std::optional<geo::Point> center;
    std::uint64_t seed = 42;
    bool deterministic = false;

    geo::TessellationOptions tessellation;
    gnn::ModelConfig model;
    explain::ExplainConfig explainer;
    symbolic::DominanceThresholds dominance;
    std::size_t clusters = 8;
    std::size_t restarts = 50;

    void validate() const;
    /// Applies one setting; relative paths resolve against `base_dir`.
    void set(const std::string& key, const std::string& value, const std::string& base_dir = "");
    /// Canonical text form, one `key = value` per line in schema order.
    std::string to_text() const;
};

/// Parses a config file. Throws ConfigError with the line number on bad
/// syntax, unknown keys or unparsable values.
PipelineConfig parse_config(std::istream& in, const std::string& base_dir = "");
PipelineConfig load_config(const std::string& path);

/// Documented keys with a one-line description each.
std::string config_keys();

}  // namespace como::pipeline
