#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "geo/dataset.hpp"
#include "morpho/morphometrics.hpp"

namespace como::graph {

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    /// Centroid distance in meters.
    double weight = 0.0;
};

/// One block as g = (V, E, F, W) with its function label. Nodes are sorted
/// by building id; `features` holds raw morphometrics in node order.
struct MorphGraph {
    std::string block_id;
    geo::UrbanFunction label = geo::UrbanFunction::residential;
    std::vector<std::string> node_ids;
    std::vector<geo::Point> centroids;
    std::vector<Edge> edges;
    Eigen::MatrixXd features;
    bool collinear_fallback = false;

    std::size_t size() const { return node_ids.size(); }
};

/// Throws DataError when the block is ineligible or a building has no
/// feature row.
MorphGraph build_graph(const geo::Block& block, std::span<const geo::Building> buildings,
                       std::span<const morpho::BuildingFeatures> features);

struct SkippedBlock {
    std::string block_id;
    std::string reason;
};

struct GraphSet {
    std::vector<MorphGraph> graphs;
    std::vector<SkippedBlock> skipped;
};

/// Graphs for every eligible block in dataset order; other blocks are
/// recorded in `skipped`.
GraphSet build_graphs(const geo::Dataset& ds, std::span<const morpho::BuildingFeatures> features);

/// Gaussian kernel exp(-d^2 / sigma^2), sigma the median of `weights`.
std::vector<double> affinity(std::span<const double> weights);
std::vector<double> affinity(const MorphGraph& g);

bool is_connected(const MorphGraph& g);

nlohmann::ordered_json to_json(const MorphGraph& g);
MorphGraph graph_from_json(const nlohmann::json& j);

}  // namespace como::graph
