#include "graph/morphograph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>

#include "graph/delaunay.hpp"

namespace como::graph {

using json = nlohmann::json;

MorphGraph build_graph(const geo::Block& block, std::span<const geo::Building> buildings,
                       std::span<const morpho::BuildingFeatures> features)
{
    if (buildings.size() < geo::kMinBuildingsPerBlock)
        throw DataError("block " + block.id + " has " + std::to_string(buildings.size()) + " buildings; at least " +
                        std::to_string(geo::kMinBuildingsPerBlock) + " are required");
    std::map<std::string_view, const morpho::BuildingFeatures*> by_id;
    for (const auto& f : features) by_id[f.building_id] = &f;

    std::vector<std::size_t> order(buildings.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return buildings[a].id < buildings[b].id; });

    MorphGraph g;
    g.block_id = block.id;
    g.label = block.function;
    g.features.resize(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(morpho::kFeatureCount));
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& b = buildings[order[r]];
        const auto it = by_id.find(b.id);
        if (it == by_id.end()) throw DataError("building '" + b.id + "' has no feature row");
        g.node_ids.push_back(b.id);
        g.centroids.push_back(geo::centroid(b.footprint));
        for (std::size_t c = 0; c < morpho::kFeatureCount; ++c)
            g.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = it->second->features.values[c];
    }

    const auto tri = delaunay(g.centroids);
    g.collinear_fallback = tri.collinear_fallback;
    for (const auto& [i, j] : tri.edges) g.edges.push_back({i, j, geo::distance(g.centroids[i], g.centroids[j])});
    return g;
}

GraphSet build_graphs(const geo::Dataset& ds, std::span<const morpho::BuildingFeatures> features)
{
    std::map<std::string_view, std::vector<geo::Building>> members;
    for (const auto& b : ds.buildings) members[b.block_id].push_back(b);
    GraphSet out;
    for (const auto& block : ds.blocks) {
        if (!block.eligible) {
            out.skipped.push_back({block.id, "fewer than " + std::to_string(geo::kMinBuildingsPerBlock) + " buildings"});
            continue;
        }
        try {
            out.graphs.push_back(build_graph(block, members[block.id], features));
        } catch (const DataError& e) {
            out.skipped.push_back({block.id, e.what()});
        }
    }
    return out;
}

std::vector<double> affinity(std::span<const double> weights)
{
    if (weights.empty()) return {};
    std::vector<double> sorted(weights.begin(), weights.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const double sigma = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    if (!(sigma > 0.0)) throw DataError("edge weights must be positive");
    std::vector<double> out;
    out.reserve(m);
    for (double d : weights) out.push_back(std::exp(-(d * d) / (sigma * sigma)));
    return out;
}

std::vector<double> affinity(const MorphGraph& g)
{
    std::vector<double> w;
    w.reserve(g.edges.size());
    for (const auto& e : g.edges) w.push_back(e.weight);
    return affinity(w);
}

bool is_connected(const MorphGraph& g)
{
    if (g.size() == 0) return true;
    std::vector<std::vector<std::size_t>> adj(g.size());
    for (const auto& e : g.edges) {
        adj[e.i].push_back(e.j);
        adj[e.j].push_back(e.i);
    }
    std::vector<bool> seen(g.size(), false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop();
        for (std::size_t w : adj[v])
            if (!seen[w]) {
                seen[w] = true;
                ++reached;
                q.push(w);
            }
    }
    return reached == g.size();
}

nlohmann::ordered_json to_json(const MorphGraph& g)
{
    nlohmann::ordered_json j;
    j["block_id"] = g.block_id;
    j["label"] = std::string(geo::function_name(g.label));
    j["nodes"] = g.node_ids;
    auto cents = nlohmann::ordered_json::array();
    for (const auto& c : g.centroids) cents.push_back({c.x, c.y});
    j["centroids"] = cents;
    auto edges = nlohmann::ordered_json::array();
    for (const auto& e : g.edges) edges.push_back({e.i, e.j, e.weight});
    j["edges"] = edges;
    auto feats = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < g.features.rows(); ++r) {
        std::vector<double> row(g.features.cols());
        for (Eigen::Index c = 0; c < g.features.cols(); ++c) row[static_cast<std::size_t>(c)] = g.features(r, c);
        feats.push_back(row);
    }
    j["features"] = feats;
    j["collinear_fallback"] = g.collinear_fallback;
    return j;
}

MorphGraph graph_from_json(const json& j)
{
    try {
        MorphGraph g;
        g.block_id = j.at("block_id").get<std::string>();
        const auto label = geo::parse_function(j.at("label").get<std::string>());
        if (!label) throw DataError("graph " + g.block_id + ": unknown label");
        g.label = *label;
        g.node_ids = j.at("nodes").get<std::vector<std::string>>();
        for (const auto& c : j.at("centroids")) g.centroids.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
        for (const auto& e : j.at("edges")) {
            Edge edge{e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>()};
            if (edge.i >= g.node_ids.size() || edge.j >= g.node_ids.size() || edge.i == edge.j)
                throw DataError("graph " + g.block_id + ": bad edge");
            g.edges.push_back(edge);
        }
        const auto& feats = j.at("features");
        g.features.resize(static_cast<Eigen::Index>(feats.size()), static_cast<Eigen::Index>(morpho::kFeatureCount));
        for (std::size_t r = 0; r < feats.size(); ++r) {
            if (feats[r].size() != morpho::kFeatureCount) throw DataError("graph " + g.block_id + ": bad feature row");
            for (std::size_t c = 0; c < morpho::kFeatureCount; ++c)
                g.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = feats[r][c].get<double>();
        }
        if (g.centroids.size() != g.node_ids.size() || feats.size() != g.node_ids.size())
            throw DataError("graph " + g.block_id + ": node arrays disagree in length");
        g.collinear_fallback = j.value("collinear_fallback", false);
        return g;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed graph record: ") + e.what());
    }
}

}  // namespace como::graph
