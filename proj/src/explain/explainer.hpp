#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gnn/model.hpp"

namespace como::explain {

using nn::Matrix;

/// How selection thresholds are read: against min-max normalized
/// importances (default) or against the raw sigmoid mask values.
enum class ThresholdMode { normalized, raw };

std::string_view mode_name(ThresholdMode m);
ThresholdMode parse_mode(std::string_view s);

struct ExplainConfig {
    std::size_t steps = 100;
    double lr = 0.01;
    double edge_size = 0.005;
    double feature_size = 1.0;
    double edge_entropy = 1.0;
    double feature_entropy = 0.1;
    double init_std = 0.1;
    double edge_threshold = 0.900;
    double feature_threshold = 0.950;
    ThresholdMode mode = ThresholdMode::normalized;

    void validate() const;
};

struct Explanation {
    std::string graph_id;
    std::size_t label = 0;
    std::size_t predicted = 0;
    /// One value per undirected edge of the input, in input order.
    std::vector<double> edge_mask;
    std::vector<double> feature_mask;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    /// False when the objective did not go down over the budget.
    bool converged = false;
    /// Core subgraph: node indices (ascending) and edge indices (ascending).
    std::vector<std::size_t> core_nodes;
    std::vector<std::size_t> core_edges;

    bool usable() const { return converged && predicted == label; }
};

/// Value of the explanation objective for fixed mask logits.
double objective(gnn::Model& model, const gnn::GraphInput& g, std::size_t label, const Matrix& edge_logits,
                 const Matrix& feature_logits, const ExplainConfig& cfg);

/// Learns sigmoid edge and feature masks minimising
///   -log p(label | masked) + a_e sum(m_e) + a_f sum(m_f) + b_e H(m_e) + b_f H(m_f)
/// with H the mean elementwise Bernoulli entropy, then extracts the core
/// subgraph. The model's weights are left untouched.
Explanation explain_graph(gnn::Model& model, const gnn::GraphInput& g, std::size_t label, const std::string& graph_id,
                          const ExplainConfig& cfg, std::uint64_t seed);

/// Seed for one graph, independent of the order graphs are explained in.
std::uint64_t graph_seed(std::uint64_t seed, const std::string& graph_id);

/// Min-max scaling to [0,1]; a constant vector maps to all ones.
std::vector<double> normalize(const std::vector<double>& v);

/// Connected set of candidate edges around the strongest edge, trimmed to
/// nodes one hop from its endpoints. Falls back to the strongest edge alone
/// when nothing passes the threshold.
void extract_core_subgraph(Explanation& e, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                           double threshold, ThresholdMode mode);

struct ClassImportance {
    std::size_t label = 0;
    std::size_t explained = 0;
    std::array<double, morpho::kFeatureCount> mean{};
    std::array<double, morpho::kFeatureCount> normalized{};
    /// Ascending feature indices.
    std::vector<std::size_t> key_features;
};

struct KeyFeatureSelection {
    std::vector<ClassImportance> classes;
    /// Classes without a usable explanation.
    std::vector<std::size_t> skipped;
};

/// Averages usable explanations per label and applies the feature threshold.
KeyFeatureSelection select_key_features(const std::vector<Explanation>& explanations, double threshold,
                                        ThresholdMode mode);

/// Probability of `label` after zeroing the affinities of the given edges.
double probability_without(gnn::Model& model, const gnn::GraphInput& g, std::size_t label,
                           const std::vector<std::size_t>& edge_ids);

nlohmann::ordered_json to_json(const Explanation& e, const std::vector<std::pair<std::size_t, std::size_t>>& edges);
void write_importance_csv(std::ostream& os, const KeyFeatureSelection& sel, ThresholdMode mode);

}  // namespace como::explain
