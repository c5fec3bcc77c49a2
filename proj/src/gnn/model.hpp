#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graph/morphograph.hpp"
#include "morpho/morphometrics.hpp"
#include "nn/autograd.hpp"

namespace como::gnn {

using nn::Matrix;

struct ModelConfig {
    std::size_t in_features = morpho::kFeatureCount;
    std::size_t conv_layers = 3;
    std::size_t hidden = 64;
    double pool_rate = 0.30;
    std::size_t classes = geo::kFunctionCount;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    std::size_t max_epochs = 1000;
    std::size_t patience = 70;
    /// train : val : test
    double split_train = 0.8;
    double split_val = 0.1;
    double split_test = 0.1;
    std::size_t folds = 10;
    /// "adam" or "sgd".
    std::string optimizer = "adam";

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Model-ready graph: standardized node features and a dense affinity matrix.
struct GraphInput {
    Matrix features;
    /// Symmetric, zero diagonal; affinity of each Delaunay edge.
    Matrix affinity;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::size_t label = 0;
};

GraphInput make_input(const graph::MorphGraph& g, const morpho::Standardizer& standardizer);

/// Number of nodes kept by one pooling layer: ceil(rate * n), at least 1.
std::size_t pooled_size(std::size_t n, double rate);

/// Node information score ||(I - D^-1 A) H||_1 per row; rows with no
/// neighbours score ||H_i||_1.
Eigen::VectorXd information_scores(const Matrix& adjacency, const Matrix& h);

/// Indices of the k highest scores, ties to the lower index, returned in
/// ascending index order.
std::vector<std::size_t> top_k(const Eigen::VectorXd& scores, std::size_t k);

/// ReLU(D^-1/2 (A + I) D^-1/2 H W + b) for a zero-diagonal adjacency A.
nn::Var gcn_layer(nn::Var adjacency, nn::Var h, nn::Var w, nn::Var b);

/// Optional explainer masks. Edge mask is E x 1 (one entry per undirected
/// edge of the input), feature mask is 1 x F; both multiply elementwise.
struct Masks {
    std::optional<nn::Var> edge;
    std::optional<nn::Var> feature;
};

struct ForwardResult {
    /// 1 x classes
    nn::Var log_probs;
    /// Node indices (into the input graph) kept after each pooling layer.
    std::vector<std::vector<std::size_t>> kept;
};

/// Three conv/pool rounds, mean||max readout, three-layer classifier head.
class Model {
public:
    Model(const ModelConfig& cfg, std::uint64_t seed);

    /// With `frozen`, weights enter the tape as constants and receive no
    /// gradient.
    ForwardResult forward(nn::Tape& tape, const GraphInput& g, const Masks& masks = {}, bool frozen = false);
    /// Class probabilities, 1 x classes.
    Matrix predict_proba(const GraphInput& g);
    std::size_t predict(const GraphInput& g);

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;
    const ModelConfig& config() const { return cfg_; }

private:
    ModelConfig cfg_;
    std::vector<nn::Parameter> conv_w_, conv_b_;
    std::vector<nn::Parameter> lin_w_, lin_b_;
};

}  // namespace como::gnn
