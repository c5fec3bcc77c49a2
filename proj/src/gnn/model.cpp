#include "gnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nn/optim.hpp"

namespace como::gnn {

void ModelConfig::validate() const
{
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (in_features == 0 || hidden == 0 || classes < 2) fail("model dimensions must be positive and classes >= 2");
    if (conv_layers == 0) fail("at least one convolution layer is required");
    if (!(pool_rate > 0.0 && pool_rate <= 1.0)) fail("pool_rate must lie in (0, 1]");
    if (batch_size == 0) fail("batch_size must be positive");
    if (!(lr > 0.0)) fail("learning rate must be positive");
    if (max_epochs == 0) fail("max_epochs must be positive");
    if (split_train <= 0.0 || split_val < 0.0 || split_test <= 0.0 ||
        std::abs(split_train + split_val + split_test - 1.0) > 1e-9)
        fail("split fractions must be positive and sum to 1");
    if (folds < 2) fail("folds must be at least 2");
    if (optimizer != "adam" && optimizer != "sgd") fail("optimizer must be adam or sgd");
}

GraphInput make_input(const graph::MorphGraph& g, const morpho::Standardizer& standardizer)
{
    GraphInput in;
    in.features = standardizer.apply(g.features);
    const auto n = static_cast<Eigen::Index>(g.size());
    in.affinity = Matrix::Zero(n, n);
    const auto aff = graph::affinity(g);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const auto i = static_cast<Eigen::Index>(g.edges[e].i), j = static_cast<Eigen::Index>(g.edges[e].j);
        in.affinity(i, j) = in.affinity(j, i) = aff[e];
        in.edges.emplace_back(g.edges[e].i, g.edges[e].j);
    }
    in.label = static_cast<std::size_t>(g.label);
    return in;
}

std::size_t pooled_size(std::size_t n, double rate)
{
    // The epsilon keeps 0.3 * 10 from rounding up to 4.
    const auto k = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n, 1));
}

Eigen::VectorXd information_scores(const Matrix& adjacency, const Matrix& h)
{
    const Eigen::VectorXd deg = adjacency.rowwise().sum();
    Matrix diff = h;
    for (Eigen::Index i = 0; i < adjacency.rows(); ++i)
        if (deg(i) > 0.0) diff.row(i) -= (adjacency.row(i) / deg(i)) * h;
    return diff.cwiseAbs().rowwise().sum();
}

std::vector<std::size_t> top_k(const Eigen::VectorXd& scores, std::size_t k)
{
    std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
    });
    order.resize(std::min(k, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

nn::Var gcn_layer(nn::Var adjacency, nn::Var h, nn::Var w, nn::Var b)
{
    nn::Tape& tape = *adjacency.tape;
    const Eigen::Index n = adjacency.rows();
    nn::Var with_loops = nn::add(adjacency, tape.constant(Matrix::Identity(n, n)));
    nn::Var dinv = nn::pow(nn::row_sum(with_loops), -0.5);
    nn::Var norm = nn::scale_cols(nn::scale_rows(with_loops, dinv), dinv);
    return nn::relu(nn::add_row(nn::matmul(norm, nn::matmul(h, w)), b));
}

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg)
{
    cfg_.validate();
    std::mt19937_64 rng(seed);
    const auto h = static_cast<Eigen::Index>(cfg_.hidden);
    for (std::size_t l = 0; l < cfg_.conv_layers; ++l) {
        const auto in = l == 0 ? static_cast<Eigen::Index>(cfg_.in_features) : h;
        conv_w_.emplace_back("conv" + std::to_string(l) + ".weight", nn::glorot(in, h, rng));
        conv_b_.emplace_back("conv" + std::to_string(l) + ".bias", Matrix::Zero(1, h));
    }
    const Eigen::Index dims[] = {2 * h, h, h, static_cast<Eigen::Index>(cfg_.classes)};
    for (int l = 0; l < 3; ++l) {
        lin_w_.emplace_back("lin" + std::to_string(l) + ".weight", nn::glorot(dims[l], dims[l + 1], rng));
        lin_b_.emplace_back("lin" + std::to_string(l) + ".bias", Matrix::Zero(1, dims[l + 1]));
    }
}

std::vector<nn::Parameter*> Model::parameters()
{
    std::vector<nn::Parameter*> out;
    for (std::size_t l = 0; l < conv_w_.size(); ++l) {
        out.push_back(&conv_w_[l]);
        out.push_back(&conv_b_[l]);
    }
    for (std::size_t l = 0; l < lin_w_.size(); ++l) {
        out.push_back(&lin_w_[l]);
        out.push_back(&lin_b_[l]);
    }
    return out;
}

std::vector<const nn::Parameter*> Model::parameters() const
{
    auto ps = const_cast<Model*>(this)->parameters();
    return {ps.begin(), ps.end()};
}

ForwardResult Model::forward(nn::Tape& tape, const GraphInput& g, const Masks& masks, bool frozen)
{
    auto param = [&](nn::Parameter& p) { return frozen ? tape.constant(p.value) : tape.leaf(p); };
    const auto n0 = static_cast<std::size_t>(g.features.rows());
    if (n0 == 0) throw DataError("cannot classify an empty graph");
    if (g.features.cols() != static_cast<Eigen::Index>(cfg_.in_features))
        throw DataError("graph has " + std::to_string(g.features.cols()) + " features; model expects " +
                        std::to_string(cfg_.in_features));

    nn::Var h = tape.constant(g.features);
    if (masks.feature) h = nn::mul_row(h, *masks.feature);
    nn::Var a = tape.constant(g.affinity);
    if (masks.edge) a = nn::mul(a, nn::scatter_symmetric(*masks.edge, g.edges, n0));

    ForwardResult out;
    std::vector<std::size_t> alive(n0);
    std::iota(alive.begin(), alive.end(), 0);
    for (std::size_t l = 0; l < cfg_.conv_layers; ++l) {
        h = gcn_layer(a, h, param(conv_w_[l]), param(conv_b_[l]));

        const auto keep = top_k(information_scores(a.value(), h.value()), pooled_size(alive.size(), cfg_.pool_rate));
        h = nn::gather_rows(h, keep);
        a = nn::submatrix(a, keep);
        std::vector<std::size_t> next;
        for (std::size_t k : keep) next.push_back(alive[k]);
        alive = std::move(next);
        out.kept.push_back(alive);
    }

    nn::Var z = nn::concat_cols(nn::mean_rows(h), nn::max_rows(h));
    for (std::size_t l = 0; l < lin_w_.size(); ++l) {
        z = nn::add_row(nn::matmul(z, param(lin_w_[l])), param(lin_b_[l]));
        if (l + 1 < lin_w_.size()) z = nn::relu(z);
    }
    out.log_probs = nn::log_softmax(z);
    return out;
}

Matrix Model::predict_proba(const GraphInput& g)
{
    nn::Tape tape;
    return forward(tape, g, {}, true).log_probs.value().array().exp();
}

std::size_t Model::predict(const GraphInput& g)
{
    nn::Tape tape;
    const Matrix& lp = forward(tape, g, {}, true).log_probs.value();
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < lp.cols(); ++c)
        if (lp(0, c) > lp(0, best)) best = c;
    return static_cast<std::size_t>(best);
}

}  // namespace como::gnn
