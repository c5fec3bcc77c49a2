#include "explain/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "gnn/train.hpp"
#include "nn/optim.hpp"

namespace como::explain {

namespace {

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

nn::Var entropy(nn::Var m)
{
    // mean of -(m log m + (1 - m) log(1 - m))
    nn::Var rest = nn::add_const(nn::scale(m, -1.0), 1.0);
    nn::Var h = nn::add(nn::mul(m, nn::log(m)), nn::mul(rest, nn::log(rest)));
    return nn::scale(nn::mean(h), -1.0);
}

nn::Var build_objective(nn::Tape& tape, gnn::Model& model, const gnn::GraphInput& g, std::size_t label,
                        std::optional<nn::Var> edge_logits, nn::Var feature_logits, const ExplainConfig& cfg)
{
    gnn::Masks masks;
    masks.feature = nn::sigmoid(feature_logits);
    if (edge_logits) masks.edge = nn::sigmoid(*edge_logits);
    const auto fwd = model.forward(tape, g, masks, true);
    nn::Var loss = nn::scale(nn::pick(fwd.log_probs, 0, static_cast<Eigen::Index>(label)), -1.0);
    loss = nn::add(loss, nn::scale(nn::sum(*masks.feature), cfg.feature_size));
    loss = nn::add(loss, nn::scale(entropy(*masks.feature), cfg.feature_entropy));
    if (masks.edge) {
        loss = nn::add(loss, nn::scale(nn::sum(*masks.edge), cfg.edge_size));
        loss = nn::add(loss, nn::scale(entropy(*masks.edge), cfg.edge_entropy));
    }
    return loss;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool passes(double raw, double normalized, double threshold, ThresholdMode mode)
{
    return (mode == ThresholdMode::raw ? raw : normalized) >= threshold;
}

}  // namespace

std::string_view mode_name(ThresholdMode m) { return m == ThresholdMode::raw ? "raw" : "normalized"; }

ThresholdMode parse_mode(std::string_view s)
{
    if (s == "normalized") return ThresholdMode::normalized;
    if (s == "raw") return ThresholdMode::raw;
    throw ConfigError("unknown threshold mode '" + std::string(s) + "' (expected normalized or raw)");
}

void ExplainConfig::validate() const
{
    if (steps == 0) throw ConfigError("explainer needs at least one optimisation step");
    if (!(lr > 0.0)) throw ConfigError("explainer learning rate must be positive");
    for (double w : {edge_size, feature_size, edge_entropy, feature_entropy, init_std})
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("explainer weights must be finite and non-negative");
    for (double t : {edge_threshold, feature_threshold})
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("selection thresholds must lie in [0, 1]");
}

double objective(gnn::Model& model, const gnn::GraphInput& g, std::size_t label, const Matrix& edge_logits,
                 const Matrix& feature_logits, const ExplainConfig& cfg)
{
    nn::Tape tape;
    std::optional<nn::Var> e;
    if (!g.edges.empty()) e = tape.constant(edge_logits);
    return build_objective(tape, model, g, label, e, tape.constant(feature_logits), cfg).scalar();
}

std::uint64_t graph_seed(std::uint64_t seed, const std::string& graph_id)
{
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : graph_id) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return gnn::derive_seed(seed, h);
}

Explanation explain_graph(gnn::Model& model, const gnn::GraphInput& g, std::size_t label, const std::string& graph_id,
                          const ExplainConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    if (label >= model.config().classes) throw DataError("label out of range for graph " + graph_id);
    const auto nf = g.features.cols();
    const auto ne = static_cast<Eigen::Index>(g.edges.size());
    std::mt19937_64 rng(seed);
    nn::Parameter edge_p("edge_mask", Matrix(ne, 1));
    nn::Parameter feat_p("feature_mask", Matrix(1, nf));
    for (Eigen::Index i = 0; i < ne; ++i) edge_p.value(i, 0) = cfg.init_std * nn::standard_normal(rng);
    for (Eigen::Index i = 0; i < nf; ++i) feat_p.value(0, i) = cfg.init_std * nn::standard_normal(rng);
    edge_p.zero_grad();
    feat_p.zero_grad();

    std::vector<nn::Parameter*> params{&feat_p};
    if (ne > 0) params.push_back(&edge_p);
    nn::Adam opt(cfg.lr);

    Explanation e;
    e.graph_id = graph_id;
    e.label = label;
    e.predicted = model.predict(g);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        nn::Tape tape;
        std::optional<nn::Var> ev;
        if (ne > 0) ev = tape.leaf(edge_p);
        nn::Var loss = build_objective(tape, model, g, label, ev, tape.leaf(feat_p), cfg);
        if (step == 0) e.initial_objective = loss.scalar();
        for (auto* p : params) p->zero_grad();
        tape.backward(loss);
        opt.step(params);
    }
    e.final_objective = objective(model, g, label, edge_p.value, feat_p.value, cfg);
    e.converged = std::isfinite(e.final_objective) && e.final_objective < e.initial_objective;

    for (Eigen::Index i = 0; i < ne; ++i) e.edge_mask.push_back(sigmoid(edge_p.value(i, 0)));
    for (Eigen::Index i = 0; i < nf; ++i) e.feature_mask.push_back(sigmoid(feat_p.value(0, i)));
    if (ne > 0) extract_core_subgraph(e, g.edges, cfg.edge_threshold, cfg.mode);
    return e;
}

std::vector<double> normalize(const std::vector<double>& v)
{
    if (v.empty()) return {};
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    std::vector<double> out(v.size(), 1.0);
    if (*hi > *lo)
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / (*hi - *lo);
    return out;
}

void extract_core_subgraph(Explanation& e, const EdgeList& edges, double threshold, ThresholdMode mode)
{
    if (edges.empty() || edges.size() != e.edge_mask.size())
        throw DataError("edge mask does not match the graph of " + e.graph_id);
    const auto norm = normalize(e.edge_mask);
    std::size_t top = 0;
    for (std::size_t k = 1; k < edges.size(); ++k)
        if (e.edge_mask[k] > e.edge_mask[top]) top = k;

    std::size_t n = 0;
    for (auto [i, j] : edges) n = std::max({n, i + 1, j + 1});
    std::vector<bool> candidate(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) candidate[k] = passes(e.edge_mask[k], norm[k], threshold, mode);

    e.core_nodes.clear();
    e.core_edges.clear();
    if (!candidate[top]) {
        e.core_nodes = {std::min(edges[top].first, edges[top].second), std::max(edges[top].first, edges[top].second)};
        e.core_edges = {top};
        return;
    }
    // Nodes joined to an endpoint of the top edge by a candidate edge lie in
    // its component and within one hop.
    const auto [a, b] = edges[top];
    std::vector<bool> in(n, false);
    in[a] = in[b] = true;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        if (!candidate[k]) continue;
        const auto [i, j] = edges[k];
        if (i == a || i == b) in[j] = true;
        if (j == a || j == b) in[i] = true;
    }
    for (std::size_t v = 0; v < n; ++v)
        if (in[v]) e.core_nodes.push_back(v);
    for (std::size_t k = 0; k < edges.size(); ++k)
        if (candidate[k] && in[edges[k].first] && in[edges[k].second]) e.core_edges.push_back(k);
}

KeyFeatureSelection select_key_features(const std::vector<Explanation>& explanations, double threshold,
                                        ThresholdMode mode)
{
    constexpr std::size_t nf = morpho::kFeatureCount;
    KeyFeatureSelection sel;
    std::array<std::array<double, nf>, geo::kFunctionCount> sums{};
    std::array<std::size_t, geo::kFunctionCount> counts{};
    for (const auto& e : explanations) {
        if (!e.usable()) continue;
        if (e.feature_mask.size() != nf || e.label >= geo::kFunctionCount)
            throw DataError("explanation " + e.graph_id + " has an unexpected shape");
        for (std::size_t f = 0; f < nf; ++f) sums[e.label][f] += e.feature_mask[f];
        ++counts[e.label];
    }
    for (std::size_t c = 0; c < geo::kFunctionCount; ++c) {
        if (counts[c] == 0) {
            sel.skipped.push_back(c);
            continue;
        }
        ClassImportance ci;
        ci.label = c;
        ci.explained = counts[c];
        std::vector<double> mean(nf);
        for (std::size_t f = 0; f < nf; ++f) mean[f] = ci.mean[f] = sums[c][f] / static_cast<double>(counts[c]);
        const auto norm = normalize(mean);
        for (std::size_t f = 0; f < nf; ++f) {
            ci.normalized[f] = norm[f];
            if (passes(mean[f], norm[f], threshold, mode)) ci.key_features.push_back(f);
        }
        sel.classes.push_back(std::move(ci));
    }
    return sel;
}

double probability_without(gnn::Model& model, const gnn::GraphInput& g, std::size_t label,
                           const std::vector<std::size_t>& edge_ids)
{
    gnn::GraphInput cut = g;
    for (std::size_t k : edge_ids) {
        if (k >= g.edges.size()) throw DataError("edge index out of range");
        const auto [i, j] = g.edges[k];
        cut.affinity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
        cut.affinity(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 0.0;
    }
    return model.predict_proba(cut)(0, static_cast<Eigen::Index>(label));
}

nlohmann::ordered_json to_json(const Explanation& e, const EdgeList& edges)
{
    nlohmann::ordered_json j;
    j["graph_id"] = e.graph_id;
    j["label"] = std::string(geo::function_name(static_cast<geo::UrbanFunction>(e.label)));
    j["predicted"] = std::string(geo::function_name(static_cast<geo::UrbanFunction>(e.predicted)));
    j["converged"] = e.converged;
    j["initial_objective"] = e.initial_objective;
    j["final_objective"] = e.final_objective;
    auto em = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < e.edge_mask.size(); ++k)
        em.push_back({edges[k].first, edges[k].second, e.edge_mask[k]});
    j["edge_mask"] = em;
    auto fm = nlohmann::ordered_json::object();
    for (std::size_t f = 0; f < e.feature_mask.size(); ++f) fm[std::string(morpho::feature_name(f))] = e.feature_mask[f];
    j["feature_mask"] = fm;
    j["core_nodes"] = e.core_nodes;
    auto ce = nlohmann::ordered_json::array();
    for (std::size_t k : e.core_edges) ce.push_back({edges[k].first, edges[k].second});
    j["core_edges"] = ce;
    return j;
}

void write_importance_csv(std::ostream& os, const KeyFeatureSelection& sel, ThresholdMode mode)
{
    os.precision(17);
    os << "function,feature,mean_mask,normalized,selected,mode\n";
    for (const auto& c : sel.classes) {
        const auto name = geo::function_name(static_cast<geo::UrbanFunction>(c.label));
        for (std::size_t f = 0; f < morpho::kFeatureCount; ++f) {
            const bool chosen = std::binary_search(c.key_features.begin(), c.key_features.end(), f);
            os << name << ',' << morpho::feature_name(f) << ',' << c.mean[f] << ',' << c.normalized[f] << ','
               << (chosen ? 1 : 0) << ',' << mode_name(mode) << '\n';
        }
    }
}

}  // namespace como::explain
