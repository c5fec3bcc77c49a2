#include "gnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>

#include "nn/optim.hpp"

namespace como::gnn {

namespace {

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng)
{
    // Fisher-Yates over our own uniform draw, identical on every platform.
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(i));
        std::swap(v[i - 1], v[std::min(j, i - 1)]);
    }
}

std::unique_ptr<nn::Optimizer> make_optimizer(const ModelConfig& cfg)
{
    if (cfg.optimizer == "sgd") return std::make_unique<nn::Sgd>(cfg.lr);
    return std::make_unique<nn::Adam>(cfg.lr);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double accuracy(Model& model, std::span<const GraphInput> set)
{
    if (set.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& g : set) ok += model.predict(g) == g.label;
    return static_cast<double>(ok) / static_cast<double>(set.size());
}

TrainResult train(Model& model, std::span<const GraphInput> train_set, std::span<const GraphInput> val_set,
                  std::uint64_t seed, const EpochCallback& on_epoch)
{
    const ModelConfig& cfg = model.config();
    if (train_set.empty()) throw DataError("training set is empty");
    std::mt19937_64 rng(seed);
    auto opt = make_optimizer(cfg);
    auto params = model.parameters();

    std::vector<Matrix> best;
    for (const auto* p : params) best.push_back(p->value);
    TrainResult result;
    result.best_val_accuracy = -1.0;
    std::size_t since_best = 0;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle(order, rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (auto* p : params) p->zero_grad();
            for (std::size_t b = start; b < stop; ++b) {
                const GraphInput& g = train_set[order[b]];
                nn::Tape tape;
                auto fwd = model.forward(tape, g);
                nn::Var loss = nn::scale(nn::pick(fwd.log_probs, 0, static_cast<Eigen::Index>(g.label)), -inv);
                loss_sum += loss.scalar() / inv;
                tape.backward(loss);
            }
            opt->step(params);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val_accuracy = val_set.empty() ? accuracy(model, train_set) : accuracy(model, val_set);
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.val_accuracy > result.best_val_accuracy) {
            result.best_val_accuracy = rec.val_accuracy;
            result.best_epoch = epoch;
            for (std::size_t i = 0; i < params.size(); ++i) best[i] = params[i]->value;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            result.early_stopped = true;
            break;
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i]->value = best[i];
        params[i]->zero_grad();
    }
    return result;
}

std::vector<std::size_t> stratified_kfold(std::span<const std::size_t> labels, std::size_t k, std::uint64_t seed)
{
    if (k < 2) throw ConfigError("k-fold needs at least two folds");
    if (k > labels.size())
        throw DataError("cannot split " + std::to_string(labels.size()) + " samples into " + std::to_string(k) + " folds");
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> fold(labels.size());
    std::size_t next = 0;
    for (auto& [label, members] : by_class) {
        shuffle(members, rng);
        for (std::size_t m : members) {
            fold[m] = next;
            next = (next + 1) % k;
        }
    }
    return fold;
}

std::vector<Split> make_splits(std::span<const std::size_t> labels, const ModelConfig& cfg, std::uint64_t seed)
{
    const auto fold = stratified_kfold(labels, cfg.folds, seed);
    const double val_share = cfg.split_val / (cfg.split_train + cfg.split_val);
    std::mt19937_64 rng(derive_seed(seed, 1));
    std::vector<Split> splits(cfg.folds);
    for (std::size_t f = 0; f < cfg.folds; ++f) {
        std::map<std::size_t, std::vector<std::size_t>> rest;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (fold[i] == f)
                splits[f].test.push_back(i);
            else
                rest[labels[i]].push_back(i);
        }
        for (auto& [label, members] : rest) {
            shuffle(members, rng);
            const auto nval = static_cast<std::size_t>(std::lround(val_share * static_cast<double>(members.size())));
            for (std::size_t m = 0; m < members.size(); ++m)
                (m < nval ? splits[f].val : splits[f].train).push_back(members[m]);
        }
        std::sort(splits[f].train.begin(), splits[f].train.end());
        std::sort(splits[f].val.begin(), splits[f].val.end());
    }
    return splits;
}

CrossValidation cross_validate(std::span<const graph::MorphGraph> graphs, const ModelConfig& cfg, std::uint64_t seed,
                               const FoldCallback& on_epoch)
{
    cfg.validate();
    std::vector<std::size_t> labels;
    for (const auto& g : graphs) labels.push_back(static_cast<std::size_t>(g.label));
    const std::set<std::size_t> classes(labels.begin(), labels.end());
    if (classes.size() < 2) throw DataError("classification needs at least two classes with samples");

    CrossValidation cv;
    std::map<std::size_t, std::size_t> class_count;
    for (std::size_t l : labels) ++class_count[l];
    for (const auto& [l, c] : class_count)
        if (c < cfg.folds)
            cv.warnings.push_back("class " + std::string(geo::function_name(static_cast<geo::UrbanFunction>(l))) +
                                  " has " + std::to_string(c) + " samples, fewer than " + std::to_string(cfg.folds) +
                                  " folds");

    const auto splits = make_splits(labels, cfg, seed);
    cv.fold_of.assign(graphs.size(), 0);
    cv.predicted.assign(graphs.size(), 0);
    cv.probabilities.assign(graphs.size(), Matrix());
    Confusion total{};
    for (std::size_t f = 0; f < splits.size(); ++f) {
        const Split& s = splits[f];
        std::set<std::size_t> train_classes;
        std::vector<Eigen::MatrixXd> train_feats;
        for (std::size_t i : s.train) {
            train_classes.insert(labels[i]);
            train_feats.push_back(graphs[i].features);
        }
        for (std::size_t c : classes)
            if (!train_classes.count(c))
                cv.warnings.push_back("fold " + std::to_string(f) + ": class " +
                                      std::string(geo::function_name(static_cast<geo::UrbanFunction>(c))) +
                                      " is absent from the training split");
        if (s.train.empty()) throw DataError("fold " + std::to_string(f) + " has no training graphs");

        auto standardizer = morpho::Standardizer::fit(train_feats);
        auto inputs = [&](const std::vector<std::size_t>& idx) {
            std::vector<GraphInput> out;
            for (std::size_t i : idx) out.push_back(make_input(graphs[i], standardizer));
            return out;
        };
        const auto train_in = inputs(s.train), val_in = inputs(s.val), test_in = inputs(s.test);

        Model model(cfg, derive_seed(seed, 100 + f));
        EpochCallback cb;
        if (on_epoch) cb = [&, f](const EpochRecord& r) { on_epoch(f, r); };
        auto training = train(model, train_in, val_in, derive_seed(seed, 200 + f), cb);

        Confusion fold_conf{};
        for (std::size_t t = 0; t < s.test.size(); ++t) {
            const std::size_t i = s.test[t];
            Matrix p = model.predict_proba(test_in[t]);
            Eigen::Index best = 0;
            for (Eigen::Index c = 1; c < p.cols(); ++c)
                if (p(0, c) > p(0, best)) best = c;
            cv.fold_of[i] = f;
            cv.predicted[i] = static_cast<std::size_t>(best);
            cv.probabilities[i] = std::move(p);
            ++fold_conf[static_cast<std::size_t>(best)][labels[i]];
            ++total[static_cast<std::size_t>(best)][labels[i]];
        }
        cv.folds.push_back(FoldOutcome{std::move(model), std::move(standardizer), std::move(training), s, evaluate(fold_conf)});
    }
    cv.aggregate = evaluate(total);
    return cv;
}

}  // namespace como::gnn
