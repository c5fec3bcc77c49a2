#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gnn/metrics.hpp"
#include "gnn/model.hpp"

namespace como::gnn {

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_accuracy = 0.0;
    bool early_stopped = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch training on mean cross-entropy. Gradients of a batch are
/// accumulated graph by graph in batch order. Stops after `patience` epochs
/// without a strict gain in validation accuracy and restores the best
/// parameters. With an empty validation set, training accuracy is used.
TrainResult train(Model& model, std::span<const GraphInput> train_set, std::span<const GraphInput> val_set,
                  std::uint64_t seed, const EpochCallback& on_epoch = {});

double accuracy(Model& model, std::span<const GraphInput> set);

/// Fold index per sample; each class is shuffled and dealt round-robin,
/// continuing the rotation across classes. Throws when k exceeds the
/// sample count.
std::vector<std::size_t> stratified_kfold(std::span<const std::size_t> labels, std::size_t k, std::uint64_t seed);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Fold f tests on its own members; the rest is split per class into
/// train and validation in the configured train:val ratio.
std::vector<Split> make_splits(std::span<const std::size_t> labels, const ModelConfig& cfg, std::uint64_t seed);

struct FoldOutcome {
    Model model;
    morpho::Standardizer standardizer;
    TrainResult training;
    Split split;
    MetricsReport metrics;
};

struct CrossValidation {
    std::vector<FoldOutcome> folds;
    /// Per graph: the fold that tested it, its prediction and probabilities.
    std::vector<std::size_t> fold_of;
    std::vector<std::size_t> predicted;
    std::vector<Matrix> probabilities;
    MetricsReport aggregate;
    std::vector<std::string> warnings;
};

using FoldCallback = std::function<void(std::size_t fold, const EpochRecord&)>;

/// Stratified k-fold training and evaluation. Standardization is fitted on
/// each fold's training graphs.
CrossValidation cross_validate(std::span<const graph::MorphGraph> graphs, const ModelConfig& cfg, std::uint64_t seed,
                               const FoldCallback& on_epoch = {});

/// Deterministic child seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace como::gnn
