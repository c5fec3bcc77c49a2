#pragma once

#include <array>
#include <vector>

#include <json.hpp>

#include "geo/dataset.hpp"

namespace como::gnn {

/// counts[pred][true]
using Confusion = std::array<std::array<long long, geo::kFunctionCount>, geo::kFunctionCount>;

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long support = 0;
    long long predicted = 0;
};

struct MetricsReport {
    Confusion confusion{};
    double accuracy = 0.0;
    double micro_precision = 0.0, micro_recall = 0.0, micro_f1 = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
    std::array<ClassMetrics, geo::kFunctionCount> per_class{};
    /// Classes that occur in the truth or the predictions; macro averages
    /// run over these. Undefined precision or recall counts as 0.
    std::vector<std::size_t> present;
};

/// Throws DataError on negative counts or an empty matrix.
MetricsReport evaluate(const Confusion& counts);

nlohmann::ordered_json to_json(const MetricsReport& r);

}  // namespace como::gnn
