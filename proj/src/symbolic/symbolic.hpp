#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geo/dataset.hpp"

namespace como::symbolic {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Embedding {
    /// n x 2
    MatrixXd points;
    /// d x 2 loadings; each column's largest-magnitude entry is positive.
    MatrixXd components;
    VectorXd mean;
    /// Share of total variance along each axis.
    double explained[2] = {0.0, 0.0};
    /// Data of rank below 2; the second axis is zero.
    bool rank_deficient = false;
};

/// Interface for 2-D reducers.
class Reducer {
public:
    virtual ~Reducer() = default;
    virtual Embedding fit(const MatrixXd& x) const = 0;
};

/// Principal-component projection.
class PcaReducer : public Reducer {
public:
    Embedding fit(const MatrixXd& x) const override;
};

/// PCA with the default reducer. Needs at least two rows and two columns.
Embedding reduce_2d(const MatrixXd& x);

struct Clustering {
    /// Type id per row, 1..k, ordered by centroid (first axis, then second).
    std::vector<int> types;
    /// k x d, row t-1 is type t.
    MatrixXd centroids;
    double inertia = 0.0;
};

/// k-means++ seeded Lloyd iterations, best inertia over `restarts` runs.
/// Throws DataError with fewer than k rows.
Clustering cluster_types(const MatrixXd& points, std::size_t k, std::uint64_t seed, std::size_t restarts = 50);

struct DominanceThresholds {
    double general = 0.50;
    double residential = 0.60;
    std::size_t min_count = 2;

    double for_function(geo::UrbanFunction f) const
    {
        return f == geo::UrbanFunction::residential ? residential : general;
    }
};

struct ConfigurationType {
    std::string block_id;
    /// 0 for diverse.
    int dominant_type = 0;
    double share = 0.0;
    std::size_t core_count = 0;

    bool dominant() const { return dominant_type > 0; }
    /// "T5-Dom" or "Diverse".
    std::string kind() const;
};

/// Dominant when the most frequent type (ties to the lower id) reaches the
/// function's share threshold and has at least `min_count` members.
ConfigurationType classify_configuration(std::span<const int> core_types, geo::UrbanFunction function,
                                         const DominanceThresholds& thresholds = {});

struct BlockConfiguration {
    ConfigurationType config;
    geo::Polygon boundary;
};

struct NeighborhoodSummary {
    std::string neighborhood_id;
    std::string name;
    std::string representative;
    std::map<std::string, std::size_t> histogram;
    std::size_t blocks = 0;
};

struct RegionalResult {
    std::vector<NeighborhoodSummary> neighborhoods;
    /// Neighborhoods that received no block, and blocks outside all of them.
    std::vector<std::string> empty_neighborhoods;
    std::vector<std::string> unassigned_blocks;
};

/// Modal configuration kind per neighborhood; ties prefer dominant kinds,
/// then the lower type id. Blocks go to the first neighborhood containing
/// their boundary centroid.
RegionalResult regional_representative(const std::vector<geo::Neighborhood>& neighborhoods,
                                       const std::vector<BlockConfiguration>& blocks);

}  // namespace como::symbolic
