#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "geo/dataset.hpp"
#include "geo/tessellation.hpp"

namespace como::morpho {

using geo::Polygon;

constexpr std::size_t kFeatureCount = 22;

/// Column order of feature vectors, matrices and CSV exports.
enum class Feature : std::size_t {
    area,
    perimeter,
    longest_chord,
    mean_radius,
    sbro,
    lco,
    bisector_orientation,
    weighted_orientation,
    complexity,
    ipq,
    fractality,
    max_circularity,
    gibbs,
    elongation,
    ellipticity,
    concavity,
    dcm,
    exchange,
    bci,
    mu11,
    eccentricity,
    covered_area_ratio,
};

std::string_view feature_name(std::size_t index);
inline std::string_view feature_name(Feature f) { return feature_name(static_cast<std::size_t>(f)); }

struct SizeMetrics {
    double area = 0.0;
    double perimeter = 0.0;
    double longest_chord = 0.0;
    double mean_radius = 0.0;
};

struct OrientationMetrics {
    double sbro = 0.0;
    double lco = 0.0;
    double bisector = 0.0;
    double weighted = 0.0;
};

struct ShapeMetrics {
    double complexity = 0.0;
    double ipq = 0.0;
    double fractality = 0.0;
    double max_circularity = 0.0;
    double gibbs = 0.0;
    double elongation = 0.0;
    double ellipticity = 0.0;
    double concavity = 0.0;
    double dcm = 0.0;
    double exchange = 0.0;
    double bci = 0.0;
    double mu11 = 0.0;
    double eccentricity = 0.0;
    /// Centroid fell outside the polygon; radii came from the vertices.
    bool vertex_radii_fallback = false;
};

SizeMetrics size_metrics(const Polygon& p);
OrientationMetrics orientation_metrics(const Polygon& p);
ShapeMetrics shape_metrics(const Polygon& p);

/// Share of the equal-area circle (centered at the centroid) not covered by
/// the polygon.
double exchange_index(const Polygon& p);

/// Boyce-Clark index over `rays` directions at multiples of 360/rays degrees.
double boyce_clark_index(const Polygon& p, std::size_t rays = 16);

/// Footprint area over tessellation-cell area. Ids must match.
double density_metric(const geo::Building& b, const geo::TessellationCell& cell);

struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    bool vertex_radii_fallback = false;
    /// Covered ratio exceeded 1 (footprint leaving its block) and was clamped.
    bool covered_ratio_clamped = false;

    double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
    double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
};

/// All 22 metrics; `cell_area` is the tessellation-cell area of the building.
FeatureVector compute_features(const Polygon& footprint, double cell_area);

struct BuildingFeatures {
    std::string building_id;
    std::string block_id;
    FeatureVector features;
};

/// Tessellates the block and computes features for `buildings` in order.
std::vector<BuildingFeatures> block_features(const geo::Block& block, std::span<const geo::Building> buildings,
                                             const geo::TessellationOptions& options = {});

/// Rows are buildings, columns follow `Feature`.
Eigen::MatrixXd to_matrix(std::span<const BuildingFeatures> rows);

/// Per-column z-score parameters (population standard deviation).
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
    /// Columns with no spread; they map to zero.
    std::vector<bool> constant;

    static Standardizer fit(std::span<const Eigen::MatrixXd> matrices);
    static Standardizer fit(const Eigen::MatrixXd& matrix);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
};

void write_features_csv(std::ostream& out, std::span<const BuildingFeatures> rows);
std::vector<BuildingFeatures> read_features_csv(std::istream& in);

}  // namespace como::morpho
