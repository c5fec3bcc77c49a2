#include "morpho/morphometrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace como::morpho {

using geo::DegenerateGeometry;
using geo::Point;
using geo::Ring;

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "area",       "perimeter",   "longest_chord", "mean_radius", "sbro",      "lco",
    "bisector_orientation",      "weighted_orientation",         "complexity", "ipq",
    "fractality", "max_circularity",              "gibbs",       "elongation", "ellipticity",
    "concavity",  "dcm",         "exchange",      "bci",         "mu11",      "eccentricity",
    "covered_area_ratio"};


double checked_ratio(double num, double den, const char* what)
{
    if (!(std::abs(den) > 0.0) || !std::isfinite(den)) throw DegenerateGeometry(std::string(what) + ": zero denominator");
    return num / den;
}

// Every metric is translation invariant; work near the origin to keep
// projected coordinates from eating precision.
Polygon localize(const Polygon& p)
{
    const Point c = geo::centroid(p);
    return geo::translate(p, Point{} - c);
}

struct Radii {
    double r_min = 0.0;
    double r_max = 0.0;
    bool fallback = false;
};

Radii boundary_radii(const Polygon& p, Point c, std::span<const double> vertex_radii)
{
    Radii r;
    if (!geo::point_in_polygon(c, p)) {
        r.fallback = true;
        r.r_min = *std::min_element(vertex_radii.begin(), vertex_radii.end());
        r.r_max = *std::max_element(vertex_radii.begin(), vertex_radii.end());
        return r;
    }
    // The farthest boundary point of a segment is one of its ends.
    r.r_max = *std::max_element(vertex_radii.begin(), vertex_radii.end());
    r.r_min = geo::boundary_distance(c, p);
    return r;
}

// Signed area of ring ∩ disc: each edge's triangle with the centre is split
// where the edge crosses the circle; inner pieces count as triangles, outer
// pieces as circular sectors.
double disc_overlap(const geo::Ring& ring, Point centre, double r)
{
    auto piece = [r](Point a, Point b) {
        const Point mid = (a + b) * 0.5;
        if (geo::dot(mid, mid) <= r * r) return 0.5 * geo::cross(a, b);
        return 0.5 * r * r * std::atan2(geo::cross(a, b), geo::dot(a, b));
    };
    double total = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point a = ring[i] - centre, b = ring[(i + 1) % ring.size()] - centre;
        const Point d = b - a;
        const double qa = geo::dot(d, d), qb = 2.0 * geo::dot(a, d), qc = geo::dot(a, a) - r * r;
        std::vector<double> cuts{0.0};
        const double disc = qb * qb - 4.0 * qa * qc;
        if (qa > 0.0 && disc > 0.0) {
            const double sq = std::sqrt(disc);
            for (double t : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)})
                if (t > 0.0 && t < 1.0) cuts.push_back(t);
        }
        cuts.push_back(1.0);
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) total += piece(a + d * cuts[k], a + d * cuts[k + 1]);
    }
    return total;
}

}  // namespace

std::string_view feature_name(std::size_t index) { return kNames.at(index); }

SizeMetrics size_metrics(const Polygon& input)
{
    const Polygon p = localize(input);
    const auto basics = geo::polygon_basics(p);
    SizeMetrics s;
    s.area = basics.area;
    s.perimeter = basics.perimeter;
    s.longest_chord = geo::longest_chord(p).length;
    double sum = 0.0;
    for (double r : basics.vertex_radii) sum += r;
    s.mean_radius = sum / static_cast<double>(basics.vertex_radii.size());
    return s;
}

OrientationMetrics orientation_metrics(const Polygon& input)
{
    const Polygon p = localize(input);
    OrientationMetrics o;
    o.sbro = geo::min_bounding_rect(p).orientation_deg;
    o.lco = geo::longest_chord(p).orientation_deg;
    o.bisector = geo::fold_degrees(o.lco + 90.0, 180.0);

    // Edge directions live on a 90 degree circle, so average them as 4x angles.
    double c = 0.0, s = 0.0;
    const Ring& ring = p.exterior;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point d = ring[(i + 1) % ring.size()] - ring[i];
        const double len = geo::norm(d);
        if (len == 0.0) continue;
        const double theta = 4.0 * std::atan2(d.y, d.x);
        c += len * std::cos(theta);
        s += len * std::sin(theta);
    }
    const double mean = std::atan2(s, c) / 4.0 * 180.0 / std::numbers::pi;
    o.weighted = geo::fold_degrees(mean, 90.0);
    return o;
}

double exchange_index(const Polygon& input)
{
    const Polygon p = localize(input);
    const auto basics = geo::polygon_basics(p);
    const double radius = std::sqrt(basics.area / std::numbers::pi);
    double inter = disc_overlap(p.exterior, basics.centroid, radius);
    for (const auto& h : p.holes) inter += disc_overlap(h, basics.centroid, radius);
    const double ratio = std::clamp(inter / basics.area, 0.0, 1.0);
    return 1.0 - ratio;
}

double boyce_clark_index(const Polygon& input, std::size_t rays)
{
    const Polygon p = localize(input);
    if (rays == 0) throw ConfigError("ray count must be positive");
    const Point c = geo::centroid(p);
    std::vector<double> r(rays);
    double total = 0.0;
    for (std::size_t k = 0; k < rays; ++k) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(rays);
        const double t = geo::ray_first_crossing(c, {std::cos(a), std::sin(a)}, p.exterior);
        // Only possible when the centroid lies outside the polygon.
        r[k] = std::max(t, 0.0);
        total += r[k];
    }
    if (!(total > 0.0)) throw DegenerateGeometry("boyce-clark rays miss the polygon");
    double bci = 0.0;
    for (double rk : r) bci += std::abs(100.0 * rk / total - 100.0 / static_cast<double>(rays));
    return bci;
}

ShapeMetrics shape_metrics(const Polygon& input)
{
    const Polygon p = localize(input);
    const auto basics = geo::polygon_basics(p);
    const double a = basics.area, per = basics.perimeter;
    const auto rect = geo::min_bounding_rect(p);
    const auto chord = geo::longest_chord(p);
    const double hull_area = geo::area(geo::convex_hull(p));
    const auto scc = geo::smallest_enclosing_circle(p);
    const Radii radii = boundary_radii(p, basics.centroid, basics.vertex_radii);

    ShapeMetrics s;
    s.complexity = checked_ratio(a, per, "complexity");
    s.ipq = checked_ratio(4.0 * std::numbers::pi * a, per * per, "ipq");
    if (!(a > 1.0)) throw DegenerateGeometry("fractality needs an area above 1 m2");
    s.fractality = 1.0 - checked_ratio(std::log(a), 2.0 * std::log(per), "fractality");
    s.max_circularity = checked_ratio(std::sqrt(a / std::numbers::pi), radii.r_max, "max circularity");
    s.gibbs = checked_ratio(4.0 * a, std::numbers::pi * chord.length * chord.length, "gibbs");
    s.elongation = checked_ratio(rect.length, rect.width, "elongation");
    s.ellipticity = checked_ratio(chord.width, chord.length, "ellipticity");
    s.concavity = std::min(1.0, checked_ratio(a, hull_area, "concavity"));
    s.dcm = std::min(1.0, checked_ratio(a, std::numbers::pi * scc.radius * scc.radius, "dcm"));
    s.exchange = exchange_index(p);
    s.bci = boyce_clark_index(p);
    for (Point v : p.exterior) s.mu11 += (v.x - basics.centroid.x) * (v.y - basics.centroid.y);
    s.eccentricity = checked_ratio(radii.r_max, radii.r_min, "eccentricity");
    s.vertex_radii_fallback = radii.fallback;
    return s;
}

double density_metric(const geo::Building& b, const geo::TessellationCell& cell)
{
    if (b.id != cell.building_id)
        throw DataError("tessellation cell '" + cell.building_id + "' does not belong to building '" + b.id + "'");
    return std::min(1.0, checked_ratio(geo::area(b.footprint), cell.area, "covered area ratio"));
}

FeatureVector compute_features(const Polygon& footprint, double cell_area)
{
    const auto size = size_metrics(footprint);
    const auto orient = orientation_metrics(footprint);
    const auto shape = shape_metrics(footprint);
    FeatureVector f;
    f[Feature::area] = size.area;
    f[Feature::perimeter] = size.perimeter;
    f[Feature::longest_chord] = size.longest_chord;
    f[Feature::mean_radius] = size.mean_radius;
    f[Feature::sbro] = orient.sbro;
    f[Feature::lco] = orient.lco;
    f[Feature::bisector_orientation] = orient.bisector;
    f[Feature::weighted_orientation] = orient.weighted;
    f[Feature::complexity] = shape.complexity;
    f[Feature::ipq] = shape.ipq;
    f[Feature::fractality] = shape.fractality;
    f[Feature::max_circularity] = shape.max_circularity;
    f[Feature::gibbs] = shape.gibbs;
    f[Feature::elongation] = shape.elongation;
    f[Feature::ellipticity] = shape.ellipticity;
    f[Feature::concavity] = shape.concavity;
    f[Feature::dcm] = shape.dcm;
    f[Feature::exchange] = shape.exchange;
    f[Feature::bci] = shape.bci;
    f[Feature::mu11] = shape.mu11;
    f[Feature::eccentricity] = shape.eccentricity;
    const double ratio = checked_ratio(size.area, cell_area, "covered area ratio");
    f.covered_ratio_clamped = ratio > 1.0 + 1e-9;
    f[Feature::covered_area_ratio] = std::min(1.0, ratio);
    f.vertex_radii_fallback = shape.vertex_radii_fallback;
    for (double v : f.values)
        if (!std::isfinite(v)) throw DegenerateGeometry("non-finite morphometric");
    return f;
}

std::vector<BuildingFeatures> block_features(const geo::Block& block, std::span<const geo::Building> buildings,
                                             const geo::TessellationOptions& options)
{
    const auto cells = geo::tessellate_block(block, buildings, options);
    std::vector<BuildingFeatures> out;
    out.reserve(buildings.size());
    for (std::size_t i = 0; i < buildings.size(); ++i) {
        BuildingFeatures row;
        row.building_id = buildings[i].id;
        row.block_id = block.id;
        try {
            row.features = compute_features(buildings[i].footprint, cells[i].area);
        } catch (const DegenerateGeometry& e) {
            throw DegenerateGeometry("building '" + buildings[i].id + "': " + e.what());
        }
        out.push_back(std::move(row));
    }
    return out;
}

Eigen::MatrixXd to_matrix(std::span<const BuildingFeatures> rows)
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kFeatureCount));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].features.values[j];
    return m;
}

Standardizer Standardizer::fit(std::span<const Eigen::MatrixXd> matrices)
{
    if (matrices.empty()) throw DataError("cannot fit standardization on an empty corpus");
    const Eigen::Index cols = matrices.front().cols();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(cols);
    double count = 0.0;
    for (const auto& m : matrices) {
        if (m.cols() != cols) throw DataError("feature matrices disagree on column count");
        for (Eigen::Index i = 0; i < m.rows(); ++i) sum += m.row(i).transpose();
        count += static_cast<double>(m.rows());
    }
    if (count == 0.0) throw DataError("cannot fit standardization on zero rows");
    Standardizer s;
    s.mean = sum / count;
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(cols);
    for (const auto& m : matrices)
        for (Eigen::Index i = 0; i < m.rows(); ++i) sq += (m.row(i).transpose() - s.mean).cwiseAbs2();
    s.stddev = (sq / count).cwiseSqrt();
    s.constant.resize(static_cast<std::size_t>(cols));
    for (Eigen::Index j = 0; j < cols; ++j)
        s.constant[static_cast<std::size_t>(j)] = !(s.stddev(j) > 1e-12 * std::max(1.0, std::abs(s.mean(j))));
    return s;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& matrix) { return fit(std::span<const Eigen::MatrixXd>(&matrix, 1)); }

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& raw) const
{
    if (raw.cols() != mean.size()) throw DataError("feature matrix width does not match standardization");
    Eigen::MatrixXd out(raw.rows(), raw.cols());
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        if (constant[static_cast<std::size_t>(j)])
            out.col(j).setZero();
        else
            out.col(j) = (raw.col(j).array() - mean(j)) / stddev(j);
    }
    return out;
}

void write_features_csv(std::ostream& out, std::span<const BuildingFeatures> rows)
{
    out << "id,block_id";
    for (auto n : kNames) out << ',' << n;
    out << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows) {
        out << r.building_id << ',' << r.block_id;
        for (double v : r.features.values) out << ',' << v;
        out << '\n';
    }
}

std::vector<BuildingFeatures> read_features_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw DataError("features csv is empty");
    std::vector<BuildingFeatures> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != kFeatureCount + 2)
            throw DataError("features csv line " + std::to_string(lineno) + ": expected " +
                            std::to_string(kFeatureCount + 2) + " fields");
        BuildingFeatures r;
        r.building_id = cells[0];
        r.block_id = cells[1];
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            try {
                r.features.values[j] = std::stod(cells[j + 2]);
            } catch (const std::exception&) {
                throw DataError("features csv line " + std::to_string(lineno) + ": bad number '" + cells[j + 2] + "'");
            }
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace como::morpho
