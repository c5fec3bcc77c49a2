#include "geo/tessellation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/polygon/voronoi.hpp>

namespace como::geo {

namespace bg = boost::geometry;
namespace bp = boost::polygon;

namespace {

using BPoint = bg::model::d2::point_xy<double>;
using BPoly = bg::model::polygon<BPoint, false, true>;
using BMulti = bg::model::multi_polygon<BPoly>;

// Voronoi sites live on an integer millimeter grid relative to the block.
constexpr double kGridScale = 1000.0;

BPoly to_boost(const Polygon& p, Point origin)
{
    BPoly out;
    for (Point v : p.exterior) out.outer().emplace_back(v.x - origin.x, v.y - origin.y);
    out.outer().push_back(out.outer().front());
    for (const auto& h : p.holes) {
        out.inners().emplace_back();
        for (Point v : h) out.inners().back().emplace_back(v.x - origin.x, v.y - origin.y);
        out.inners().back().push_back(out.inners().back().front());
    }
    bg::correct(out);
    return out;
}

Polygon from_boost(const BPoly& p, Point origin)
{
    auto conv = [&](const auto& ring) {
        Ring r;
        for (const auto& v : ring) r.push_back({v.x() + origin.x, v.y() + origin.y});
        if (r.size() >= 2 && r.front() == r.back()) r.pop_back();
        return r;
    };
    Polygon out;
    out.exterior = conv(p.outer());
    for (const auto& h : p.inners()) out.holes.push_back(conv(h));
    return out;
}

void densify_ring(const Ring& ring, double spacing, std::vector<Point>& out)
{
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point a = ring[i], b = ring[(i + 1) % ring.size()];
        const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(distance(a, b) / spacing)));
        for (std::size_t s = 0; s < steps; ++s) out.push_back(a + (b - a) * (double(s) / double(steps)));
    }
}

// Boundary of the union of the Voronoi cells owned by each building, traced
// as closed rings with the owned region on the left.
std::vector<BMulti> dissolve_regions(const bp::voronoi_diagram<double>& vd, const std::vector<int>& owner,
                                     std::size_t building_count)
{
    using Edge = bp::voronoi_diagram<double>::edge_type;
    auto owner_of = [&](const Edge* e) { return owner[e->cell()->source_index()]; };

    std::vector<std::vector<bg::model::ring<BPoint, false, true>>> rings(building_count);
    std::set<const Edge*> visited;
    for (const auto& cell : vd.cells()) {
        const int b = owner[cell.source_index()];
        if (b < 0) continue;
        const Edge* start = cell.incident_edge();
        const Edge* e = start;
        do {
            if (owner_of(e->twin()) != b && !visited.count(e)) {
                if (!e->is_finite()) throw StageError("tessellation: unbounded cell next to a building");
                bg::model::ring<BPoint, false, true> ring;
                const Edge* cur = e;
                std::size_t guard = 0;
                do {
                    visited.insert(cur);
                    ring.emplace_back(cur->vertex0()->x() / kGridScale, cur->vertex0()->y() / kGridScale);
                    const Edge* nxt = cur->next();
                    while (owner_of(nxt->twin()) == b) {
                        nxt = nxt->twin()->next();
                        if (++guard > 10 * vd.num_edges()) throw StageError("tessellation: ring tracing failed");
                    }
                    cur = nxt;
                    if (++guard > 10 * vd.num_edges()) throw StageError("tessellation: ring tracing failed");
                } while (cur != e);
                ring.push_back(ring.front());
                rings[b].push_back(std::move(ring));
            }
            e = e->next();
        } while (e != start);
    }

    std::vector<BMulti> regions(building_count);
    for (std::size_t b = 0; b < building_count; ++b) {
        std::vector<bg::model::ring<BPoint, false, true>> holes;
        for (auto& r : rings[b]) {
            if (bg::area(r) > 0) {
                BPoly poly;
                poly.outer() = std::move(r);
                regions[b].push_back(std::move(poly));
            } else {
                holes.push_back(std::move(r));
            }
        }
        for (auto& h : holes) {
            for (auto& poly : regions[b]) {
                if (bg::covered_by(h.front(), poly.outer())) {
                    poly.inners().push_back(std::move(h));
                    break;
                }
            }
        }
        bg::correct(regions[b]);
    }
    return regions;
}

}  // namespace

std::vector<TessellationCell> tessellate_block(const Block& block, std::span<const Building> buildings,
                                               const TessellationOptions& options)
{
    if (!(options.spacing > 0.0)) throw ConfigError("tessellation spacing must be positive");
    std::vector<TessellationCell> cells;
    if (buildings.empty()) return cells;

    const Box box = bounds(block.boundary);
    const Point origin{box.min_x, box.min_y};
    const BPoly block_poly = to_boost(block.boundary, origin);

    std::vector<BPoly> footprints;
    std::vector<Box> fboxes;
    for (const auto& b : buildings) {
        footprints.push_back(to_boost(b.footprint, origin));
        fboxes.push_back(bounds(b.footprint));
    }

    std::vector<std::string> overlaps;
    for (std::size_t i = 0; i < buildings.size(); ++i) {
        for (std::size_t j = i + 1; j < buildings.size(); ++j) {
            if (!fboxes[i].intersects(fboxes[j])) continue;
            BMulti inter;
            bg::intersection(footprints[i], footprints[j], inter);
            const double tol = 1e-9 * std::min(bg::area(footprints[i]), bg::area(footprints[j]));
            if (bg::area(inter) > tol) overlaps.push_back(buildings[i].id + "/" + buildings[j].id);
        }
    }
    if (!overlaps.empty()) {
        std::string msg = "block " + block.id + ": overlapping footprints:";
        for (const auto& o : overlaps) msg += " " + o;
        throw DataError(msg);
    }

    // Footprints clipped to the block so the cells partition it exactly.
    std::vector<BMulti> clipped(buildings.size());
    for (std::size_t i = 0; i < buildings.size(); ++i) bg::intersection(footprints[i], block_poly, clipped[i]);

    std::vector<BMulti> regions;
    if (buildings.size() == 1) {
        regions.emplace_back();
        regions[0].push_back(block_poly);
    } else {
        std::vector<bp::point_data<int>> sites;
        std::vector<int> owner;
        std::map<std::pair<int, int>, std::size_t> seen;
        double extent = std::max(box.max_x - box.min_x, box.max_y - box.min_y);
        for (std::size_t i = 0; i < buildings.size(); ++i) {
            std::vector<Point> pts;
            densify_ring(buildings[i].footprint.exterior, options.spacing, pts);
            for (const auto& h : buildings[i].footprint.holes) densify_ring(h, options.spacing, pts);
            for (Point p : pts) {
                const Point local = p - origin;
                extent = std::max({extent, std::abs(local.x), std::abs(local.y)});
                const std::pair<int, int> key{static_cast<int>(std::lround(local.x * kGridScale)),
                                              static_cast<int>(std::lround(local.y * kGridScale))};
                if (!seen.emplace(key, i).second) continue;
                sites.emplace_back(key.first, key.second);
                owner.push_back(static_cast<int>(i));
            }
        }
        if (extent * 6.0 * kGridScale > 2.0e9) throw DataError("block " + block.id + " is too large to tessellate");
        // Far ring of sentinel sites so that every building cell is bounded.
        const double margin = 2.0 * extent + 100.0;
        for (int k = 0; k < 8; ++k) {
            const double a = k * 3.14159265358979323846 / 4.0;
            const double cx = 0.5 * (box.max_x - box.min_x), cy = 0.5 * (box.max_y - box.min_y);
            sites.emplace_back(static_cast<int>(std::lround((cx + 2.0 * margin * std::cos(a)) * kGridScale)),
                               static_cast<int>(std::lround((cy + 2.0 * margin * std::sin(a)) * kGridScale)));
            owner.push_back(-1);
        }
        bp::voronoi_diagram<double> vd;
        bp::construct_voronoi(sites.begin(), sites.end(), &vd);
        regions = dissolve_regions(vd, owner, buildings.size());
    }

    cells.reserve(buildings.size());
    for (std::size_t i = 0; i < buildings.size(); ++i) {
        BMulti cell;
        bg::intersection(regions[i], block_poly, cell);
        for (std::size_t j = 0; j < buildings.size(); ++j) {
            if (j == i || clipped[j].empty()) continue;
            BMulti diff;
            bg::difference(cell, clipped[j], diff);
            cell = std::move(diff);
        }
        BMulti merged;
        bg::union_(cell, clipped[i], merged);

        TessellationCell out;
        out.building_id = buildings[i].id;
        for (const auto& part : merged) {
            if (bg::area(part) <= 0.0) continue;
            out.parts.push_back(from_boost(part, origin));
        }
        out.area = bg::area(merged);
        cells.push_back(std::move(out));
    }
    return cells;
}

}  // namespace como::geo
