#include "graph/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace como::graph {

namespace {

using Tri = std::array<std::size_t, 3>;

// Positive when d lies strictly inside the circumcircle of ccw (a, b, c).
double incircle(Point a, Point b, Point c, Point d, double& magnitude)
{
    const Point ad = a - d, bd = b - d, cd = c - d;
    const double a2 = geo::dot(ad, ad), b2 = geo::dot(bd, bd), c2 = geo::dot(cd, cd);
    const double t1 = a2 * geo::cross(bd, cd), t2 = b2 * geo::cross(cd, ad), t3 = c2 * geo::cross(ad, bd);
    magnitude = std::abs(t1) + std::abs(t2) + std::abs(t3);
    return t1 + t2 + t3;
}

std::vector<Tri> sweep(std::span<const Point> pts, const std::vector<std::size_t>& order, std::size_t first_apex)
{
    std::vector<Tri> tris;
    std::vector<std::size_t> hull;
    const std::size_t k = first_apex;
    const Point p0 = pts[order[0]], pk = pts[order[k]];
    if (geo::orient(p0, pts[order[k - 1]], pk) > 0) {
        for (std::size_t i = 0; i + 1 < k; ++i) tris.push_back({order[i], order[i + 1], order[k]});
        for (std::size_t i = 0; i <= k; ++i) hull.push_back(order[i]);
    } else {
        for (std::size_t i = 0; i + 1 < k; ++i) tris.push_back({order[i + 1], order[i], order[k]});
        hull.push_back(order[0]);
        for (std::size_t i = k; i >= 1; --i) hull.push_back(order[i]);
    }

    for (std::size_t s = k + 1; s < order.size(); ++s) {
        const std::size_t pi = order[s];
        const Point p = pts[pi];
        const std::size_t h = hull.size();
        std::vector<bool> visible(h);
        for (std::size_t e = 0; e < h; ++e) visible[e] = geo::orient(pts[hull[e]], pts[hull[(e + 1) % h]], p) < 0;
        // Rotate so the visible run starts at index `start` and does not wrap.
        std::size_t start = 0;
        while (!(visible[start] && !visible[(start + h - 1) % h])) ++start;
        std::size_t count = 0;
        while (visible[(start + count) % h]) {
            const std::size_t a = hull[(start + count) % h], b = hull[(start + count + 1) % h];
            tris.push_back({b, a, pi});
            ++count;
        }
        // Drop the interior vertices of the visible chain and splice p in.
        std::vector<std::size_t> next;
        next.reserve(h + 1);
        for (std::size_t i = 0; i <= h - count; ++i) next.push_back(hull[(start + count + i) % h]);
        next.push_back(pi);
        hull = std::move(next);
    }
    return tris;
}

void legalize(std::span<const Point> pts, std::vector<Tri>& tris)
{
    using Key = std::pair<std::size_t, std::size_t>;
    bool changed = true;
    std::size_t guard = 0;
    while (changed) {
        changed = false;
        std::map<Key, std::vector<std::size_t>> owners;
        for (std::size_t t = 0; t < tris.size(); ++t)
            for (int e = 0; e < 3; ++e) {
                const std::size_t a = tris[t][e], b = tris[t][(e + 1) % 3];
                owners[{std::min(a, b), std::max(a, b)}].push_back(t);
            }
        std::vector<bool> touched(tris.size(), false);
        for (const auto& [key, ts] : owners) {
            if (ts.size() != 2 || touched[ts[0]] || touched[ts[1]]) continue;
            const Tri& t1 = tris[ts[0]];
            const Tri& t2 = tris[ts[1]];
            auto apex = [&](const Tri& t) {
                for (std::size_t v : t)
                    if (v != key.first && v != key.second) return v;
                return t[0];
            };
            const std::size_t c = apex(t1), d = apex(t2);
            // Orient the shared edge as a -> b inside t1.
            std::size_t a = key.first, b = key.second;
            for (int e = 0; e < 3; ++e)
                if (t1[e] == key.second && t1[(e + 1) % 3] == key.first) std::swap(a, b);
            double mag = 0.0;
            const double det = incircle(pts[a], pts[b], pts[c], pts[d], mag);
            if (!(det > 1e-12 * mag)) continue;
            tris[ts[0]] = {a, d, c};
            tris[ts[1]] = {d, b, c};
            touched[ts[0]] = touched[ts[1]] = true;
            changed = true;
        }
        if (++guard > 10 * pts.size() * pts.size() + 100) throw StageError("delaunay: edge flipping did not terminate");
    }
}

}  // namespace

Triangulation delaunay(std::span<const Point> input, double duplicate_tol)
{
    const std::size_t n = input.size();
    if (n < 2) throw DataError("triangulation needs at least two points");

    // Local frame keeps the predicates away from projected-coordinate magnitudes.
    std::vector<Point> pts(input.begin(), input.end());
    const Point shift = pts[0];
    for (auto& p : pts) p = p - shift;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return pts[i].x < pts[j].x || (pts[i].x == pts[j].x && pts[i].y < pts[j].y);
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n && pts[order[j]].x - pts[order[i]].x < duplicate_tol; ++j)
            if (geo::distance(pts[order[i]], pts[order[j]]) < duplicate_tol)
                throw DataError("duplicate points " + std::to_string(order[i]) + " and " + std::to_string(order[j]));

    Triangulation out;
    std::size_t apex = 2;
    while (apex < n && geo::orient(pts[order[0]], pts[order[1]], pts[order[apex]]) == 0.0) ++apex;
    if (apex == n) {
        out.collinear_fallback = true;
        for (std::size_t i = 0; i + 1 < n; ++i)
            out.edges.emplace_back(std::min(order[i], order[i + 1]), std::max(order[i], order[i + 1]));
        std::sort(out.edges.begin(), out.edges.end());
        return out;
    }

    out.triangles = sweep(pts, order, apex);
    legalize(pts, out.triangles);
    for (const auto& t : out.triangles)
        for (int e = 0; e < 3; ++e) {
            const std::size_t a = t[e], b = t[(e + 1) % 3];
            out.edges.emplace_back(std::min(a, b), std::max(a, b));
        }
    std::sort(out.edges.begin(), out.edges.end());
    out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
    return out;
}

}  // namespace como::graph
