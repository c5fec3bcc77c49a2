#include "geo/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <random>

namespace como::geo {

namespace {

constexpr double kBoundaryTol = 1e-9;

double ring_extent(std::span<const Point> ring)
{
    if (ring.empty()) return 0.0;
    double min_x = ring[0].x, max_x = ring[0].x, min_y = ring[0].y, max_y = ring[0].y;
    for (Point p : ring) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    return std::max(max_x - min_x, max_y - min_y);
}

Ring clean_ring(Ring ring)
{
    if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
    Ring out;
    out.reserve(ring.size());
    for (Point p : ring) {
        if (out.empty() || !(out.back() == p)) out.push_back(p);
    }
    while (out.size() >= 2 && out.front() == out.back()) out.pop_back();
    return out;
}

// Centroid and signed area of one ring, accumulated around a local origin.
void ring_moments(std::span<const Point> ring, double& signed_area_out, Point& centroid_out)
{
    const Point o = ring[0];
    double a2 = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point p = ring[i] - o;
        const Point q = ring[(i + 1) % ring.size()] - o;
        const double c = cross(p, q);
        a2 += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    signed_area_out = 0.5 * a2;
    if (a2 == 0.0) {
        centroid_out = o;
        return;
    }
    centroid_out = Point{cx / (3.0 * a2), cy / (3.0 * a2)} + o;
}

bool on_segment(Point p, Point a, Point b)
{
    return point_segment_distance(p, a, b) <= kBoundaryTol;
}

bool segments_touch(Point a, Point b, Point c, Point d)
{
    const double o1 = orient(a, b, c), o2 = orient(a, b, d);
    const double o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
        return true;
    return on_segment(c, a, b) || on_segment(d, a, b) || on_segment(a, c, d) || on_segment(b, c, d);
}

}  // namespace

double signed_area(std::span<const Point> ring)
{
    if (ring.size() < 3) return 0.0;
    const Point o = ring[0];
    double a2 = 0.0;
    for (std::size_t i = 1; i + 1 < ring.size(); ++i) a2 += cross(ring[i] - o, ring[i + 1] - o);
    return 0.5 * a2;
}

double ring_length(std::span<const Point> ring)
{
    double len = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) len += distance(ring[i], ring[(i + 1) % ring.size()]);
    return len;
}

Polygon normalize(Polygon p)
{
    auto fix = [](Ring ring, bool ccw, const char* what) {
        ring = clean_ring(std::move(ring));
        if (ring.size() < 3)
            throw DegenerateGeometry(std::string(what) + " ring has fewer than 3 distinct vertices");
        const double a = signed_area(ring);
        const double ext = ring_extent(ring);
        if (std::abs(a) <= 1e-12 * ext * ext) throw DegenerateGeometry(std::string(what) + " ring has zero area");
        if ((a > 0) != ccw) std::reverse(ring.begin(), ring.end());
        return ring;
    };
    p.exterior = fix(std::move(p.exterior), true, "exterior");
    for (auto& h : p.holes) h = fix(std::move(h), false, "hole");
    return p;
}

bool self_intersects(std::span<const Point> ring)
{
    const std::size_t n = ring.size();
    if (n < 3) return true;
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = ring[i], b = ring[(i + 1) % n], c = ring[(i + 2) % n];
        // Spike: the next edge folds back over this one.
        if (orient(a, b, c) == 0.0 && dot(b - a, c - b) < 0.0) return true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            if (segments_touch(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n])) return true;
        }
    }
    return false;
}

PolygonBasics polygon_basics(const Polygon& p)
{
    if (p.exterior.size() < 3) throw DegenerateGeometry("polygon has fewer than 3 vertices");
    double a_ext = 0.0;
    Point c_ext;
    ring_moments(p.exterior, a_ext, c_ext);
    double total = std::abs(a_ext);
    // Hole moments taken relative to the exterior centroid to avoid
    // cancellation with large projected coordinates.
    Point shift{};
    for (const auto& h : p.holes) {
        double a_h = 0.0;
        Point c_h;
        ring_moments(h, a_h, c_h);
        total -= std::abs(a_h);
        shift = shift - (c_h - c_ext) * std::abs(a_h);
    }
    const double ext = ring_extent(p.exterior);
    if (!(total > 1e-12 * ext * ext)) throw DegenerateGeometry("polygon has zero area");

    PolygonBasics out;
    out.area = total;
    out.perimeter = ring_length(p.exterior);
    out.centroid = c_ext + shift * (1.0 / total);
    out.vertex_radii.reserve(p.exterior.size());
    for (Point v : p.exterior) out.vertex_radii.push_back(distance(v, out.centroid));
    return out;
}

Point centroid(const Polygon& p) { return polygon_basics(p).centroid; }

double area(const Polygon& p)
{
    double a = std::abs(signed_area(p.exterior));
    for (const auto& h : p.holes) a -= std::abs(signed_area(h));
    return a;
}

std::vector<Point> convex_hull(std::span<const Point> points)
{
    std::vector<Point> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) throw DegenerateGeometry("convex hull needs at least 3 distinct points");

    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && orient(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && orient(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    const double ext = ring_extent(hull);
    if (hull.size() < 3 || std::abs(signed_area(hull)) <= 1e-12 * ext * ext)
        throw DegenerateGeometry("all points are collinear");
    return hull;
}

Polygon convex_hull(const Polygon& p) { return Polygon{convex_hull(std::span<const Point>(p.exterior)), {}}; }

double fold_degrees(double degrees, double period)
{
    double r = std::fmod(degrees, period);
    if (r < 0) r += period;
    if (r >= period - 1e-9) r = 0.0;
    return r;
}

BoundingRect min_bounding_rect(std::span<const Point> hull)
{
    const std::size_t m = hull.size();
    if (m < 3) throw DegenerateGeometry("bounding rectangle needs a hull with at least 3 vertices");
    auto next = [m](std::size_t i) { return (i + 1) % m; };

    BoundingRect best;
    double best_area = std::numeric_limits<double>::infinity();
    std::size_t r = 0, t = 0, l = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const Point base = hull[i];
        const Point e = hull[next(i)] - base;
        const double len = norm(e);
        if (len == 0.0) continue;
        const Point u = e * (1.0 / len);
        const Point n{-u.y, u.x};
        auto pu = [&](std::size_t k) { return dot(hull[k] - base, u); };
        auto pn = [&](std::size_t k) { return dot(hull[k] - base, n); };
        if (i == 0) {
            for (std::size_t k = 0; k < m; ++k) {
                if (pu(k) > pu(r)) r = k;
                if (pn(k) > pn(t)) t = k;
                if (pu(k) < pu(l)) l = k;
            }
        } else {
            for (std::size_t s = 0; s < m && pu(next(r)) >= pu(r); ++s) r = next(r);
            for (std::size_t s = 0; s < m && pn(next(t)) >= pn(t); ++s) t = next(t);
            for (std::size_t s = 0; s < m && pu(next(l)) <= pu(l); ++s) l = next(l);
        }
        const double max_u = pu(r), min_u = pu(l), height = pn(t);
        const double span_u = max_u - min_u;
        const double a = span_u * height;
        const double orientation = fold_degrees(std::atan2(u.y, u.x) * 180.0 / std::numbers::pi, 90.0);
        // Equal-area rectangles: the more elongated one wins, then the lower orientation.
        const double aspect = std::max(span_u, height) / std::min(span_u, height);
        const double best_aspect = best.width > 0.0 ? best.length / best.width : 0.0;
        const bool better = a < best_area * (1.0 - 1e-9);
        const bool tie = !better && a <= best_area * (1.0 + 1e-9) &&
                         (aspect > best_aspect * (1.0 + 1e-9) ||
                          (aspect >= best_aspect * (1.0 - 1e-9) && orientation < best.orientation_deg));
        if (better || tie) {
            best_area = std::min(best_area, a);
            best.length = std::max(span_u, height);
            best.width = std::min(span_u, height);
            best.orientation_deg = orientation;
            best.corners = {base + u * min_u, base + u * max_u, base + u * max_u + n * height,
                            base + u * min_u + n * height};
        }
    }
    if (!(best.width > 0.0)) throw DegenerateGeometry("bounding rectangle has zero width");
    return best;
}

BoundingRect min_bounding_rect(const Polygon& p)
{
    const auto hull = convex_hull(std::span<const Point>(p.exterior));
    return min_bounding_rect(hull);
}

Chord longest_chord(std::span<const Point> hull)
{
    const std::size_t m = hull.size();
    if (m < 3) throw DegenerateGeometry("longest chord needs a hull with at least 3 vertices");
    auto next = [m](std::size_t i) { return (i + 1) % m; };

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t j = 1;
    for (std::size_t i = 0; i < m; ++i) {
        const Point a = hull[i], b = hull[next(i)];
        for (std::size_t s = 0; s < m && orient(a, b, hull[next(j)]) > orient(a, b, hull[j]); ++s) j = next(j);
        pairs.emplace_back(i, j);
        pairs.emplace_back(next(i), j);
        if (orient(a, b, hull[next(j)]) == orient(a, b, hull[j])) {
            pairs.emplace_back(i, next(j));
            pairs.emplace_back(next(i), next(j));
        }
    }
    double max_len = 0.0;
    for (auto [p, q] : pairs) max_len = std::max(max_len, distance(hull[p], hull[q]));

    Chord best;
    best.orientation_deg = std::numeric_limits<double>::infinity();
    for (auto [p, q] : pairs) {
        const double len = distance(hull[p], hull[q]);
        if (len < max_len * (1.0 - 1e-12)) continue;
        const Point d = hull[q] - hull[p];
        const double ori = fold_degrees(std::atan2(d.y, d.x) * 180.0 / std::numbers::pi, 180.0);
        if (ori < best.orientation_deg) {
            best.length = max_len;
            best.orientation_deg = ori;
            best.a = hull[p];
            best.b = hull[q];
        }
    }
    if (!(best.length > 0.0)) throw DegenerateGeometry("hull has zero diameter");
    const double rad = best.orientation_deg * std::numbers::pi / 180.0;
    const Point perp{-std::sin(rad), std::cos(rad)};
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Point v : hull) {
        const double s = dot(v - best.a, perp);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    best.width = hi - lo;
    return best;
}

Chord longest_chord(const Polygon& p)
{
    const auto hull = convex_hull(std::span<const Point>(p.exterior));
    return longest_chord(hull);
}

Circle circle_from(Point a, Point b) { return Circle{(a + b) * 0.5, 0.5 * distance(a, b)}; }

Circle circle_from(Point a, Point b, Point c)
{
    const Point ab = b - a, ac = c - a;
    const double d = 2.0 * cross(ab, ac);
    const double scale = std::max({norm(ab), norm(ac), norm(c - b)});
    if (std::abs(d) <= 1e-14 * scale * scale) {
        Circle best = circle_from(a, b);
        for (const Circle& cand : {circle_from(a, c), circle_from(b, c)})
            if (cand.radius > best.radius) best = cand;
        return best;
    }
    const double ab2 = dot(ab, ab), ac2 = dot(ac, ac);
    const Point center{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
    return Circle{a + center, norm(center)};
}

Circle smallest_enclosing_circle(std::span<const Point> points, std::uint64_t seed)
{
    if (points.empty()) throw DegenerateGeometry("enclosing circle of an empty point set");
    const Point origin = points[0];
    std::vector<Point> pts;
    pts.reserve(points.size());
    for (Point p : points) pts.push_back(p - origin);
    std::mt19937_64 rng(seed);
    std::shuffle(pts.begin(), pts.end(), rng);

    Circle c{pts[0], 0.0};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (c.contains(pts[i], 1e-12)) continue;
        c = Circle{pts[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (c.contains(pts[j], 1e-12)) continue;
            c = circle_from(pts[i], pts[j]);
            for (std::size_t k = 0; k < j; ++k) {
                if (c.contains(pts[k], 1e-12)) continue;
                c = circle_from(pts[i], pts[j], pts[k]);
            }
        }
    }
    c.center = c.center + origin;
    return c;
}

Circle smallest_enclosing_circle(const Polygon& p) { return smallest_enclosing_circle(std::span<const Point>(p.exterior)); }

bool point_in_ring(Point p, std::span<const Point> ring, bool* on_boundary)
{
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point a = ring[i], b = ring[j];
        if (on_boundary && on_segment(p, a, b)) {
            *on_boundary = true;
            return true;
        }
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

bool point_in_polygon(Point p, const Polygon& poly, bool* on_boundary)
{
    if (on_boundary) *on_boundary = false;
    if (!point_in_ring(p, poly.exterior, on_boundary)) return false;
    if (on_boundary && *on_boundary) return true;
    for (const auto& h : poly.holes) {
        bool hb = false;
        const bool in_hole = point_in_ring(p, h, on_boundary ? &hb : nullptr);
        if (hb) {
            *on_boundary = true;
            return true;
        }
        if (in_hole) return false;
    }
    return true;
}

double point_segment_distance(Point p, Point a, Point b)
{
    const Point ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return distance(p, a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + ab * t);
}

double boundary_distance(Point p, const Polygon& poly)
{
    double best = std::numeric_limits<double>::infinity();
    auto scan = [&](const Ring& ring) {
        for (std::size_t i = 0; i < ring.size(); ++i)
            best = std::min(best, point_segment_distance(p, ring[i], ring[(i + 1) % ring.size()]));
    };
    scan(poly.exterior);
    for (const auto& h : poly.holes) scan(h);
    return best;
}

double distance_to_polygon(Point p, const Polygon& poly)
{
    return point_in_polygon(p, poly) ? 0.0 : boundary_distance(p, poly);
}

double ray_first_crossing(Point origin, Point dir, std::span<const Point> ring)
{
    double best = -1.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point a = ring[i];
        const Point e = ring[(i + 1) % ring.size()] - a;
        const double denom = cross(dir, e);
        if (std::abs(denom) < 1e-15 * norm(e) * norm(dir)) continue;
        const Point ao = a - origin;
        const double t = cross(ao, e) / denom;
        const double s = cross(ao, dir) / denom;
        if (t > 1e-12 && s >= -1e-12 && s <= 1.0 + 1e-12 && (best < 0 || t < best)) best = t;
    }
    return best;
}

Ring clip_to_convex(std::span<const Point> subject, std::span<const Point> convex_window)
{
    Ring out(subject.begin(), subject.end());
    const std::size_t w = convex_window.size();
    for (std::size_t i = 0; i < w && !out.empty(); ++i) {
        const Point a = convex_window[i], b = convex_window[(i + 1) % w];
        Ring in = std::move(out);
        out.clear();
        for (std::size_t k = 0; k < in.size(); ++k) {
            const Point p = in[k], q = in[(k + 1) % in.size()];
            const double sp = orient(a, b, p), sq = orient(a, b, q);
            if (sp >= 0) out.push_back(p);
            if ((sp >= 0) != (sq >= 0)) out.push_back(p + (q - p) * (sp / (sp - sq)));
        }
    }
    return out;
}

Polygon translate(const Polygon& p, Point offset)
{
    Polygon out = p;
    for (auto& v : out.exterior) v = v + offset;
    for (auto& h : out.holes)
        for (auto& v : h) v = v + offset;
    return out;
}

Polygon rotate(const Polygon& p, double degrees, Point about)
{
    const double r = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(r), s = std::sin(r);
    auto rot = [&](Point v) {
        const Point d = v - about;
        return Point{about.x + c * d.x - s * d.y, about.y + s * d.x + c * d.y};
    };
    Polygon out = p;
    for (auto& v : out.exterior) v = rot(v);
    for (auto& h : out.holes)
        for (auto& v : h) v = rot(v);
    return out;
}

Polygon scale(const Polygon& p, double factor, Point about)
{
    Polygon out = p;
    auto sc = [&](Point v) { return about + (v - about) * factor; };
    for (auto& v : out.exterior) v = sc(v);
    for (auto& h : out.holes)
        for (auto& v : h) v = sc(v);
    return out;
}

Polygon regular_polygon(std::size_t n, double radius, Point center, double phase_deg)
{
    Polygon p;
    p.exterior.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double a = phase_deg * std::numbers::pi / 180.0 + 2.0 * std::numbers::pi * double(k) / double(n);
        p.exterior.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return p;
}

Polygon rectangle(double width, double height, Point min_corner)
{
    return Polygon{{min_corner,
                    {min_corner.x + width, min_corner.y},
                    {min_corner.x + width, min_corner.y + height},
                    {min_corner.x, min_corner.y + height}},
                   {}};
}

Box bounds(const Polygon& p)
{
    Box b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (Point v : p.exterior) {
        b.min_x = std::min(b.min_x, v.x);
        b.min_y = std::min(b.min_y, v.y);
        b.max_x = std::max(b.max_x, v.x);
        b.max_y = std::max(b.max_y, v.y);
    }
    return b;
}

}  // namespace como::geo
