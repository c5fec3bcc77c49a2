#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "common/error.hpp"

namespace como::geo {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }
    friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
inline double orient(Point a, Point b, Point c) { return cross(b - a, c - a); }

/// Open ring: the closing vertex is implicit.
using Ring = std::vector<Point>;

/// Planar polygon in projected meters. After `normalize` the exterior is
/// counter-clockwise and holes are clockwise.
struct Polygon {
    Ring exterior;
    std::vector<Ring> holes;
};

/// Raised for zero-area, collinear or otherwise unusable geometry.
class DegenerateGeometry : public Error {
public:
    explicit DegenerateGeometry(const std::string& what) : Error(ErrorKind::degenerate, what) {}
};

double signed_area(std::span<const Point> ring);
double ring_length(std::span<const Point> ring);

/// Drops a repeated closing vertex and consecutive duplicates, then fixes
/// orientation. Throws DegenerateGeometry when fewer than three distinct
/// vertices remain or the area vanishes.
Polygon normalize(Polygon p);

/// True when two non-adjacent edges of the ring touch or cross.
bool self_intersects(std::span<const Point> ring);

struct PolygonBasics {
    double area = 0.0;
    double perimeter = 0.0;
    Point centroid;
    std::vector<double> vertex_radii;
};

/// Area includes hole subtraction; perimeter is the exterior ring only.
PolygonBasics polygon_basics(const Polygon& p);
Point centroid(const Polygon& p);
double area(const Polygon& p);

/// Monotone-chain hull, counter-clockwise, starting at the lexicographically
/// smallest vertex. Collinear boundary points are dropped.
std::vector<Point> convex_hull(std::span<const Point> points);
Polygon convex_hull(const Polygon& p);

/// Wraps an angle into [0, period).
double fold_degrees(double degrees, double period);

struct BoundingRect {
    double length = 0.0;
    double width = 0.0;
    /// Long-axis direction folded into [0, 90).
    double orientation_deg = 0.0;
    std::array<Point, 4> corners{};

    double area() const { return length * width; }
};

/// Minimum-area enclosing rectangle of a counter-clockwise convex hull
/// (rotating calipers).
BoundingRect min_bounding_rect(std::span<const Point> hull);
BoundingRect min_bounding_rect(const Polygon& p);

struct Chord {
    double length = 0.0;
    /// Chord direction folded into [0, 180); ties go to the smaller angle.
    double orientation_deg = 0.0;
    /// Hull extent measured perpendicular to the chord.
    double width = 0.0;
    Point a;
    Point b;
};

/// Hull diameter found from antipodal pairs.
Chord longest_chord(std::span<const Point> hull);
Chord longest_chord(const Polygon& p);

struct Circle {
    Point center;
    double radius = 0.0;

    bool contains(Point p, double rel_tol = 1e-10) const
    {
        return distance(p, center) <= radius * (1.0 + rel_tol) + rel_tol;
    }
};

/// Welzl's move-to-front construction over a seeded shuffle of the input.
Circle smallest_enclosing_circle(std::span<const Point> points, std::uint64_t seed = 0x5eedULL);
Circle smallest_enclosing_circle(const Polygon& p);

/// Circle through two points as diameter, or through three points.
Circle circle_from(Point a, Point b);
Circle circle_from(Point a, Point b, Point c);

/// Crossing-number test. Points exactly on an edge are reported by
/// `on_boundary` when supplied.
bool point_in_ring(Point p, std::span<const Point> ring, bool* on_boundary = nullptr);
bool point_in_polygon(Point p, const Polygon& poly, bool* on_boundary = nullptr);

double point_segment_distance(Point p, Point a, Point b);
/// Distance from p to the nearest point of any ring of the polygon.
double boundary_distance(Point p, const Polygon& poly);
/// Zero inside the polygon, otherwise the boundary distance.
double distance_to_polygon(Point p, const Polygon& poly);

/// Parameter t > 0 of the first crossing of ray origin + t*dir with the ring,
/// or a negative value when the ray misses.
double ray_first_crossing(Point origin, Point dir, std::span<const Point> ring);

/// Sutherland-Hodgman clip of an arbitrary ring against a convex
/// counter-clockwise window. Result may contain zero-width bridges; its
/// signed area is exact.
Ring clip_to_convex(std::span<const Point> subject, std::span<const Point> convex_window);

Polygon translate(const Polygon& p, Point offset);
Polygon rotate(const Polygon& p, double degrees, Point about = {});
Polygon scale(const Polygon& p, double factor, Point about = {});
Polygon regular_polygon(std::size_t n, double radius, Point center = {}, double phase_deg = 0.0);
Polygon rectangle(double width, double height, Point min_corner = {});

struct Box {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    bool intersects(const Box& o) const
    {
        return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
    }
};

Box bounds(const Polygon& p);

}  // namespace como::geo
