#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "geo/geometry.hpp"

namespace como::graph {

using geo::Point;

struct Triangulation {
    /// Counter-clockwise vertex triples, indices into the input.
    std::vector<std::array<std::size_t, 3>> triangles;
    /// Undirected edges (i < j), sorted.
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    /// Input was collinear; edges form a path in lexicographic point order.
    bool collinear_fallback = false;
};

/// Delaunay triangulation by a lexicographic sweep followed by Lawson flips.
/// Exactly cocircular quads keep the sweep's diagonal.
///
/// Throws DataError for points closer than `duplicate_tol` and for fewer
/// than two points.
Triangulation delaunay(std::span<const Point> points, double duplicate_tol = 1e-6);

}  // namespace como::graph
