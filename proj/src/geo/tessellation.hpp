#pragma once

#include <span>
#include <string>
#include <vector>

#include "geo/dataset.hpp"

namespace como::geo {

struct TessellationCell {
    std::string building_id;
    /// Usually one part; several when the cell is split by another footprint.
    std::vector<Polygon> parts;
    double area = 0.0;
};

struct TessellationOptions {
    /// Boundary densification spacing in meters.
    double spacing = 1.0;
};

/// Morphological tessellation of one block: footprint boundaries are
/// densified, their Voronoi regions dissolved per building and clipped to
/// the block, and each footprint is merged into its own cell. Cells are
/// returned in the order of `buildings`.
///
/// Throws DataError listing the ids of overlapping footprints.
std::vector<TessellationCell> tessellate_block(const Block& block, std::span<const Building> buildings,
                                               const TessellationOptions& options = {});

}  // namespace como::geo
