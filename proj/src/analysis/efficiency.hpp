#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "geo/geometry.hpp"

namespace como::analysis {

enum class Group { raw, core, representative };
inline constexpr std::array<Group, 3> kGroups{Group::raw, Group::core, Group::representative};
std::string_view group_name(Group g);

struct EfficiencyRecord {
    std::string block_id;
    Group group = Group::raw;
    /// Building area over block area, capped at 1.
    double e_area = 0.0;
    /// Buildings per square metre of block.
    double e_num = 0.0;
    /// Block centroid to the city centre, metres.
    double distance = 0.0;
    std::size_t buildings = 0;
    bool area_capped = false;
};

struct EfficiencyOutcome {
    std::optional<EfficiencyRecord> record;
    std::string skipped_reason;
};

/// Both indicators over `footprints`, always against the full block area.
EfficiencyOutcome efficiency(const std::string& block_id, const geo::Polygon& block,
                             std::span<const geo::Polygon> footprints, geo::Point center, Group group);

struct RegressionFit {
    std::size_t n = 0;
    /// Natural-log intercept and its base-10 counterpart.
    double log_a = 0.0;
    double log10_a = 0.0;
    double b = 0.0;
    double se_log_a = 0.0;
    double se_b = 0.0;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double f = 0.0;
    double p = 1.0;
};

struct PowerFit {
    RegressionFit fit;
    /// Indices of points with non-positive or non-finite coordinates.
    std::vector<std::size_t> rejected;
};

/// y = a x^b by least squares on (ln x, ln y). Throws DataError with fewer
/// than three usable points or when every x is equal.
PowerFit fit_power(std::span<const double> x, std::span<const double> y);

/// Upper tail of F(d1, d2) at f.
double f_survival(double f, double d1, double d2);

struct GroupRow {
    Group group = Group::raw;
    std::optional<RegressionFit> fit;
    /// R2 minus the raw group's R2; empty when either is missing.
    std::optional<double> delta_r2;
    bool significant = false;
};

struct GroupComparison {
    std::string indicator;
    std::array<GroupRow, 3> rows;
    bool partial = false;
};

/// Rows in raw, core, representative order; significance at p < alpha.
GroupComparison compare_groups(const std::string& indicator, const std::array<std::optional<RegressionFit>, 3>& fits,
                               double alpha = 0.05);

nlohmann::ordered_json to_json(const RegressionFit& f);
nlohmann::ordered_json to_json(const GroupComparison& c);
void write_records_csv(std::ostream& os, const std::vector<EfficiencyRecord>& records);

}  // namespace como::analysis
