#include "analysis/efficiency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <boost/math/distributions/fisher_f.hpp>

#include "common/error.hpp"

namespace como::analysis {

std::string_view group_name(Group g)
{
    switch (g) {
    case Group::raw: return "raw";
    case Group::core: return "core";
    case Group::representative: return "representative";
    }
    return "?";
}

EfficiencyOutcome efficiency(const std::string& block_id, const geo::Polygon& block,
                             std::span<const geo::Polygon> footprints, geo::Point center, Group group)
{
    EfficiencyOutcome out;
    if (footprints.empty()) {
        out.skipped_reason = "no buildings in the " + std::string(group_name(group)) + " subset";
        return out;
    }
    const double block_area = geo::area(block);
    if (!(block_area > 0.0)) {
        out.skipped_reason = "block has no area";
        return out;
    }
    const double dist = geo::distance(geo::centroid(block), center);
    if (!(dist > 0.0)) {
        out.skipped_reason = "block centroid coincides with the city centre";
        return out;
    }
    double built = 0.0;
    for (const auto& f : footprints) built += geo::area(f);
    EfficiencyRecord r;
    r.block_id = block_id;
    r.group = group;
    r.e_area = built / block_area;
    if (r.e_area > 1.0) {
        r.e_area = 1.0;
        r.area_capped = true;
    }
    r.e_num = static_cast<double>(footprints.size()) / block_area;
    r.distance = dist;
    r.buildings = footprints.size();
    out.record = r;
    return out;
}

double f_survival(double f, double d1, double d2)
{
    if (std::isinf(f)) return 0.0;
    if (!(f > 0.0)) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::fisher_f_distribution<double>(d1, d2), f));
}

PowerFit fit_power(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw DataError("regression needs matching x and y lengths");
    PowerFit out;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
            out.rejected.push_back(i);
            continue;
        }
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const std::size_t n = lx.size();
    if (n < 3) throw DataError("power-law fit needs at least 3 positive points, got " + std::to_string(n));
    const double dn = static_cast<double>(n);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= dn;
    my /= dn;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw DataError("power-law fit needs at least two distinct x values");

    RegressionFit& f = out.fit;
    f.n = n;
    f.b = sxy / sxx;
    f.log_a = my - f.b * mx;
    f.log10_a = f.log_a / std::log(10.0);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - f.log_a - f.b * lx[i];
        sse += r * r;
    }
    const double dof = dn - 2.0;
    f.r2 = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 0.0;
    f.adj_r2 = 1.0 - (1.0 - f.r2) * (dn - 1.0) / dof;
    const double s2 = sse / dof;
    f.se_b = std::sqrt(s2 / sxx);
    f.se_log_a = std::sqrt(s2 * (1.0 / dn + mx * mx / sxx));
    if (syy == 0.0) {
        f.f = 0.0;
        f.p = 1.0;
    } else {
        f.f = f.r2 < 1.0 ? f.r2 / ((1.0 - f.r2) / dof) : std::numeric_limits<double>::infinity();
        f.p = f_survival(f.f, 1.0, dof);
    }
    return out;
}

GroupComparison compare_groups(const std::string& indicator, const std::array<std::optional<RegressionFit>, 3>& fits,
                               double alpha)
{
    GroupComparison c;
    c.indicator = indicator;
    for (std::size_t g = 0; g < 3; ++g) {
        GroupRow& row = c.rows[g];
        row.group = kGroups[g];
        row.fit = fits[g];
        if (!row.fit) {
            c.partial = true;
            continue;
        }
        row.significant = row.fit->p < alpha;
        if (fits[0]) row.delta_r2 = row.fit->r2 - fits[0]->r2;
    }
    return c;
}

nlohmann::ordered_json to_json(const RegressionFit& f)
{
    nlohmann::ordered_json j;
    j["n"] = f.n;
    j["ln_a"] = f.log_a;
    j["log10_a"] = f.log10_a;
    j["b"] = f.b;
    j["se_ln_a"] = f.se_log_a;
    j["se_b"] = f.se_b;
    j["r2"] = f.r2;
    j["adj_r2"] = f.adj_r2;
    j["f"] = std::isfinite(f.f) ? nlohmann::ordered_json(f.f) : nlohmann::ordered_json("inf");
    j["p"] = f.p;
    return j;
}

nlohmann::ordered_json to_json(const GroupComparison& c)
{
    nlohmann::ordered_json j;
    j["indicator"] = c.indicator;
    j["partial"] = c.partial;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : c.rows) {
        nlohmann::ordered_json row;
        row["group"] = std::string(group_name(r.group));
        row["fit"] = r.fit ? to_json(*r.fit) : nlohmann::ordered_json(nullptr);
        row["delta_r2"] = r.delta_r2 ? nlohmann::ordered_json(*r.delta_r2) : nlohmann::ordered_json(nullptr);
        row["significant"] = r.significant;
        rows.push_back(row);
    }
    j["groups"] = rows;
    return j;
}

void write_records_csv(std::ostream& os, const std::vector<EfficiencyRecord>& records)
{
    os.precision(17);
    os << "block_id,group,e_area,e_num,distance_m,buildings,area_capped\n";
    for (const auto& r : records)
        os << r.block_id << ',' << group_name(r.group) << ',' << r.e_area << ',' << r.e_num << ',' << r.distance << ','
           << r.buildings << ',' << (r.area_capped ? 1 : 0) << '\n';
}

}  // namespace como::analysis
