#include "geo/dataset.hpp"

#include <algorithm>
#include <istream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

namespace como::geo {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;
using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, kFunctionCount> kFunctionNames = {
    "commercial", "industrial", "institutional", "mixed_use", "public_open_space", "residential"};

std::size_t line_of(const std::string& text, std::size_t byte)
{
    byte = std::min(byte, text.size());
    return 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n');
}

json read_collection(std::istream& in, const std::string& source)
{
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::ostringstream msg;
        msg << source << ": malformed JSON at line " << line_of(text, e.byte) << ": " << e.what();
        throw DataError(msg.str());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array())
        throw DataError(source + ": expected a GeoJSON FeatureCollection");
    return doc;
}

std::string feature_id(const json& feature, std::size_t index)
{
    const json* candidates[] = {nullptr, nullptr};
    if (feature.contains("properties") && feature["properties"].is_object() && feature["properties"].contains("id"))
        candidates[0] = &feature["properties"]["id"];
    if (feature.contains("id")) candidates[1] = &feature["id"];
    for (const json* c : candidates) {
        if (!c) continue;
        if (c->is_string()) return c->get<std::string>();
        if (c->is_number_integer()) return std::to_string(c->get<long long>());
        if (c->is_number()) return c->dump();
    }
    return "feature-" + std::to_string(index);
}

Ring ring_from_json(const json& coords, bool& was_open)
{
    if (!coords.is_array()) throw DataError("ring is not an array");
    Ring ring;
    ring.reserve(coords.size());
    for (const auto& c : coords) {
        if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
            throw DataError("coordinate is not a numeric [x, y] pair");
        ring.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    was_open = ring.size() >= 2 && !(ring.front() == ring.back());
    return ring;
}

json ring_to_json(const Ring& ring)
{
    json arr = json::array();
    for (Point p : ring) arr.push_back({p.x, p.y});
    if (!ring.empty()) arr.push_back({ring.front().x, ring.front().y});
    return arr;
}

bool looks_geographic(const Polygon& p)
{
    auto ok = [](const Ring& r) {
        return std::all_of(r.begin(), r.end(), [](Point v) { return std::abs(v.x) <= 180.0 && std::abs(v.y) <= 90.0; });
    };
    if (!ok(p.exterior)) return false;
    return std::all_of(p.holes.begin(), p.holes.end(), ok);
}

void validate_simple(const Polygon& p)
{
    if (self_intersects(p.exterior)) throw DegenerateGeometry("exterior ring self-intersects");
    for (const auto& h : p.holes) {
        if (self_intersects(h)) throw DegenerateGeometry("hole ring self-intersects");
        for (Point v : h)
            if (!point_in_ring(v, p.exterior)) throw DegenerateGeometry("hole lies outside the exterior ring");
    }
}

}  // namespace

std::string_view function_name(UrbanFunction f) { return kFunctionNames.at(static_cast<std::size_t>(f)); }

std::optional<UrbanFunction> parse_function(std::string_view label)
{
    std::string norm;
    for (char c : label) norm.push_back(c == ' ' || c == '-' ? '_' : static_cast<char>(std::tolower(c)));
    for (std::size_t i = 0; i < kFunctionCount; ++i)
        if (norm == kFunctionNames[i]) return static_cast<UrbanFunction>(i);
    return std::nullopt;
}

std::string allowed_function_labels()
{
    std::string out;
    for (auto n : kFunctionNames) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out;
}

const Block* Dataset::find_block(std::string_view id) const
{
    for (const auto& b : blocks)
        if (b.id == id) return &b;
    return nullptr;
}

json polygon_to_geojson(const Polygon& p)
{
    json rings = json::array();
    rings.push_back(ring_to_json(p.exterior));
    for (const auto& h : p.holes) rings.push_back(ring_to_json(h));
    return json{{"type", "Polygon"}, {"coordinates", rings}};
}

json parts_to_geojson(const std::vector<Polygon>& parts)
{
    if (parts.size() == 1) return polygon_to_geojson(parts.front());
    json polys = json::array();
    for (const auto& p : parts) polys.push_back(polygon_to_geojson(p)["coordinates"]);
    return json{{"type", "MultiPolygon"}, {"coordinates", polys}};
}

Polygon polygon_from_geojson(const json& geometry, bool* repaired)
{
    if (!geometry.is_object()) throw DataError("feature has no geometry");
    const std::string type = geometry.value("type", "");
    json rings;
    if (type == "Polygon") {
        rings = geometry.at("coordinates");
    } else if (type == "MultiPolygon") {
        const auto& parts = geometry.at("coordinates");
        if (!parts.is_array() || parts.size() != 1)
            throw DataError("multi-part geometry (" + std::to_string(parts.size()) + " parts) is not supported");
        rings = parts[0];
    } else {
        throw DataError("unsupported geometry type '" + type + "'");
    }
    if (!rings.is_array() || rings.empty()) throw DataError("polygon has no rings");
    Polygon p;
    bool open = false;
    for (std::size_t i = 0; i < rings.size(); ++i) {
        bool was_open = false;
        Ring r = ring_from_json(rings[i], was_open);
        open = open || was_open;
        if (i == 0)
            p.exterior = std::move(r);
        else
            p.holes.push_back(std::move(r));
    }
    if (repaired) *repaired = open;
    p = normalize(std::move(p));
    validate_simple(p);
    return p;
}

Dataset parse_dataset(std::istream& buildings_in, std::istream& blocks_in)
{
    Dataset ds;
    const json bdoc = read_collection(buildings_in, "buildings");
    const json kdoc = read_collection(blocks_in, "blocks");

    bool all_geographic = true;
    bool any_geometry = false;

    std::set<std::string> seen_blocks;
    const auto& kfeatures = kdoc["features"];
    for (std::size_t i = 0; i < kfeatures.size(); ++i) {
        const auto& f = kfeatures[i];
        const std::string id = feature_id(f, i);
        const json props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : json::object();
        if (!props.contains("function") || !props["function"].is_string())
            throw DataError("blocks: feature " + std::to_string(i) + " ('" + id + "') has no function attribute");
        const std::string label = props["function"].get<std::string>();
        const auto fn = parse_function(label);
        if (!fn)
            throw DataError("blocks: feature " + std::to_string(i) + " ('" + id + "') has unknown function '" + label +
                            "'; allowed: " + allowed_function_labels());
        if (!seen_blocks.insert(id).second) {
            ds.diagnostics.push_back({"blocks", i, id, "duplicate block id", true});
            continue;
        }
        try {
            bool repaired = false;
            Block b;
            b.id = id;
            b.function = *fn;
            b.boundary = polygon_from_geojson(f.value("geometry", json()), &repaired);
            if (repaired) ds.diagnostics.push_back({"blocks", i, id, "ring closed automatically", false});
            any_geometry = true;
            all_geographic = all_geographic && looks_geographic(b.boundary);
            ds.blocks.push_back(std::move(b));
        } catch (const Error& e) {
            ds.diagnostics.push_back({"blocks", i, id, e.what(), true});
        }
    }

    std::set<std::string> seen_buildings;
    std::vector<std::size_t> source_index;
    const auto& bfeatures = bdoc["features"];
    for (std::size_t i = 0; i < bfeatures.size(); ++i) {
        const auto& f = bfeatures[i];
        const std::string id = feature_id(f, i);
        if (!seen_buildings.insert(id).second) {
            ds.diagnostics.push_back({"buildings", i, id, "duplicate building id", true});
            continue;
        }
        try {
            bool repaired = false;
            Building b;
            b.id = id;
            b.footprint = polygon_from_geojson(f.value("geometry", json()), &repaired);
            if (repaired) ds.diagnostics.push_back({"buildings", i, id, "ring closed automatically", false});
            any_geometry = true;
            all_geographic = all_geographic && looks_geographic(b.footprint);
            ds.buildings.push_back(std::move(b));
            source_index.push_back(i);
        } catch (const Error& e) {
            ds.diagnostics.push_back({"buildings", i, id, e.what(), true});
        }
    }

    if (any_geometry && all_geographic)
        throw DataError("coordinates look like longitude/latitude; reproject the input to a planar CRS in meters");

    // Centroid-in-block assignment through an R-tree over block envelopes.
    using BPoint = bg::model::d2::point_xy<double>;
    using BBox = bg::model::box<BPoint>;
    std::vector<std::pair<BBox, std::size_t>> entries;
    for (std::size_t k = 0; k < ds.blocks.size(); ++k) {
        const Box b = bounds(ds.blocks[k].boundary);
        entries.emplace_back(BBox(BPoint(b.min_x, b.min_y), BPoint(b.max_x, b.max_y)), k);
    }
    bgi::rtree<std::pair<BBox, std::size_t>, bgi::quadratic<16>> index(entries.begin(), entries.end());

    std::vector<Building> kept;
    kept.reserve(ds.buildings.size());
    for (std::size_t bi = 0; bi < ds.buildings.size(); ++bi) {
        Building& b = ds.buildings[bi];
        const Point c = centroid(b.footprint);
        std::vector<std::pair<BBox, std::size_t>> hits;
        index.query(bgi::intersects(BPoint(c.x, c.y)), std::back_inserter(hits));
        const Block* owner = nullptr;
        for (const auto& [box, k] : hits) {
            bool on_edge = false;
            if (point_in_polygon(c, ds.blocks[k].boundary, &on_edge)) {
                if (!owner || ds.blocks[k].id < owner->id) owner = &ds.blocks[k];
            }
        }
        if (!owner) {
            ds.diagnostics.push_back({"buildings", source_index[bi], b.id, "centroid lies outside every block", true});
            continue;
        }
        b.block_id = owner->id;
        kept.push_back(std::move(b));
    }
    ds.buildings = std::move(kept);

    std::map<std::string, Block*> by_id;
    for (auto& k : ds.blocks) by_id[k.id] = &k;
    for (const auto& b : ds.buildings) by_id[b.block_id]->building_ids.push_back(b.id);
    for (auto& k : ds.blocks) k.eligible = k.building_ids.size() >= kMinBuildingsPerBlock;
    return ds;
}

std::vector<Neighborhood> parse_neighborhoods(std::istream& in)
{
    const json doc = read_collection(in, "neighborhoods");
    std::vector<Neighborhood> out;
    const auto& features = doc["features"];
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        Neighborhood n;
        n.id = feature_id(f, i);
        const json props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : json::object();
        n.name = props.contains("name") && props["name"].is_string() ? props["name"].get<std::string>() : n.id;
        try {
            n.boundary = polygon_from_geojson(f.value("geometry", json()));
        } catch (const Error& e) {
            throw DataError("neighborhoods: feature " + std::to_string(i) + " ('" + n.id + "'): " + e.what());
        }
        out.push_back(std::move(n));
    }
    return out;
}

}  // namespace como::geo
