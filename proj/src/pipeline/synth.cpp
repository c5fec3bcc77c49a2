#include "pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "geo/dataset.hpp"
#include "nn/optim.hpp"

namespace como::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr geo::Point kOrigin{320000.0, 4690000.0};
constexpr double kPitch = 150.0;
constexpr double kBlockSide = 100.0;
constexpr int kSlots = 3;
constexpr double kGap = 1.5;
constexpr std::size_t kTile = 3;

struct Draw {
    std::mt19937_64& rng;
    double operator()(double lo, double hi) { return lo + (hi - lo) * nn::uniform01(rng); }
    std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(n))); }
};

struct Shape {
    double length, width, angle;
};

double round_mm(double v) { return std::round(v * 1000.0) / 1000.0; }

ordered_json ring_json(const geo::Ring& ring)
{
    auto coords = ordered_json::array();
    for (const auto& p : ring) coords.push_back({round_mm(p.x), round_mm(p.y)});
    coords.push_back(coords.front());
    return ordered_json::array({coords});
}

ordered_json feature(ordered_json props, const geo::Ring& ring)
{
    ordered_json f;
    f["type"] = "Feature";
    f["properties"] = std::move(props);
    f["geometry"] = {{"type", "Polygon"}, {"coordinates", ring_json(ring)}};
    return f;
}

geo::Polygon place(const Shape& s, geo::Point center)
{
    auto p = geo::rectangle(s.length, s.width, {-s.length / 2.0, -s.width / 2.0});
    return geo::translate(geo::rotate(p, s.angle), center);
}

Shape draw_shape(char cls, bool auxiliary, Draw& u)
{
    switch (cls) {
    case 'A': {
        const double len = u(16.0, 26.0);
        const double angle = (u(0, 1) < 0.5 ? 0.0 : 90.0) + u(-5.0, 5.0);
        return {len, len / u(4.0, 8.0), angle};
    }
    case 'B': {
        const double side = u(9.0, 16.0);
        return {side * u(1.0, 1.3), side, u(0.0, 90.0)};
    }
    default:
        if (auxiliary) {
            const double side = u(2.5, 4.0);
            return {side * u(1.0, 1.2), side, u(0.0, 90.0)};
        }
        const double len = u(14.0, 24.0);
        return {len, len / u(1.5, 3.0), u(0.0, 90.0)};
    }
}

}  // namespace

SynthData generate_synthetic(const SynthSpec& spec)
{
    if (spec.classes < 2 || spec.classes > 3) throw ConfigError("synthetic data supports 2 or 3 classes");
    if (spec.blocks_per_class == 0) throw ConfigError("blocks_per_class must be positive");
    std::mt19937_64 rng(spec.seed);
    Draw u{rng};
    const char names[] = {'A', 'B', 'C'};
    const geo::UrbanFunction functions[] = {geo::UrbanFunction::residential, geo::UrbanFunction::commercial,
                                            geo::UrbanFunction::institutional};

    const std::size_t total = spec.classes * spec.blocks_per_class;
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(total))));
    std::vector<std::size_t> cls(total);
    for (std::size_t i = 0; i < total; ++i) cls[i] = i / spec.blocks_per_class;
    for (std::size_t i = total; i > 1; --i) std::swap(cls[i - 1], cls[u.index(i)]);

    SynthData d;
    d.center = {kOrigin.x - 60.0, kOrigin.y - 60.0};
    const double far = std::hypot(static_cast<double>(cols) * kPitch, static_cast<double>((total + cols - 1) / cols) * kPitch);
    d.buildings = {{"type", "FeatureCollection"}, {"features", ordered_json::array()}};
    d.blocks = {{"type", "FeatureCollection"}, {"features", ordered_json::array()}};
    d.neighborhoods = {{"type", "FeatureCollection"}, {"features", ordered_json::array()}};
    d.truth["classes"] = ordered_json::array();
    for (std::size_t c = 0; c < spec.classes; ++c) {
        ordered_json meta{{"class", std::string(1, names[c])},
                          {"function", std::string(geo::function_name(functions[c]))}};
        if (names[c] == 'A') meta["planted"] = {{"feature", "elongation"}, {"range", {4.0, 8.0}}};
        if (names[c] == 'B') meta["planted"] = {{"feature", "elongation"}, {"range", {1.0, 1.3}}};
        if (names[c] == 'C') meta["planted"] = {{"feature", "auxiliary_buildings"}, {"count", {2, 4}}};
        d.truth["classes"].push_back(meta);
    }
    d.truth["center"] = {d.center.x, d.center.y};
    d.truth["blocks"] = ordered_json::object();

    std::size_t building_no = 0;
    for (std::size_t b = 0; b < total; ++b) {
        const char c = names[cls[b]];
        const geo::Point corner{kOrigin.x + static_cast<double>(b % cols) * kPitch,
                                kOrigin.y + static_cast<double>(b / cols) * kPitch};
        char id[32];
        std::snprintf(id, sizeof id, "blk%04zu", b + 1);

        double side = kBlockSide;
        std::vector<geo::Polygon> footprints;
        for (int attempt = 0;; ++attempt) {
            if (attempt == 3) throw DataError(std::string("cannot pack buildings into block ") + id);
            footprints.clear();
            const double slot = side / kSlots;
            const double dist = geo::distance(corner + geo::Point{side / 2, side / 2}, d.center);
            std::size_t count = 0, aux = 0;
            if (c == 'A') count = 4 + static_cast<std::size_t>(std::lround(5.0 * std::clamp(1.0 - dist / far + u(-0.15, 0.15), 0.0, 1.0)));
            else if (c == 'B') count = 4 + u.index(6);
            else {
                aux = 2 + u.index(3);
                count = aux + 2 + u.index(2);
            }
            std::vector<std::size_t> slots(kSlots * kSlots);
            std::iota(slots.begin(), slots.end(), 0);
            for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[u.index(i)]);
            bool fits = true;
            for (std::size_t k = 0; k < count && fits; ++k) {
                const Shape s = draw_shape(c, k < aux, u);
                const auto probe = place(s, {0, 0});
                const auto box = geo::bounds(probe);
                const double w = box.max_x - box.min_x, h = box.max_y - box.min_y;
                const double room_x = slot - 2 * kGap - w, room_y = slot - 2 * kGap - h;
                if (room_x < 0 || room_y < 0) {
                    fits = false;
                    break;
                }
                const geo::Point slot_min = corner + geo::Point{static_cast<double>(slots[k] % kSlots) * slot,
                                                                static_cast<double>(slots[k] / kSlots) * slot};
                const geo::Point at{slot_min.x + kGap + w / 2 + u(0, room_x), slot_min.y + kGap + h / 2 + u(0, room_y)};
                footprints.push_back(geo::translate(probe, at - geo::Point{(box.min_x + box.max_x) / 2, (box.min_y + box.max_y) / 2}));
            }
            if (fits) break;
            side *= 1.2;
        }

        const auto block_poly = geo::rectangle(side, side, corner);
        d.blocks["features"].push_back(feature({{"id", id}, {"function", std::string(geo::function_name(functions[cls[b]]))}},
                                               block_poly.exterior));
        for (const auto& f : footprints) {
            char bid[16];
            std::snprintf(bid, sizeof bid, "b%06zu", ++building_no);
            d.buildings["features"].push_back(feature({{"id", bid}}, f.exterior));
        }
        d.truth["blocks"][id] = std::string(1, c);
    }

    const std::size_t rows = (total + cols - 1) / cols;
    std::size_t hood = 0;
    for (std::size_t ty = 0; ty < rows; ty += kTile)
        for (std::size_t tx = 0; tx < cols; tx += kTile) {
            const geo::Point lo{kOrigin.x + static_cast<double>(tx) * kPitch - 20.0, kOrigin.y + static_cast<double>(ty) * kPitch - 20.0};
            const double w = static_cast<double>(std::min(kTile, cols - tx)) * kPitch;
            const double h = static_cast<double>(std::min(kTile, rows - ty)) * kPitch;
            char nid[16];
            std::snprintf(nid, sizeof nid, "n%02zu", ++hood);
            d.neighborhoods["features"].push_back(
                feature({{"id", nid}, {"name", "Neighborhood " + std::to_string(hood)}}, geo::rectangle(w, h, lo).exterior));
        }
    return d;
}

void write_synthetic(const SynthData& data, const std::string& dir, std::uint64_t seed)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    auto put = [&](const std::string& name, const std::string& text) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        out << text;
        if (!out) throw IoError("cannot write " + (fs::path(dir) / name).string());
    };
    put("buildings.geojson", data.buildings.dump() + "\n");
    put("blocks.geojson", data.blocks.dump() + "\n");
    put("neighborhoods.geojson", data.neighborhoods.dump() + "\n");
    put("truth.json", data.truth.dump(2) + "\n");
    char center[96];
    std::snprintf(center, sizeof center, "center_x = %.3f\ncenter_y = %.3f\n", data.center.x, data.center.y);
    put("pipeline.conf", "# synthetic run\nbuildings = buildings.geojson\nblocks = blocks.geojson\n"
                         "neighborhoods = neighborhoods.geojson\nout = out\n" +
                             std::string(center) + "seed = " + std::to_string(seed) + "\n");
}

}  // namespace como::pipeline
