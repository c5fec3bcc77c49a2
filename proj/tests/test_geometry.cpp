#include <doctest.h>

#include <map>
#include <sstream>

#include "geo/dataset.hpp"
#include "geo/geometry.hpp"
#include "geo/tessellation.hpp"
#include "test_support.hpp"

using namespace como;
using namespace como::geo;
using como::testing::uniform;

namespace {

bool same_point_set(std::vector<Point> a, std::vector<Point> b)
{
    auto lex = [](Point p, Point q) { return p.x < q.x || (p.x == q.x && p.y < q.y); };
    std::sort(a.begin(), a.end(), lex);
    std::sort(b.begin(), b.end(), lex);
    return a == b;
}

}  // namespace

TEST_CASE("polygon_basics on simple shapes")
{
    auto sq = polygon_basics(normalize(rectangle(1, 1)));
    CHECK(sq.area == doctest::Approx(1.0));
    CHECK(sq.perimeter == doctest::Approx(4.0));
    CHECK(sq.centroid.x == doctest::Approx(0.5));
    CHECK(sq.centroid.y == doctest::Approx(0.5));

    auto tri = polygon_basics(normalize(Polygon{{{0, 0}, {4, 0}, {0, 3}}, {}}));
    CHECK(tri.area == doctest::Approx(6.0));
    CHECK(tri.perimeter == doctest::Approx(12.0));
    CHECK(tri.centroid.x == doctest::Approx(4.0 / 3.0));
    CHECK(tri.centroid.y == doctest::Approx(1.0));

    Polygon holed = rectangle(4, 4);
    holed.holes.push_back(rectangle(2, 2, {1, 1}).exterior);
    auto h = polygon_basics(normalize(holed));
    CHECK(h.area == doctest::Approx(12.0));
    CHECK(h.perimeter == doctest::Approx(16.0));
    CHECK(h.centroid.x == doctest::Approx(2.0));

    CHECK_THROWS_AS(polygon_basics(Polygon{{{0, 0}, {1, 1}, {2, 2}}, {}}), DegenerateGeometry);
}

TEST_CASE("normalize repairs orientation and drops closing vertex")
{
    Polygon cw{{{0, 0}, {0, 1}, {1, 1}, {1, 0}, {0, 0}}, {}};
    auto n = normalize(cw);
    CHECK(n.exterior.size() == 4);
    CHECK(signed_area(n.exterior) > 0);
    CHECK_THROWS_AS(normalize(Polygon{{{0, 0}, {1, 0}, {0, 0}}, {}}), DegenerateGeometry);
}

TEST_CASE("area and perimeter are rigid-motion invariant")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Polygon p = normalize(como::testing::random_star_polygon(rng, 12, 5, 20));
        const auto base = polygon_basics(p);
        const Polygon moved = rotate(translate(p, {3.2e5, 4.7e6}), uniform(rng, 0, 360), {3.2e5, 4.7e6});
        const auto m = polygon_basics(moved);
        CHECK(std::abs(m.area - base.area) <= 1e-9 * base.area);
        CHECK(std::abs(m.perimeter - base.perimeter) <= 1e-9 * base.perimeter);
    }
}

TEST_CASE("convex hull")
{
    const Polygon sq = rectangle(2, 2);
    CHECK(same_point_set(convex_hull(sq).exterior, sq.exterior));

    const Polygon ell{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, {}};
    const auto hull = convex_hull(ell).exterior;
    CHECK(same_point_set(hull, {{0, 0}, {2, 0}, {2, 1}, {1, 2}, {0, 2}}));

    CHECK_THROWS_AS(convex_hull(std::vector<Point>{{0, 0}, {1, 1}, {2, 2}, {3, 3}}), DegenerateGeometry);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto pts = como::testing::random_points(rng, 50);
        const auto h = convex_hull(pts);
        CHECK(same_point_set(h, como::testing::brute_force_extreme_points(pts)));
        for (std::size_t i = 0; i < h.size(); ++i)
            CHECK(orient(h[i], h[(i + 1) % h.size()], h[(i + 2) % h.size()]) > 0);
        for (Point p : pts) {
            bool edge = false;
            CHECK(point_in_ring(p, h, &edge));
        }
    }
}

TEST_CASE("minimum bounding rectangle")
{
    auto r = min_bounding_rect(rectangle(4, 2));
    CHECK(r.length == doctest::Approx(4.0));
    CHECK(r.width == doctest::Approx(2.0));
    CHECK(r.orientation_deg == doctest::Approx(0.0));

    auto rot = min_bounding_rect(rotate(rectangle(4, 2), 30.0));
    CHECK(rot.length == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rot.width == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(rot.orientation_deg - 30.0) <= 1e-6);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto pts = como::testing::random_points(rng, 30);
        const auto hull = convex_hull(pts);
        const auto rect = min_bounding_rect(hull);
        const double oracle = como::testing::sweep_min_rect_area(hull);
        CHECK(rect.area() <= oracle * (1.0 + 1e-9));
        CHECK(std::abs(rect.area() - oracle) <= 1e-3 * oracle);
        const Box b = bounds(Polygon{hull, {}});
        CHECK(rect.area() <= (b.max_x - b.min_x) * (b.max_y - b.min_y) * (1.0 + 1e-12));
    }
}

TEST_CASE("bounding rectangle orientation follows rotation modulo 90")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Polygon p = normalize(como::testing::random_star_polygon(rng, 9, 4, 15));
        const double base = min_bounding_rect(p).orientation_deg;
        const double theta = uniform(rng, 0, 360);
        const double turned = min_bounding_rect(rotate(p, theta)).orientation_deg;
        double diff = fold_degrees(turned - base - theta, 90.0);
        diff = std::min(diff, 90.0 - diff);
        CHECK(diff <= 1e-6);
    }
}

TEST_CASE("bounding rectangle dimensions survive rotation when minima tie")
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const Polygon p = normalize(como::testing::random_star_polygon(rng, 4 + trial % 3, 4, 15));
        const auto base = min_bounding_rect(p);
        const auto turned = min_bounding_rect(rotate(p, uniform(rng, 0, 360)));
        CHECK(turned.length == doctest::Approx(base.length).epsilon(1e-9));
        CHECK(turned.width == doctest::Approx(base.width).epsilon(1e-9));
    }
}

TEST_CASE("longest chord")
{
    auto c = longest_chord(rectangle(2, 2, {-1, -1}));
    CHECK(c.length == doctest::Approx(2.0 * std::sqrt(2.0)));
    CHECK(c.orientation_deg == doctest::Approx(45.0));

    auto r = longest_chord(rectangle(4, 2));
    CHECK(r.length == doctest::Approx(std::sqrt(20.0)));
    CHECK(r.width == doctest::Approx(8.0 / std::sqrt(5.0)));

    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = como::testing::random_points(rng, 40);
        const auto hull = convex_hull(pts);
        CHECK(longest_chord(hull).length == doctest::Approx(como::testing::all_pairs_diameter(hull)).epsilon(1e-12));
    }
}

TEST_CASE("smallest enclosing circle")
{
    const Polygon tri{{{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0}}, {}};
    CHECK(smallest_enclosing_circle(tri).radius == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(smallest_enclosing_circle(rectangle(2, 2)).radius == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(smallest_enclosing_circle(std::vector<Point>{}), DegenerateGeometry);

    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 3; ++trial) {
        const auto pts = como::testing::random_points(rng, 100);
        const auto circle = smallest_enclosing_circle(pts);
        CHECK(std::abs(circle.radius - como::testing::brute_force_enclosing_radius(pts)) <= 1e-9);
        const double diam = como::testing::all_pairs_diameter(pts);
        CHECK(circle.radius >= diam / 2.0 * (1.0 - 1e-12));
        CHECK(circle.radius <= diam / std::sqrt(3.0) * (1.0 + 1e-12));
    }
}

TEST_CASE("convex clip keeps exact area")
{
    const Polygon ell{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, {}};
    const Ring window = rectangle(10, 1.5, {-5, 0}).exterior;
    const auto clipped = clip_to_convex(ell.exterior, window);
    CHECK(signed_area(clipped) == doctest::Approx(2.0 + 0.5));
}

TEST_CASE("parse_dataset assigns buildings and flags small blocks")
{
    const std::string blocks = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"id":"b1","function":"residential"},
       "geometry":{"type":"Polygon","coordinates":[[[500000,4000000],[500100,4000000],[500100,4000100],[500000,4000100],[500000,4000000]]]}},
      {"type":"Feature","properties":{"id":"b2","function":"commercial"},
       "geometry":{"type":"Polygon","coordinates":[[[500200,4000000],[500300,4000000],[500300,4000100],[500200,4000100]]]}}]})";
    std::string buildings = R"({"type":"FeatureCollection","features":[)";
    for (int i = 0; i < 5; ++i) {
        const double x = 500005 + 18.0 * i;
        if (i) buildings += ",";
        buildings += R"({"type":"Feature","properties":{"id":"h)" + std::to_string(i) +
                     R"("},"geometry":{"type":"Polygon","coordinates":[[[)" + std::to_string(x) + ",4000010],[" +
                     std::to_string(x + 10) + ",4000010],[" + std::to_string(x + 10) + ",4000020],[" +
                     std::to_string(x) + ",4000020]]]}}";
    }
    for (int i = 0; i < 3; ++i) {
        const double x = 500205 + 20.0 * i;
        buildings += R"(,{"type":"Feature","properties":{"id":"c)" + std::to_string(i) +
                     R"("},"geometry":{"type":"Polygon","coordinates":[[[)" + std::to_string(x) + ",4000010],[" +
                     std::to_string(x + 10) + ",4000010],[" + std::to_string(x + 10) + ",4000020],[" +
                     std::to_string(x) + ",4000020],[" + std::to_string(x) + ",4000010]]]}}";
    }
    buildings += "]}";
    std::istringstream bin(buildings), kin(blocks);
    const Dataset ds = parse_dataset(bin, kin);
    REQUIRE(ds.blocks.size() == 2);
    CHECK(ds.buildings.size() == 8);
    CHECK(ds.blocks[0].building_ids.size() == 5);
    CHECK(ds.blocks[0].eligible);
    CHECK(ds.blocks[1].building_ids.size() == 3);
    CHECK_FALSE(ds.blocks[1].eligible);
    // The five open rings were closed and reported.
    std::size_t repairs = 0;
    for (const auto& d : ds.diagnostics)
        repairs += (d.source == "buildings" && !d.rejected && d.message.find("closed") != std::string::npos);
    CHECK(repairs == 5);
}

TEST_CASE("parse_dataset error paths")
{
    const std::string ok_building =
        R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"a"},"geometry":{"type":"Polygon","coordinates":[[[500000,4000000],[500010,4000000],[500010,4000010],[500000,4000010]]]}}]})";
    SUBCASE("malformed json reports the line")
    {
        std::istringstream bin("{\n\"type\": \"FeatureCollection\",\n \"features\": [ oops ]}"), kin(ok_building);
        try {
            parse_dataset(bin, kin);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
    SUBCASE("unknown function lists allowed labels")
    {
        std::istringstream bin(ok_building);
        std::istringstream kin(
            R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"k","function":"farm"},"geometry":{"type":"Polygon","coordinates":[[[500000,4000000],[500100,4000000],[500100,4000100]]]}}]})");
        try {
            parse_dataset(bin, kin);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("public_open_space") != std::string::npos);
        }
    }
    SUBCASE("geographic coordinates are refused")
    {
        std::istringstream bin(
            R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"a"},"geometry":{"type":"Polygon","coordinates":[[[-71.05,42.35],[-71.04,42.35],[-71.04,42.36]]]}}]})");
        std::istringstream kin(
            R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"k","function":"residential"},"geometry":{"type":"Polygon","coordinates":[[[-71.1,42.3],[-71.0,42.3],[-71.0,42.4]]]}}]})");
        CHECK_THROWS_AS(parse_dataset(bin, kin), DataError);
    }
    SUBCASE("self-intersecting footprint is rejected with a diagnostic")
    {
        std::istringstream bin(
            R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"bow"},"geometry":{"type":"Polygon","coordinates":[[[500000,4000000],[500010,4000010],[500010,4000000],[500000,4000010],[500000,4000000]]]}}]})");
        std::istringstream kin(
            R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"k","function":"residential"},"geometry":{"type":"Polygon","coordinates":[[[499000,3999000],[501000,3999000],[501000,4001000],[499000,4001000]]]}}]})");
        const auto ds = parse_dataset(bin, kin);
        CHECK(ds.buildings.empty());
        std::vector<Diagnostic> rejected;
        for (const auto& d : ds.diagnostics)
            if (d.rejected) rejected.push_back(d);
        REQUIRE(rejected.size() == 1);
        CHECK(rejected[0].source == "buildings");
        CHECK(rejected[0].feature_id == "bow");
    }
}

TEST_CASE("centroid on a shared block edge goes to the smallest block id")
{
    const std::string blocks = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"id":"zeta","function":"residential"},
       "geometry":{"type":"Polygon","coordinates":[[[500000,4000000],[500100,4000000],[500100,4000100],[500000,4000100]]]}},
      {"type":"Feature","properties":{"id":"alpha","function":"residential"},
       "geometry":{"type":"Polygon","coordinates":[[[500100,4000000],[500200,4000000],[500200,4000100],[500100,4000100]]]}}]})";
    const std::string buildings = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"id":"straddle"},
       "geometry":{"type":"Polygon","coordinates":[[[500095,4000040],[500105,4000040],[500105,4000050],[500095,4000050]]]}}]})";
    std::istringstream bin(buildings), kin(blocks);
    const auto ds = parse_dataset(bin, kin);
    REQUIRE(ds.buildings.size() == 1);
    CHECK(ds.buildings[0].block_id == "alpha");
}

namespace {

Block make_block(const Polygon& boundary)
{
    Block b;
    b.id = "blk";
    b.boundary = normalize(boundary);
    return b;
}

double total_area(const std::vector<TessellationCell>& cells)
{
    double a = 0.0;
    for (const auto& c : cells) a += c.area;
    return a;
}

}  // namespace

TEST_CASE("tessellation of a single building is the whole block")
{
    const Block blk = make_block(rectangle(60, 40, {500000, 4000000}));
    const std::vector<Building> bs{{"only", normalize(rectangle(10, 8, {500020, 4000015})), "blk"}};
    const auto cells = tessellate_block(blk, bs);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].area == doctest::Approx(2400.0).epsilon(1e-9));
}

TEST_CASE("mirror-symmetric buildings receive equal cells")
{
    const Block blk = make_block(rectangle(80, 40, {500000, 4000000}));
    const std::vector<Building> bs{{"left", normalize(rectangle(12, 10, {500010, 4000015})), "blk"},
                                   {"right", normalize(rectangle(12, 10, {500058, 4000015})), "blk"}};
    const auto cells = tessellate_block(blk, bs);
    REQUIRE(cells.size() == 2);
    CHECK(std::abs(cells[0].area - cells[1].area) <= 0.005 * cells[0].area);
    CHECK(total_area(cells) == doctest::Approx(3200.0).epsilon(1e-6));
}

TEST_CASE("overlapping footprints are reported by id")
{
    const Block blk = make_block(rectangle(80, 40, {500000, 4000000}));
    const std::vector<Building> bs{{"a", normalize(rectangle(12, 10, {500010, 4000015})), "blk"},
                                   {"b", normalize(rectangle(12, 10, {500015, 4000018})), "blk"}};
    try {
        tessellate_block(blk, bs);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("a/b") != std::string::npos);
    }
}

TEST_CASE("random tessellation partitions the block and follows nearest footprints")
{
    std::mt19937_64 rng(21);
    const Point o{500000, 4000000};
    const Block blk = make_block(Polygon{{o, o + Point{90, 0}, o + Point{100, 60}, o + Point{10, 70}}, {}});
    std::vector<Building> bs;
    while (bs.size() < 5) {
        const Point c = o + Point{uniform(rng, 20, 80), uniform(rng, 12, 58)};
        Polygon fp = rotate(rectangle(uniform(rng, 5, 12), uniform(rng, 4, 9), c), uniform(rng, 0, 90), c);
        fp = normalize(fp);
        bool ok = true;
        for (Point v : fp.exterior) ok = ok && point_in_polygon(v, blk.boundary);
        for (const auto& other : bs)
            for (Point v : fp.exterior) ok = ok && distance_to_polygon(v, other.footprint) > 2.0;
        for (const auto& other : bs)
            for (Point v : other.footprint.exterior) ok = ok && distance_to_polygon(v, fp) > 2.0;
        if (ok) bs.push_back({"b" + std::to_string(bs.size()), fp, "blk"});
    }
    const auto cells = tessellate_block(blk, bs);
    const double block_area = area(blk.boundary);
    CHECK(std::abs(total_area(cells) - block_area) <= 1e-6 * block_area);

    std::size_t sampled = 0, mismatched = 0;
    for (double x = 0.5; x < 100; x += 1.0) {
        for (double y = 0.5; y < 70; y += 1.0) {
            const Point p = o + Point{x, y};
            if (!point_in_polygon(p, blk.boundary)) continue;
            int owner = -1;
            for (std::size_t i = 0; i < cells.size() && owner < 0; ++i)
                for (const auto& part : cells[i].parts)
                    if (point_in_polygon(p, part)) owner = static_cast<int>(i);
            if (owner < 0) continue;
            ++sampled;
            double nearest = 1e300;
            for (const auto& b : bs) nearest = std::min(nearest, distance_to_polygon(p, b.footprint));
            if (distance_to_polygon(p, bs[owner].footprint) > nearest + 1.0) ++mismatched;
        }
    }
    CHECK(sampled > 5000);
    CHECK(mismatched == 0);
    for (std::size_t i = 0; i < bs.size(); ++i)
        CHECK(cells[i].area >= area(bs[i].footprint));
}
