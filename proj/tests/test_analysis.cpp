#include <doctest.h>

#include <sstream>

#include "analysis/efficiency.hpp"
#include "test_support.hpp"

using namespace como;
using namespace como::analysis;
using como::testing::uniform;

namespace {

PowerFit fit(const std::vector<double>& x, const std::vector<double>& y) { return fit_power(x, y); }

}  // namespace

TEST_CASE("efficiency indicators")
{
    const auto block = geo::rectangle(40, 25, {100, 0});  // 1000 m2
    std::vector<geo::Polygon> buildings;
    for (int i = 0; i < 5; ++i) buildings.push_back(geo::rectangle(8, 10, {102.0 + 7.5 * i, 2}));
    const auto out = efficiency("b1", block, buildings, {0, 0}, Group::raw);
    REQUIRE(out.record);
    CHECK(out.record->e_area == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(out.record->e_num == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(out.record->distance == doctest::Approx(std::hypot(120.0, 12.5)));
    CHECK(out.record->buildings == 5);

    const auto core = efficiency("b1", block, buildings, {0, 0}, Group::core);
    CHECK(core.record->e_area == out.record->e_area);
    CHECK(core.record->e_num == out.record->e_num);
    CHECK(core.record->group == Group::core);

    const auto half = efficiency("b1", block, std::span(buildings).first(2), {0, 0}, Group::core);
    CHECK(half.record->e_area == doctest::Approx(0.16));
    CHECK(half.record->e_num == doctest::Approx(0.002));

    const auto empty = efficiency("b1", block, {}, {0, 0}, Group::core);
    CHECK_FALSE(empty.record);
    CHECK_FALSE(empty.skipped_reason.empty());
    CHECK_FALSE(efficiency("b1", block, buildings, {120, 12.5}, Group::raw).record);

    const std::vector<geo::Polygon> huge{geo::rectangle(50, 50, {95, -5})};
    const auto capped = efficiency("b1", block, huge, {0, 0}, Group::raw);
    CHECK(capped.record->e_area == 1.0);
    CHECK(capped.record->area_capped);

    std::ostringstream csv;
    write_records_csv(csv, {*out.record, *core.record});
    const std::string text = csv.str();
    CHECK(text.rfind("block_id,group,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("noiseless power law")
{
    std::vector<double> x, y;
    for (int i = 1; i <= 100; ++i) {
        x.push_back(i);
        y.push_back(2.0 * std::pow(i, -0.5));
    }
    const auto r = fit(x, y);
    CHECK(std::abs(r.fit.log_a - std::log(2.0)) <= 1e-9);
    CHECK(std::abs(r.fit.b + 0.5) <= 1e-9);
    CHECK(std::abs(r.fit.r2 - 1.0) <= 1e-9);
    CHECK(r.fit.log10_a == doctest::Approx(std::log10(2.0)));
    CHECK(r.fit.n == 100);
    CHECK(r.fit.p <= 1e-12);

    const std::vector<double> flat(100, 7.0);
    const auto c = fit(x, flat);
    CHECK(c.fit.b == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.fit.r2 == 0.0);
    CHECK(c.fit.p == 1.0);
}

TEST_CASE("fit statistics against a direct computation")
{
    // Closed-form OLS on a small hand set: ln x = 0, 1, 2, 3 and ln y = 1, 2, 2, 4.
    const std::vector<double> lx{0, 1, 2, 3}, ly{1, 2, 2, 4};
    std::vector<double> x, y;
    for (std::size_t i = 0; i < 4; ++i) {
        x.push_back(std::exp(lx[i]));
        y.push_back(std::exp(ly[i]));
    }
    const auto r = fit(x, y).fit;
    // sxx = 5, sxy = 4.5, syy = 4.75, b = 0.9, a = 2.25 - 0.9 * 1.5
    CHECK(r.b == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(r.log_a == doctest::Approx(0.9).epsilon(1e-12));
    const double sse = 4.75 - 0.9 * 4.5;
    CHECK(r.r2 == doctest::Approx(1.0 - sse / 4.75).epsilon(1e-12));
    CHECK(r.adj_r2 == doctest::Approx(1.0 - (1.0 - r.r2) * 3.0 / 2.0).epsilon(1e-12));
    CHECK(r.se_b == doctest::Approx(std::sqrt(sse / 2.0 / 5.0)).epsilon(1e-12));
    CHECK(r.se_log_a == doctest::Approx(std::sqrt(sse / 2.0 * (0.25 + 2.25 / 5.0))).epsilon(1e-12));
    const double fstat = r.r2 / ((1.0 - r.r2) / 2.0);
    CHECK(r.f == doctest::Approx(fstat).epsilon(1e-12));
    // F(1, 2) upper tail has the closed form 1 - sqrt(f / (f + 2)).
    CHECK(r.p == doctest::Approx(1.0 - std::sqrt(fstat / (fstat + 2.0))).epsilon(1e-10));
    CHECK(r.adj_r2 <= r.r2);
}

TEST_CASE("fit invariances")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 0.3);
    std::vector<double> x, y;
    for (int i = 0; i < 60; ++i) {
        x.push_back(uniform(rng, 10, 5000));
        y.push_back(4.0 * std::pow(x.back(), 0.3) * std::exp(nd(rng)));
    }
    const auto base = fit(x, y).fit;
    std::vector<double> scaled = y;
    for (double& v : scaled) v *= 3.5;
    const auto s = fit(x, scaled).fit;
    CHECK(std::abs(s.b - base.b) <= 1e-12);
    CHECK(std::abs(s.log_a - base.log_a - std::log(3.5)) <= 1e-12);
    CHECK(std::abs(s.r2 - base.r2) <= 1e-12);

    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> px, py;
    for (std::size_t i : order) {
        px.push_back(x[i]);
        py.push_back(y[i]);
    }
    const auto p = fit(px, py).fit;
    CHECK(p.b == doctest::Approx(base.b).epsilon(1e-12));
    CHECK(p.r2 == doctest::Approx(base.r2).epsilon(1e-12));

    CHECK(base.r2 >= 0.0);
    CHECK(base.r2 <= 1.0);
    CHECK(base.adj_r2 <= base.r2);
    CHECK((base.p > 0.0 && base.p <= 1.0));
}

TEST_CASE("p-value falls as |t| grows")
{
    for (double n : {5.0, 30.0, 500.0}) {
        double last = 1.0;
        for (double t = 0.0; t <= 8.0; t += 0.25) {
            const double p = f_survival(t * t, 1.0, n - 2.0);
            CHECK(p <= last);
            last = p;
        }
        CHECK(f_survival(0.0, 1.0, n - 2.0) == 1.0);
    }
}

TEST_CASE("bad regression input")
{
    const auto r = fit({1, 2, -3, 4, 5}, {1, 0, 2, 3, 4});
    CHECK(r.rejected == std::vector<std::size_t>{1, 2});
    CHECK(r.fit.n == 3);
    CHECK_THROWS_AS(fit({1, 2}, {1, 2}), DataError);
    CHECK_THROWS_AS(fit({1, 2, -1, 0}, {1, 2, 3, 4}), DataError);
    CHECK_THROWS_AS(fit({3, 3, 3}, {1, 2, 3}), DataError);
    CHECK_THROWS_AS(fit({1, 2, 3}, {1, 2}), DataError);
}

TEST_CASE("group comparison")
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd(0.0, 0.1);
    // Blocks whose core buildings follow the trend; raw adds unrelated sheds.
    std::vector<double> dist, raw_area, core_area;
    for (int b = 0; b < 80; ++b) {
        const double d = uniform(rng, 200, 8000);
        const double core = 0.02 * std::pow(d, 0.4) * std::exp(nd(rng));
        const double noise = uniform(rng, 0.0, 0.3);
        dist.push_back(d);
        core_area.push_back(core);
        raw_area.push_back(core + noise);
    }
    const auto raw = fit(dist, raw_area).fit;
    const auto core = fit(dist, core_area).fit;
    CHECK(core.r2 >= raw.r2);

    const auto cmp = compare_groups("e_area", {raw, core, core});
    CHECK(cmp.rows[0].group == Group::raw);
    CHECK(cmp.rows[1].group == Group::core);
    CHECK(cmp.rows[2].group == Group::representative);
    CHECK(*cmp.rows[0].delta_r2 == 0.0);
    CHECK(*cmp.rows[1].delta_r2 == doctest::Approx(core.r2 - raw.r2));
    CHECK_FALSE(cmp.partial);

    const auto same = compare_groups("e_num", {raw, raw, raw});
    for (const auto& row : same.rows) CHECK(*row.delta_r2 == 0.0);

    const auto part = compare_groups("e_num", {std::nullopt, core, std::nullopt});
    CHECK(part.partial);
    CHECK_FALSE(part.rows[1].delta_r2);
    const auto j = to_json(part);
    CHECK(j["groups"][0]["fit"].is_null());
    CHECK(j["groups"][1]["fit"]["n"] == 80);
}
