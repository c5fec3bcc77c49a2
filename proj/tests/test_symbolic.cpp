#include <doctest.h>

#include "symbolic/symbolic.hpp"
#include "test_support.hpp"

using namespace como;
using namespace como::symbolic;
using como::testing::adjusted_rand_index;
using como::testing::uniform;

namespace {

MatrixXd blobs(std::mt19937_64& rng, std::size_t per, double sigma, std::vector<int>& truth)
{
    std::normal_distribution<double> noise(0.0, sigma);
    MatrixXd x(static_cast<Eigen::Index>(8 * per), 2);
    truth.clear();
    for (int c = 0; c < 8; ++c)
        for (std::size_t i = 0; i < per; ++i) {
            const auto r = static_cast<Eigen::Index>(truth.size());
            x(r, 0) = 1.5 * (c % 4) + noise(rng);
            x(r, 1) = 1.5 * (c / 4) + noise(rng);
            truth.push_back(c);
        }
    return x;
}

geo::Polygon square(double x0, double y0, double side)
{
    return geo::rectangle(side, side, {x0, y0});
}

}  // namespace

TEST_CASE("principal-component projection")
{
    SUBCASE("uncorrelated 2-D input maps onto itself")
    {
        const MatrixXd x{{0, 1}, {0, -1}, {2, 0}, {-2, 0}};
        const auto e = reduce_2d(x);
        CHECK((e.points - x).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(e.explained[0] == doctest::Approx(0.8));
        CHECK(e.explained[1] == doctest::Approx(0.2));
        const MatrixXd swapped{{1, 0}, {-1, 0}, {0, 2}, {0, -2}};
        const auto s = reduce_2d(swapped);
        CHECK((s.points.col(0) - swapped.col(1)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((s.points.col(1) - swapped.col(0)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("planar 3-D data reconstructs exactly")
    {
        std::mt19937_64 rng(2);
        MatrixXd x(50, 3);
        for (Eigen::Index i = 0; i < 50; ++i) {
            const double u = uniform(rng, -3, 3), v = uniform(rng, -3, 3);
            x.row(i) << 1 + u + 2 * v, -u + 0.5 * v, 2 - 3 * u;
        }
        const auto e = reduce_2d(x);
        const MatrixXd back = (e.points * e.components.transpose()).rowwise() + e.mean.transpose();
        CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(e.explained[0] + e.explained[1] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK_FALSE(e.rank_deficient);
    }
    SUBCASE("retained variance against a singular value oracle")
    {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> nd;
        MatrixXd x(200, 10);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = nd(rng) * (1.0 + 0.3 * static_cast<double>(j));
        const auto e = reduce_2d(x);
        const MatrixXd centered = x.rowwise() - x.colwise().mean();
        Eigen::JacobiSVD<MatrixXd> svd(centered);
        const auto sv = svd.singularValues().array().square();
        CHECK(e.explained[0] == doctest::Approx(sv(0) / sv.sum()).epsilon(1e-10));
        CHECK(e.explained[1] == doctest::Approx(sv(1) / sv.sum()).epsilon(1e-10));
        const double kept = e.points.squaredNorm();
        CHECK(kept == doctest::Approx(sv(0) + sv(1)).epsilon(1e-10));
        for (int axis = 0; axis < 2; ++axis) {
            Eigen::Index big;
            e.components.col(axis).cwiseAbs().maxCoeff(&big);
            CHECK(e.components(big, axis) > 0.0);
        }
    }
    SUBCASE("rank one and bad shapes")
    {
        MatrixXd x(5, 3);
        for (Eigen::Index i = 0; i < 5; ++i) x.row(i) << i, 2.0 * i, -1.0 * i;
        const auto e = reduce_2d(x);
        CHECK(e.rank_deficient);
        CHECK(e.points.col(1).cwiseAbs().maxCoeff() == 0.0);
        CHECK_THROWS_AS(reduce_2d(MatrixXd::Ones(1, 3)), DataError);
        CHECK_THROWS_AS(reduce_2d(MatrixXd::Ones(4, 1)), DataError);
    }
}

TEST_CASE("k-means recovers planted blobs")
{
    std::mt19937_64 rng(5);
    std::vector<int> truth;
    const MatrixXd x = blobs(rng, 25, 0.05, truth);
    const auto c = cluster_types(x, 8, 7);
    CHECK(adjusted_rand_index(c.types, truth) >= 0.99);
    for (int t : c.types) CHECK((t >= 1 && t <= 8));
    for (Eigen::Index t = 1; t < 8; ++t) {
        const bool ordered = c.centroids(t - 1, 0) < c.centroids(t, 0) ||
                             (c.centroids(t - 1, 0) == c.centroids(t, 0) && c.centroids(t - 1, 1) <= c.centroids(t, 1));
        CHECK(ordered);
    }

    const auto again = cluster_types(x, 8, 99);
    CHECK(again.inertia == doctest::Approx(c.inertia).epsilon(1e-12));
    CHECK(again.types == c.types);

    // Row order does not change the partition.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(x.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    MatrixXd px(x.rows(), x.cols());
    std::vector<int> ptypes;
    for (std::size_t i = 0; i < perm.size(); ++i) px.row(static_cast<Eigen::Index>(i)) = x.row(perm[i]);
    const auto pc = cluster_types(px, 8, 7);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(pc.types[i] == c.types[static_cast<std::size_t>(perm[i])]);
}

TEST_CASE("k-means edge cases")
{
    MatrixXd dup(16, 2);
    for (Eigen::Index i = 0; i < 8; ++i) {
        dup.row(2 * i) << static_cast<double>(i), static_cast<double>(i * i);
        dup.row(2 * i + 1) = dup.row(2 * i);
    }
    const auto d = cluster_types(dup, 8, 1);
    CHECK(d.inertia == 0.0);
    for (Eigen::Index i = 0; i < 8; ++i) CHECK(d.types[static_cast<std::size_t>(2 * i)] == d.types[static_cast<std::size_t>(2 * i + 1)]);

    // Fewer distinct points than clusters still assigns everything.
    const auto flat = cluster_types(MatrixXd::Zero(10, 2), 3, 1, 2);
    CHECK(flat.inertia == 0.0);
    CHECK(flat.types.size() == 10);

    CHECK_THROWS_AS(cluster_types(MatrixXd::Zero(5, 2), 8, 1), DataError);
    CHECK_THROWS_AS(cluster_types(MatrixXd::Zero(5, 2), 0, 1), ConfigError);
}

TEST_CASE("configuration dominance")
{
    using geo::UrbanFunction;
    const std::vector<int> a{5, 5, 5, 4};
    const auto ca = classify_configuration(a, UrbanFunction::residential);
    CHECK(ca.kind() == "T5-Dom");
    CHECK(ca.share == 0.75);
    CHECK(ca.core_count == 4);

    const std::vector<int> b{5, 5, 4, 4, 3, 2, 1, 6, 7, 8};
    CHECK(classify_configuration(b, UrbanFunction::residential).kind() == "Diverse");

    const std::vector<int> c{6, 6, 8};
    CHECK(classify_configuration(c, UrbanFunction::commercial).kind() == "T6-Dom");
    CHECK(classify_configuration(c, UrbanFunction::residential).kind() == "T6-Dom");

    const std::vector<int> sixty{2, 2, 2, 3, 4};
    CHECK(classify_configuration(sixty, UrbanFunction::residential).kind() == "T2-Dom");
    const std::vector<int> half{2, 2, 3, 4};
    CHECK(classify_configuration(half, UrbanFunction::residential).kind() == "Diverse");
    CHECK(classify_configuration(half, UrbanFunction::institutional).kind() == "T2-Dom");

    const std::vector<int> lone{3};
    CHECK(classify_configuration(lone, UrbanFunction::commercial).kind() == "Diverse");
    const std::vector<int> tie{7, 7, 3, 3};
    CHECK(classify_configuration(tie, UrbanFunction::commercial).kind() == "T3-Dom");

    CHECK_THROWS_AS(classify_configuration(std::vector<int>{}, UrbanFunction::commercial), DataError);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> types(1 + rng() % 12);
        for (int& t : types) t = 1 + static_cast<int>(rng() % 4);
        const auto f = static_cast<UrbanFunction>(rng() % geo::kFunctionCount);
        const auto ref = classify_configuration(types, f);
        std::shuffle(types.begin(), types.end(), rng);
        const auto again = classify_configuration(types, f);
        CHECK(again.kind() == ref.kind());
        CHECK(again.share == ref.share);
    }
}

TEST_CASE("neighborhood representatives")
{
    auto cfg = [](std::string id, int type) {
        ConfigurationType c;
        c.block_id = std::move(id);
        c.dominant_type = type;
        return c;
    };
    const std::vector<geo::Neighborhood> hoods{
        {"n1", "North", square(0, 0, 100)},
        {"n2", "South", square(200, 0, 100)},
        {"n3", "Tie", square(400, 0, 100)},
        {"n4", "Empty", square(600, 0, 100)},
    };
    const std::vector<BlockConfiguration> blocks{
        {cfg("a", 5), square(10, 10, 10)},   {cfg("b", 5), square(30, 10, 10)},
        {cfg("c", 8), square(50, 10, 10)},   {cfg("d", 0), square(210, 10, 10)},
        {cfg("e", 0), square(230, 10, 10)},  {cfg("f", 7), square(250, 10, 10)},
        {cfg("g", 8), square(410, 10, 10)},  {cfg("h", 5), square(430, 10, 10)},
        {cfg("i", 0), square(450, 10, 10)},  {cfg("z", 1), square(900, 900, 10)},
    };
    const auto r = regional_representative(hoods, blocks);
    REQUIRE(r.neighborhoods.size() == 3);
    CHECK(r.neighborhoods[0].representative == "T5-Dom");
    CHECK(r.neighborhoods[0].histogram.at("T5-Dom") == 2);
    CHECK(r.neighborhoods[1].representative == "Diverse");
    CHECK(r.neighborhoods[2].representative == "T5-Dom");
    CHECK(r.neighborhoods[2].blocks == 3);
    CHECK(r.empty_neighborhoods == std::vector<std::string>{"n4"});
    CHECK(r.unassigned_blocks == std::vector<std::string>{"z"});

    const auto pair = regional_representative({hoods[0]}, {{cfg("p", 8), square(5, 5, 5)}, {cfg("q", 5), square(20, 5, 5)}});
    CHECK(pair.neighborhoods[0].representative == "T5-Dom");
}
