#include <doctest.h>

#include <set>
#include <sstream>

#include "gnn/bundle.hpp"
#include "gnn/metrics.hpp"
#include "gnn/model.hpp"
#include "gnn/train.hpp"
#include "graph/delaunay.hpp"
#include "nn/optim.hpp"
#include "test_support.hpp"

using namespace como;
using namespace como::gnn;
using como::testing::random_input;
using como::testing::uniform;

namespace {

GraphInput permuted(const GraphInput& g, const std::vector<std::size_t>& perm)
{
    // perm[new] = old
    GraphInput out = g;
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
    for (std::size_t k = 0; k < perm.size(); ++k) {
        out.features.row(static_cast<Eigen::Index>(k)) = g.features.row(static_cast<Eigen::Index>(perm[k]));
        for (std::size_t l = 0; l < perm.size(); ++l)
            out.affinity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
                g.affinity(static_cast<Eigen::Index>(perm[k]), static_cast<Eigen::Index>(perm[l]));
    }
    out.edges.clear();
    for (auto [i, j] : g.edges) out.edges.emplace_back(std::min(inv[i], inv[j]), std::max(inv[i], inv[j]));
    return out;
}

}  // namespace

TEST_CASE("graph convolution")
{
    SUBCASE("single node with identity weights is a plain ReLU")
    {
        nn::Tape t;
        const Matrix h{{1.5, -2.0, 0.25}};
        auto out = gcn_layer(t.constant(Matrix::Zero(1, 1)), t.constant(h), t.constant(Matrix::Identity(3, 3)),
                             t.constant(Matrix::Zero(1, 3)));
        CHECK(out.value() == Matrix{{1.5, 0.0, 0.25}});
    }
    SUBCASE("identical connected nodes stay identical")
    {
        nn::Tape t;
        std::mt19937_64 rng(3);
        const Matrix h = Matrix::Constant(2, 4, 0.7);
        auto out = gcn_layer(t.constant(Matrix{{0, 0.6}, {0.6, 0}}), t.constant(h), t.constant(nn::glorot(4, 5, rng)),
                             t.constant(Matrix::Zero(1, 5)));
        CHECK(out.value().row(0) == out.value().row(1));
    }
    SUBCASE("dense oracle")
    {
        std::mt19937_64 rng(5);
        const GraphInput g = random_input(rng, 9, 0, 6);
        const Matrix w = nn::glorot(6, 4, rng);
        const Matrix b = Matrix::Constant(1, 4, 0.05);
        nn::Tape t;
        auto out = gcn_layer(t.constant(g.affinity), t.constant(g.features), t.constant(w), t.constant(b));
        const Eigen::Index n = g.affinity.rows();
        Matrix a = g.affinity + Matrix::Identity(n, n);
        Matrix norm(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) norm(i, j) = a(i, j) / std::sqrt(a.row(i).sum() * a.row(j).sum());
        Matrix expected = norm * g.features * w;
        expected.rowwise() += b.row(0);
        expected = expected.cwiseMax(0.0);
        CHECK((out.value() - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("pooling scores and selection")
{
    CHECK(pooled_size(10, 0.3) == 3);
    CHECK(pooled_size(40, 0.3) == 12);
    CHECK(pooled_size(12, 0.3) == 4);
    CHECK(pooled_size(4, 0.3) == 2);
    CHECK(pooled_size(2, 0.3) == 1);
    CHECK(pooled_size(1, 0.3) == 1);

    const Matrix same = Matrix::Constant(5, 3, 2.0);
    Matrix ring = Matrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i) ring(i, (i + 1) % 5) = ring((i + 1) % 5, i) = 0.5;
    const auto zero = information_scores(ring, same);
    CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
    CHECK(top_k(zero, 2) == std::vector<std::size_t>{0, 1});

    Matrix star = Matrix::Zero(4, 4);
    for (int leaf = 1; leaf < 4; ++leaf) star(0, leaf) = star(leaf, 0) = 1.0;
    const Matrix f{{1, 0}, {1, 0}, {1, 0}, {5, 3}};
    const auto c = information_scores(star, f);
    CHECK(std::abs(c(0) - 7.0 / 3.0) <= 1e-12);
    CHECK(std::abs(c(1)) <= 1e-12);
    CHECK(std::abs(c(2)) <= 1e-12);
    CHECK(std::abs(c(3) - 7.0) <= 1e-12);
    CHECK(top_k(c, 1) == std::vector<std::size_t>{3});

    Matrix lonely = Matrix::Zero(2, 2);
    CHECK(information_scores(lonely, Matrix{{1, -2}, {0, 3}})(0) == doctest::Approx(3.0));
}

TEST_CASE("hierarchical pooling sizes through the model")
{
    std::mt19937_64 rng(7);
    const GraphInput g = random_input(rng, 40, 0);
    Model model(ModelConfig{}, 11);
    nn::Tape t;
    const auto fwd = model.forward(t, g);
    REQUIRE(fwd.kept.size() == 3);
    CHECK(fwd.kept[0].size() == 12);
    CHECK(fwd.kept[1].size() == 4);
    CHECK(fwd.kept[2].size() == 2);
    for (std::size_t l = 1; l < 3; ++l)
        for (std::size_t v : fwd.kept[l])
            CHECK(std::find(fwd.kept[l - 1].begin(), fwd.kept[l - 1].end(), v) != fwd.kept[l - 1].end());
}

TEST_CASE("readout and output distribution")
{
    nn::Tape t;
    const Matrix row{{0.5, -1.0, 3.0}};
    auto h = t.constant(row);
    CHECK(nn::mean_rows(h).value() == row);
    CHECK(nn::max_rows(h).value() == row);

    std::mt19937_64 rng(13);
    Model model(ModelConfig{}, 17);
    for (std::size_t n : {4u, 7u, 25u}) {
        const Matrix p = model.predict_proba(random_input(rng, n, 0));
        CHECK(p.cols() == 6);
        CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("forward pass is invariant to node order")
{
    std::mt19937_64 rng(19);
    Model model(ModelConfig{}, 23);
    for (int trial = 0; trial < 5; ++trial) {
        const GraphInput g = random_input(rng, 15, 0);
        std::vector<std::size_t> perm(15);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        nn::Tape t1, t2;
        const Matrix a = model.forward(t1, g).log_probs.value();
        const Matrix b = model.forward(t2, permuted(g, perm)).log_probs.value();
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("end-to-end gradient check on a six-node graph")
{
    std::mt19937_64 rng(29);
    const GraphInput g = random_input(rng, 6, 2);
    Model model(ModelConfig{}, 31);
    auto params = model.parameters();
    auto loss_of = [&]() {
        nn::Tape t;
        return -model.forward(t, g).log_probs.value()(0, 2);
    };
    std::vector<std::vector<std::size_t>> base_kept;
    {
        for (auto* p : params) p->zero_grad();
        nn::Tape t;
        auto fwd = model.forward(t, g);
        base_kept = fwd.kept;
        t.backward(nn::scale(nn::pick(fwd.log_probs, 0, 2), -1.0));
    }
    const double h = 1e-5;
    double worst = 0.0;
    for (auto* p : params) {
        Matrix numeric(p->value.rows(), p->value.cols());
        for (Eigen::Index r = 0; r < p->value.rows(); ++r)
            for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
                const double keep = p->value(r, c);
                p->value(r, c) = keep + h;
                const double up = loss_of();
                p->value(r, c) = keep - h;
                const double down = loss_of();
                p->value(r, c) = keep;
                numeric(r, c) = (up - down) / (2.0 * h);
            }
        const double scale = std::max({p->grad.norm(), numeric.norm(), 1e-8});
        worst = std::max(worst, (p->grad - numeric).norm() / scale);
    }
    nn::Tape t;
    CHECK(model.forward(t, g).kept == base_kept);
    CHECK(worst <= 1e-4);
}

TEST_CASE("metrics on the published confusion matrix")
{
    const Confusion table{{{139, 7, 50, 13, 0, 26},
                           {0, 0, 0, 0, 0, 0},
                           {40, 7, 95, 15, 8, 23},
                           {0, 0, 0, 0, 0, 0},
                           {3, 4, 10, 0, 36, 1},
                           {72, 6, 68, 75, 8, 3989}}};
    const auto r = evaluate(table);
    CHECK(std::abs(r.accuracy - 0.907) <= 5e-4);
    CHECK(std::abs(r.macro_recall - 0.442) <= 5e-4);
    CHECK(std::abs(r.per_class[5].recall - 0.988) <= 5e-4);
    CHECK(std::abs(r.per_class[0].recall - 0.547) <= 5e-4);
    CHECK(std::abs(r.per_class[4].recall - 0.692) <= 5e-4);
    CHECK(r.accuracy == doctest::Approx(4259.0 / 4695.0));
    CHECK(r.micro_f1 == r.accuracy);
    CHECK(r.weighted_recall == r.accuracy);
    // Arithmetic the paper also reports for this matrix.
    CHECK(std::abs(r.weighted_precision - 0.877) <= 5e-4);
    CHECK(std::abs(r.weighted_f1 - 0.891) <= 5e-4);
    CHECK(std::abs(r.macro_precision - 0.452) <= 5e-4);
    CHECK(std::abs(r.macro_f1 - 0.446) <= 5e-4);

    Confusion perfect{};
    for (std::size_t c = 0; c < 6; ++c) perfect[c][c] = 3 + static_cast<long long>(c);
    const auto p = evaluate(perfect);
    for (double v : {p.accuracy, p.micro_f1, p.macro_precision, p.macro_recall, p.macro_f1, p.weighted_precision,
                     p.weighted_recall, p.weighted_f1})
        CHECK(v == 1.0);

    CHECK_THROWS_AS(evaluate(Confusion{}), DataError);
    Confusion negative{};
    negative[0][0] = -1;
    CHECK_THROWS_AS(evaluate(negative), DataError);
}

TEST_CASE("micro f1, accuracy and weighted recall agree on random matrices")
{
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        Confusion m{};
        for (auto& row : m)
            for (auto& v : row) v = static_cast<long long>(uniform(rng, 0, 40));
        const auto r = evaluate(m);
        CHECK(r.micro_f1 == r.accuracy);
        CHECK(r.weighted_recall == r.accuracy);
    }
}

TEST_CASE("stratified folds")
{
    std::vector<std::size_t> labels(90, 5);
    labels.resize(100, 0);
    const auto fold = stratified_kfold(labels, 10, 1);
    for (std::size_t f = 0; f < 10; ++f) {
        std::size_t res = 0, com = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (fold[i] == f) (labels[i] == 5 ? res : com)++;
        CHECK(res == 9);
        CHECK(com == 1);
    }
    CHECK_THROWS_AS(stratified_kfold(std::vector<std::size_t>{0, 1, 0}, 5, 1), DataError);

    const std::size_t counts[] = {254, 24, 223, 103, 52, 4039};
    std::vector<std::size_t> big;
    for (std::size_t c = 0; c < 6; ++c) big.insert(big.end(), counts[c], c);
    REQUIRE(big.size() == 4695);
    ModelConfig cfg;
    const auto splits = make_splits(big, cfg, 3);
    std::vector<int> tested(big.size(), 0);
    for (const auto& s : splits) {
        for (std::size_t i : s.test) ++tested[i];
        std::set<std::size_t> seen(s.train.begin(), s.train.end());
        for (std::size_t i : s.val) CHECK(seen.insert(i).second);
        for (std::size_t i : s.test) CHECK(seen.insert(i).second);
        CHECK(seen.size() == big.size());
        for (std::size_t c = 0; c < 6; ++c) {
            std::size_t in_fold = 0;
            for (std::size_t i : s.test) in_fold += big[i] == c;
            CHECK(std::abs(static_cast<double>(in_fold) - counts[c] / 10.0) <= 1.0);
        }
        CHECK(static_cast<double>(s.val.size()) == doctest::Approx(s.train.size() / 8.0).epsilon(0.05));
    }
    CHECK(std::all_of(tested.begin(), tested.end(), [](int t) { return t == 1; }));
}

TEST_CASE("training reduces loss and is deterministic")
{
    std::mt19937_64 rng(41);
    std::vector<GraphInput> set;
    for (int i = 0; i < 20; ++i) {
        GraphInput g = random_input(rng, 5 + i % 4, static_cast<std::size_t>(i % 2));
        // Planted signal in the first feature.
        g.features.col(0).setConstant(i % 2 ? 1.5 : -1.5);
        set.push_back(std::move(g));
    }
    ModelConfig cfg;
    cfg.max_epochs = 10;
    cfg.batch_size = 8;
    cfg.lr = 0.01;
    cfg.patience = 100;
    auto run = [&](std::string& ckpt) {
        Model model(cfg, 5);
        const auto res = train(model, set, {}, 9);
        std::stringstream ss;
        const auto ps = model.parameters();
        const std::vector<const nn::Parameter*> cps(ps.begin(), ps.end());
        nn::save_checkpoint(ss, cps);
        ckpt = ss.str();
        return res;
    };
    std::string a, b;
    const auto res = run(a);
    run(b);
    CHECK(a == b);
    REQUIRE(res.history.size() == 10);
    double best = res.history.front().train_loss;
    for (const auto& r : res.history) best = std::min(best, r.train_loss);
    CHECK(best < res.history.front().train_loss);
    CHECK(res.history.back().train_loss < res.history.front().train_loss);
}

TEST_CASE("early stopping restores the best epoch")
{
    std::mt19937_64 rng(43);
    std::vector<GraphInput> set;
    for (int i = 0; i < 8; ++i) set.push_back(random_input(rng, 5, static_cast<std::size_t>(i % 2)));
    ModelConfig cfg;
    cfg.max_epochs = 200;
    cfg.patience = 3;
    Model model(cfg, 1);
    const auto res = train(model, set, set, 2);
    CHECK(res.early_stopped);
    CHECK(res.history.size() == res.best_epoch + 3);
    CHECK(accuracy(model, set) == doctest::Approx(res.best_val_accuracy));
}

TEST_CASE("config validation")
{
    ModelConfig cfg;
    cfg.pool_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.split_val = 0.3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.optimizer = "rmsprop";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("model bundles round-trip exactly")
{
    std::mt19937_64 rng(47);
    ModelConfig cfg;
    cfg.hidden = 16;
    cfg.pool_rate = 0.5;
    Model model(cfg, 3);
    Eigen::MatrixXd raw(30, 22);
    for (Eigen::Index r = 0; r < raw.rows(); ++r)
        for (Eigen::Index c = 0; c < raw.cols(); ++c) raw(r, c) = c == 4 ? 1.0 : uniform(rng, 0, 50);
    const auto st = morpho::Standardizer::fit(raw);
    std::stringstream ss;
    save_bundle(ss, model, st);
    const std::string first = ss.str();
    auto back = load_bundle(ss);
    CHECK(back.model.config().hidden == 16);
    CHECK(back.model.config().pool_rate == 0.5);
    CHECK(back.standardizer.mean == st.mean);
    CHECK(back.standardizer.stddev == st.stddev);
    CHECK(back.standardizer.constant == st.constant);
    const auto g = random_input(rng, 9, 0);
    CHECK(back.model.predict_proba(g) == model.predict_proba(g));
    std::stringstream again;
    save_bundle(again, back.model, back.standardizer);
    CHECK(again.str() == first);

    std::stringstream bad("{\"format\":\"other\"}");
    CHECK_THROWS_AS(load_bundle(bad), DataError);
    std::stringstream junk("not json");
    CHECK_THROWS_AS(load_bundle(junk), DataError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"hiden", 3}}), DataError);
}
