#include <doctest.h>

#include <functional>
#include <sstream>

#include "nn/autograd.hpp"
#include "nn/optim.hpp"

using namespace como;
using namespace como::nn;

namespace {

using Builder = std::function<Var(Tape&, std::vector<Var>&)>;

double evaluate(std::vector<Parameter>& params, const Builder& build)
{
    Tape t;
    std::vector<Var> leaves;
    for (auto& p : params) leaves.push_back(t.leaf(p));
    return build(t, leaves).scalar();
}

// Largest norm-relative gap between backprop and central differences.
double gradient_error(std::vector<Parameter>& params, const Builder& build, double h = 1e-5)
{
    for (auto& p : params) p.zero_grad();
    {
        Tape t;
        std::vector<Var> leaves;
        for (auto& p : params) leaves.push_back(t.leaf(p));
        t.backward(build(t, leaves));
    }
    double worst = 0.0;
    for (auto& p : params) {
        Matrix numeric(p.value.rows(), p.value.cols());
        for (Eigen::Index r = 0; r < p.value.rows(); ++r)
            for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
                const double keep = p.value(r, c);
                p.value(r, c) = keep + h;
                const double up = evaluate(params, build);
                p.value(r, c) = keep - h;
                const double down = evaluate(params, build);
                p.value(r, c) = keep;
                numeric(r, c) = (up - down) / (2.0 * h);
            }
        const double scale = std::max({p.grad.norm(), numeric.norm(), 1e-8});
        worst = std::max(worst, (p.grad - numeric).norm() / scale);
    }
    return worst;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0)
{
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = lo + (hi - lo) * uniform01(rng);
    return m;
}

}  // namespace

TEST_CASE("scalar square")
{
    Parameter x("x", Matrix::Constant(1, 1, 3.0));
    Tape t;
    Var v = t.leaf(x);
    t.backward(mul(v, v));
    CHECK(x.grad(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("sum of elementwise product")
{
    std::mt19937_64 rng(1);
    Parameter a("a", random_matrix(3, 4, rng));
    const Matrix b = random_matrix(3, 4, rng);
    Tape t;
    t.backward(sum(mul(t.leaf(a), t.constant(b))));
    CHECK((a.grad - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradients accumulate across tapes until cleared")
{
    Parameter x("x", Matrix::Constant(1, 1, 2.0));
    for (int i = 0; i < 2; ++i) {
        Tape t;
        t.backward(scale(t.leaf(x), 3.0));
    }
    CHECK(x.grad(0, 0) == doctest::Approx(6.0));
    x.zero_grad();
    CHECK(x.grad(0, 0) == 0.0);
}

TEST_CASE("backward on a detached loss is an error")
{
    Tape t;
    Var c = t.constant(Matrix::Ones(1, 1));
    CHECK_THROWS_AS(t.backward(c), Error);
    Parameter p("p", Matrix::Ones(2, 2));
    CHECK_THROWS_AS(t.backward(t.leaf(p)), Error);
}

TEST_CASE("three-layer perceptron matches finite differences")
{
    std::mt19937_64 rng(7);
    std::vector<Parameter> ps;
    ps.emplace_back("w1", glorot(5, 8, rng));
    ps.emplace_back("b1", random_matrix(1, 8, rng, -0.1, 0.1));
    ps.emplace_back("w2", glorot(8, 6, rng));
    ps.emplace_back("b2", random_matrix(1, 6, rng, -0.1, 0.1));
    ps.emplace_back("w3", glorot(6, 3, rng));
    ps.emplace_back("b3", random_matrix(1, 3, rng, -0.1, 0.1));
    const Matrix x = random_matrix(4, 5, rng);
    const Builder mlp = [&](Tape& t, std::vector<Var>& v) {
        Var h = relu(add_row(matmul(t.constant(x), v[0]), v[1]));
        h = relu(add_row(matmul(h, v[2]), v[3]));
        Var logits = add_row(matmul(h, v[4]), v[5]);
        Var lp = log_softmax(logits);
        return scale(add(add(pick(lp, 0, 1), pick(lp, 1, 2)), add(pick(lp, 2, 0), pick(lp, 3, 1))), -0.25);
    };
    CHECK(gradient_error(ps, mlp) <= 1e-6);
}

TEST_CASE("composite ops match finite differences")
{
    std::mt19937_64 rng(11);
    SUBCASE("sigmoid, log, pow, mean")
    {
        std::vector<Parameter> ps;
        ps.emplace_back("a", random_matrix(3, 3, rng, -2, 2));
        const Builder f = [](Tape&, std::vector<Var>& v) {
            Var s = sigmoid(v[0]);
            return add(mean(log(s)), sum(pow(add_const(s, 0.5), -0.5)));
        };
        CHECK(gradient_error(ps, f) <= 1e-6);
    }
    SUBCASE("row and column scaling, row sums")
    {
        std::vector<Parameter> ps;
        ps.emplace_back("m", random_matrix(4, 4, rng, 0.1, 1.0));
        ps.emplace_back("x", random_matrix(4, 3, rng));
        const Builder f = [](Tape&, std::vector<Var>& v) {
            Var d = pow(add_const(row_sum(v[0]), 1.0), -0.5);
            Var norm = scale_cols(scale_rows(v[0], d), d);
            return sum(mul(matmul(norm, v[1]), matmul(norm, v[1])));
        };
        CHECK(gradient_error(ps, f) <= 1e-6);
    }
    SUBCASE("mean and max readout with concatenation")
    {
        std::vector<Parameter> ps;
        ps.emplace_back("h", random_matrix(5, 4, rng));
        ps.emplace_back("w", random_matrix(8, 2, rng));
        const Builder f = [](Tape&, std::vector<Var>& v) {
            Var r = concat_cols(mean_rows(v[0]), max_rows(v[0]));
            return pick(log_softmax(matmul(r, v[1])), 0, 1);
        };
        CHECK(gradient_error(ps, f) <= 1e-6);
    }
    SUBCASE("masked aggregation through scatter and submatrix")
    {
        const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}, {1, 2}, {2, 3}, {0, 3}, {1, 3}};
        const Matrix aff = random_matrix(4, 4, rng, 0.2, 1.0);
        std::vector<Parameter> ps;
        ps.emplace_back("m", random_matrix(5, 1, rng, -1, 1));
        ps.emplace_back("f", random_matrix(1, 3, rng, -1, 1));
        const Matrix x = random_matrix(4, 3, rng);
        const std::vector<std::size_t> keep{3, 0, 1};
        const Builder f = [&](Tape& t, std::vector<Var>& v) {
            Var a = mul(t.constant(aff), scatter_symmetric(sigmoid(v[0]), edges, 4));
            Var feats = mul_row(t.constant(x), sigmoid(v[1]));
            Var h = matmul(a, feats);
            Var sub_a = submatrix(a, keep);
            Var g = gather_rows(h, keep);
            return sum(matmul(sub_a, g));
        };
        CHECK(gradient_error(ps, f) <= 1e-6);
    }
}

TEST_CASE("max readout picks the lowest row on ties")
{
    Parameter p("p", Matrix{{1.0, 2.0}, {1.0, 5.0}, {0.0, 5.0}});
    Tape t;
    t.backward(sum(max_rows(t.leaf(p))));
    CHECK(p.grad(0, 0) == 1.0);
    CHECK(p.grad(1, 0) == 0.0);
    CHECK(p.grad(1, 1) == 1.0);
    CHECK(p.grad(2, 1) == 0.0);
}

TEST_CASE("softmax and cross-entropy")
{
    std::mt19937_64 rng(13);
    const Matrix logits = random_matrix(6, 5, rng, -30, 30);
    const Matrix p = softmax_rows(logits);
    for (Eigen::Index r = 0; r < p.rows(); ++r) CHECK(std::abs(p.row(r).sum() - 1.0) <= 1e-12);
    Tape t;
    Var lp = log_softmax(t.constant(Matrix{{80.0, 0.0, 0.0}}));
    CHECK(-pick(lp, 0, 0).scalar() == doctest::Approx(0.0).epsilon(1e-12));
    const Matrix huge = softmax_rows(Matrix{{1e6, -1e6}});
    CHECK(std::isfinite(huge(0, 1)));
}

TEST_CASE("adam updates")
{
    SUBCASE("zero gradient leaves parameters unchanged")
    {
        Parameter p("p", Matrix::Constant(2, 2, 1.5));
        Adam opt(0.01);
        Parameter* list[] = {&p};
        opt.step(list);
        CHECK(p.value == Matrix::Constant(2, 2, 1.5));
    }
    SUBCASE("first step has magnitude lr")
    {
        Parameter p("p", Matrix::Zero(1, 3));
        p.grad = Matrix{{0.3, -7.0, 1e-3}};
        Adam opt(0.01);
        Parameter* list[] = {&p};
        opt.step(list);
        for (Eigen::Index c = 0; c < 3; ++c) CHECK(std::abs(p.value(0, c)) == doctest::Approx(0.01).epsilon(1e-4));
        CHECK(p.value(0, 0) < 0.0);
        CHECK(p.value(0, 1) > 0.0);
    }
    SUBCASE("quadratic bowl converges")
    {
        const Matrix target{{3.0, -2.0, 0.5}};
        Parameter p("p", Matrix::Zero(1, 3));
        Adam opt(0.01);
        Parameter* list[] = {&p};
        int steps = 0;
        double loss = 1.0;
        while (steps < 5000) {
            p.zero_grad();
            Tape t;
            Var d = sub(t.leaf(p), t.constant(target));
            Var l = sum(mul(d, d));
            loss = l.scalar();
            if (loss <= 1e-6) break;
            t.backward(l);
            opt.step(list);
            ++steps;
        }
        CHECK(loss <= 1e-6);
        CHECK(steps < 5000);
    }
    SUBCASE("plain gradient descent")
    {
        Parameter p("p", Matrix::Constant(1, 1, 1.0));
        p.grad = Matrix::Constant(1, 1, 2.0);
        Sgd opt(0.1);
        Parameter* list[] = {&p};
        opt.step(list);
        CHECK(p.value(0, 0) == doctest::Approx(0.8));
    }
}

TEST_CASE("checkpoint round trip is exact")
{
    std::mt19937_64 rng(17);
    Parameter a("layer.w", glorot(7, 3, rng)), b("layer.b", random_matrix(1, 3, rng));
    std::stringstream ss;
    const Parameter* out[] = {&a, &b};
    save_checkpoint(ss, out);
    Parameter a2("layer.w", Matrix::Zero(7, 3)), b2("layer.b", Matrix::Zero(1, 3));
    Parameter* in[] = {&b2, &a2};
    load_checkpoint(ss, in);
    CHECK(a2.value == a.value);
    CHECK(b2.value == b.value);

    std::stringstream again(ss.str());
    Parameter wrong("layer.w", Matrix::Zero(3, 7));
    Parameter* bad[] = {&wrong};
    ss.clear();
    ss.seekg(0);
    CHECK_THROWS_AS(load_checkpoint(ss, bad), DataError);
    Parameter missing("other", Matrix::Zero(1, 1));
    Parameter* none[] = {&missing};
    CHECK_THROWS_AS(load_checkpoint(again, none), DataError);
}

TEST_CASE("random helpers are reproducible")
{
    std::mt19937_64 a(5), b(5);
    for (int i = 0; i < 100; ++i) {
        const double u = uniform01(a);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == uniform01(b));
    }
    double s = 0.0, s2 = 0.0;
    std::mt19937_64 g(9);
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double z = standard_normal(g);
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.03);
    CHECK(std::abs(s2 / n - 1.0) < 0.05);
}
