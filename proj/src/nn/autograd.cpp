#include "nn/autograd.hpp"

#include <cmath>

namespace como::nn {

namespace {

Tape& same_tape(Var a, Var b)
{
    if (!a.tape || a.tape != b.tape) throw Error(ErrorKind::internal, "operands recorded on different tapes");
    return *a.tape;
}

void require_shape(bool ok, const char* op)
{
    if (!ok) throw Error(ErrorKind::internal, std::string(op) + ": shape mismatch");
}

}  // namespace

const Matrix& Var::value() const { return tape->value(id); }

double Var::scalar() const
{
    const Matrix& v = value();
    if (v.size() != 1) throw Error(ErrorKind::internal, "value is not a scalar");
    return v(0, 0);
}

Var Tape::constant(Matrix value)
{
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::leaf(Parameter& p)
{
    Node n;
    n.value = p.value;
    n.requires_grad = true;
    n.param = &p;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::vector<std::size_t> parents, BackwardFn fn)
{
    Node n;
    n.value = std::move(value);
    for (std::size_t p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Matrix& g)
{
    accumulate_with(id, [&](Matrix& dst) { dst += g; });
}

void Tape::backward(Var loss)
{
    if (loss.tape != this) throw Error(ErrorKind::internal, "loss belongs to another tape");
    Node& root = nodes_[loss.id];
    if (root.value.size() != 1) throw Error(ErrorKind::internal, "backward needs a scalar loss");
    if (!root.requires_grad) throw Error(ErrorKind::internal, "loss does not depend on any parameter");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    root.grad = Matrix::Ones(1, 1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.param) {
            if (n.param->grad.rows() != n.grad.rows() || n.param->grad.cols() != n.grad.cols())
                n.param->grad = Matrix::Zero(n.grad.rows(), n.grad.cols());
            n.param->grad += n.grad;
        } else if (n.backward) {
            const Matrix g = n.grad;
            n.backward(*this, g);
        }
    }
}

Var matmul(Var a, Var b)
{
    Tape& t = same_tape(a, b);
    require_shape(a.cols() == b.rows(), "matmul");
    const std::size_t ia = a.id, ib = b.id;
    return t.record(a.value() * b.value(), {ia, ib}, [ia, ib](Tape& t, const Matrix& g) {
        if (t.needs(ia)) t.accumulate_with(ia, [&](Matrix& d) { d.noalias() += g * t.value(ib).transpose(); });
        if (t.needs(ib)) t.accumulate_with(ib, [&](Matrix& d) { d.noalias() += t.value(ia).transpose() * g; });
    });
}

Var add(Var a, Var b)
{
    Tape& t = same_tape(a, b);
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add");
    const std::size_t ia = a.id, ib = b.id;
    return t.record(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, g);
    });
}

Var sub(Var a, Var b)
{
    Tape& t = same_tape(a, b);
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
    const std::size_t ia = a.id, ib = b.id;
    return t.record(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        t.accumulate_with(ib, [&](Matrix& d) { d -= g; });
    });
}

Var add_row(Var a, Var row)
{
    Tape& t = same_tape(a, row);
    require_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row");
    const std::size_t ia = a.id, ir = row.id;
    Matrix out = a.value();
    out.rowwise() += row.value().row(0);
    return t.record(std::move(out), {ia, ir}, [ia, ir](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        t.accumulate_with(ir, [&](Matrix& d) { d += g.colwise().sum(); });
    });
}

Var mul(Var a, Var b)
{
    Tape& t = same_tape(a, b);
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "mul");
    const std::size_t ia = a.id, ib = b.id;
    return t.record(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d += g.cwiseProduct(t.value(ib)); });
        t.accumulate_with(ib, [&](Matrix& d) { d += g.cwiseProduct(t.value(ia)); });
    });
}

Var mul_row(Var a, Var row)
{
    Tape& t = same_tape(a, row);
    require_shape(row.rows() == 1 && row.cols() == a.cols(), "mul_row");
    const std::size_t ia = a.id, ir = row.id;
    Matrix out = a.value().array().rowwise() * row.value().row(0).array();
    return t.record(std::move(out), {ia, ir}, [ia, ir](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d.array() += g.array().rowwise() * t.value(ir).row(0).array(); });
        t.accumulate_with(ir, [&](Matrix& d) { d += g.cwiseProduct(t.value(ia)).colwise().sum(); });
    });
}

Var relu(Var a)
{
    const std::size_t ia = a.id;
    return a.tape->record(a.value().cwiseMax(0.0), {ia}, [ia](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d.array() += (t.value(ia).array() > 0.0).select(g.array(), 0.0); });
    });
}

Var sigmoid(Var a)
{
    const std::size_t ia = a.id;
    // Split by sign so large magnitudes never overflow exp.
    Matrix s = a.value().unaryExpr([](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    });
    Matrix y = s;
    return a.tape->record(std::move(s), {ia}, [ia, y = std::move(y)](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d.array() += g.array() * y.array() * (1.0 - y.array()); });
    });
}

Var log(Var a, double floor)
{
    const std::size_t ia = a.id;
    return a.tape->record(a.value().cwiseMax(floor).array().log().matrix(), {ia}, [ia, floor](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) {
            const auto& x = t.value(ia).array();
            d.array() += (x > floor).select(g.array() / x, 0.0);
        });
    });
}

Var scale(Var a, double s)
{
    const std::size_t ia = a.id;
    return a.tape->record(a.value() * s, {ia}, [ia, s](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d += g * s; });
    });
}

Var add_const(Var a, double c)
{
    const std::size_t ia = a.id;
    return a.tape->record((a.value().array() + c).matrix(), {ia}, [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

Var pow(Var a, double p)
{
    const std::size_t ia = a.id;
    return a.tape->record(a.value().array().pow(p).matrix(), {ia}, [ia, p](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d.array() += g.array() * p * t.value(ia).array().pow(p - 1.0); });
    });
}

Var sum(Var a)
{
    const std::size_t ia = a.id;
    return a.tape->record(Matrix::Constant(1, 1, a.value().sum()), {ia}, [ia](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d.array() += g(0, 0); });
    });
}

Var mean(Var a)
{
    const std::size_t ia = a.id;
    const double n = static_cast<double>(a.value().size());
    return a.tape->record(Matrix::Constant(1, 1, a.value().sum() / n), {ia}, [ia, n](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d.array() += g(0, 0) / n; });
    });
}

Var row_sum(Var a)
{
    const std::size_t ia = a.id;
    return a.tape->record(a.value().rowwise().sum(), {ia}, [ia](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d.colwise() += g.col(0); });
    });
}

Var scale_rows(Var a, Var v)
{
    Tape& t = same_tape(a, v);
    require_shape(v.cols() == 1 && v.rows() == a.rows(), "scale_rows");
    const std::size_t ia = a.id, iv = v.id;
    Matrix out = v.value().col(0).asDiagonal() * a.value();
    return t.record(std::move(out), {ia, iv}, [ia, iv](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d.noalias() += t.value(iv).col(0).asDiagonal() * g; });
        t.accumulate_with(iv, [&](Matrix& d) { d += g.cwiseProduct(t.value(ia)).rowwise().sum(); });
    });
}

Var scale_cols(Var a, Var v)
{
    Tape& t = same_tape(a, v);
    require_shape(v.cols() == 1 && v.rows() == a.cols(), "scale_cols");
    const std::size_t ia = a.id, iv = v.id;
    Matrix out = a.value() * v.value().col(0).asDiagonal();
    return t.record(std::move(out), {ia, iv}, [ia, iv](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d.noalias() += g * t.value(iv).col(0).asDiagonal(); });
        t.accumulate_with(iv, [&](Matrix& d) { d += g.cwiseProduct(t.value(ia)).colwise().sum().transpose(); });
    });
}

Var mean_rows(Var a)
{
    const std::size_t ia = a.id;
    const double n = static_cast<double>(a.rows());
    return a.tape->record(a.value().colwise().mean(), {ia}, [ia, n](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d.rowwise() += g.row(0) / n; });
    });
}

Var max_rows(Var a)
{
    const std::size_t ia = a.id;
    const Matrix& x = a.value();
    Matrix out(1, x.cols());
    std::vector<Eigen::Index> arg(static_cast<std::size_t>(x.cols()), 0);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        Eigen::Index best = 0;
        for (Eigen::Index r = 1; r < x.rows(); ++r)
            if (x(r, c) > x(best, c)) best = r;
        arg[static_cast<std::size_t>(c)] = best;
        out(0, c) = x(best, c);
    }
    return a.tape->record(std::move(out), {ia}, [ia, arg = std::move(arg)](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) {
            for (std::size_t c = 0; c < arg.size(); ++c) d(arg[c], static_cast<Eigen::Index>(c)) += g(0, static_cast<Eigen::Index>(c));
        });
    });
}

Var concat_cols(Var a, Var b)
{
    Tape& t = same_tape(a, b);
    require_shape(a.rows() == b.rows(), "concat_cols");
    const std::size_t ia = a.id, ib = b.id;
    const Eigen::Index ca = a.cols(), cb = b.cols();
    Matrix out(a.rows(), ca + cb);
    out << a.value(), b.value();
    return t.record(std::move(out), {ia, ib}, [ia, ib, ca, cb](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d += g.leftCols(ca); });
        t.accumulate_with(ib, [&](Matrix& d) { d += g.rightCols(cb); });
    });
}

Var gather_rows(Var a, std::span<const std::size_t> rows)
{
    const std::size_t ia = a.id;
    const Matrix& x = a.value();
    std::vector<Eigen::Index> idx;
    for (std::size_t r : rows) {
        require_shape(static_cast<Eigen::Index>(r) < x.rows(), "gather_rows");
        idx.push_back(static_cast<Eigen::Index>(r));
    }
    Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(idx[k]);
    return a.tape->record(std::move(out), {ia}, [ia, idx = std::move(idx)](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) {
            for (std::size_t k = 0; k < idx.size(); ++k) d.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
        });
    });
}

Var submatrix(Var a, std::span<const std::size_t> sel)
{
    const std::size_t ia = a.id;
    const Matrix& x = a.value();
    std::vector<Eigen::Index> idx;
    for (std::size_t r : sel) {
        require_shape(static_cast<Eigen::Index>(r) < x.rows() && static_cast<Eigen::Index>(r) < x.cols(), "submatrix");
        idx.push_back(static_cast<Eigen::Index>(r));
    }
    const auto k = static_cast<Eigen::Index>(idx.size());
    Matrix out(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) out(r, c) = x(idx[r], idx[c]);
    return a.tape->record(std::move(out), {ia}, [ia, idx = std::move(idx)](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) {
            const auto k = static_cast<Eigen::Index>(idx.size());
            for (Eigen::Index r = 0; r < k; ++r)
                for (Eigen::Index c = 0; c < k; ++c) d(idx[r], idx[c]) += g(r, c);
        });
    });
}

Var scatter_symmetric(Var m, std::span<const std::pair<std::size_t, std::size_t>> edges, std::size_t n)
{
    require_shape(m.cols() == 1 && m.rows() == static_cast<Eigen::Index>(edges.size()), "scatter_symmetric");
    const std::size_t im = m.id;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> es;
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto i = static_cast<Eigen::Index>(edges[e].first), j = static_cast<Eigen::Index>(edges[e].second);
        require_shape(i < out.rows() && j < out.rows() && i != j, "scatter_symmetric");
        out(i, j) = out(j, i) = m.value()(static_cast<Eigen::Index>(e), 0);
        es.emplace_back(i, j);
    }
    return m.tape->record(std::move(out), {im}, [im, es = std::move(es)](Tape& t, const Matrix& g) {
        t.accumulate_with(im, [&](Matrix& d) {
            for (std::size_t e = 0; e < es.size(); ++e)
                d(static_cast<Eigen::Index>(e), 0) += g(es[e].first, es[e].second) + g(es[e].second, es[e].first);
        });
    });
}

Matrix softmax_rows(const Matrix& logits)
{
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(r).array() - m).exp();
        out.row(r) = e / e.sum();
    }
    return out;
}

Var log_softmax(Var a)
{
    const std::size_t ia = a.id;
    const Matrix& x = a.value();
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        const double lse = m + std::log((x.row(r).array() - m).exp().sum());
        out.row(r) = x.row(r).array() - lse;
    }
    Matrix probs = out.array().exp();
    return a.tape->record(std::move(out), {ia}, [ia, probs = std::move(probs)](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) {
            const Eigen::VectorXd gs = g.rowwise().sum();
            d += g - probs.cwiseProduct(gs.replicate(1, probs.cols()));
        });
    });
}

Var pick(Var a, Eigen::Index r, Eigen::Index c)
{
    require_shape(r >= 0 && c >= 0 && r < a.rows() && c < a.cols(), "pick");
    const std::size_t ia = a.id;
    return a.tape->record(Matrix::Constant(1, 1, a.value()(r, c)), {ia}, [ia, r, c](Tape& t, const Matrix& g) {
        t.accumulate_with(ia, [&](Matrix& d) { d(r, c) += g(0, 0); });
    });
}

}  // namespace como::nn
