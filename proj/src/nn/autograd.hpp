#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "common/error.hpp"

namespace como::nn {

using Matrix = Eigen::MatrixXd;

/// Trainable tensor. Gradients from every tape that reads it accumulate in
/// `grad` until `zero_grad`.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node recorded on a tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    double scalar() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode recorder. Nodes are stored in creation order, which is a
/// topological order, and `backward` walks them in reverse.
class Tape {
public:
    Var constant(Matrix value);
    /// Reads a parameter; its gradient lands in `p.grad` on backward.
    Var leaf(Parameter& p);

    /// Seeds d(loss)/d(loss) = 1 and accumulates into every leaf.
    /// Throws when `loss` is not 1x1 or does not depend on a parameter.
    void backward(Var loss);

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    // Used by the op implementations.
    using BackwardFn = std::function<void(Tape&, const Matrix& grad)>;
    Var record(Matrix value, std::vector<std::size_t> parents, BackwardFn fn);
    void accumulate(std::size_t id, const Matrix& g);
    template <typename Fn>
    void accumulate_with(std::size_t id, Fn&& fn)
    {
        Node& n = nodes_[id];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
        fn(n.grad);
    }
    bool needs(std::size_t id) const { return nodes_[id].requires_grad; }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Parameter* param = nullptr;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Adds a 1 x d row to every row of a.
Var add_row(Var a, Var row);
/// Elementwise product.
Var mul(Var a, Var b);
/// Multiplies every row of a elementwise by a 1 x d row.
Var mul_row(Var a, Var row);
Var relu(Var a);
Var sigmoid(Var a);
/// Natural log with the input clamped below at `floor`.
Var log(Var a, double floor = 1e-12);
Var scale(Var a, double s);
Var add_const(Var a, double c);
/// Elementwise power; inputs must be positive for non-integer exponents.
Var pow(Var a, double p);
/// 1 x 1 sum / mean of all entries.
Var sum(Var a);
Var mean(Var a);
/// n x 1 row sums.
Var row_sum(Var a);
/// out(i, j) = v(i) * a(i, j) for an n x 1 vector v.
Var scale_rows(Var a, Var v);
/// out(i, j) = a(i, j) * v(j) for an m x 1 vector v.
Var scale_cols(Var a, Var v);
/// 1 x d column means.
Var mean_rows(Var a);
/// 1 x d column maxima; ties resolve to the lowest row.
Var max_rows(Var a);
Var concat_cols(Var a, Var b);
Var gather_rows(Var a, std::span<const std::size_t> rows);
/// a restricted to the given rows and columns (same index set).
Var submatrix(Var a, std::span<const std::size_t> idx);
/// n x n symmetric matrix with m(e) at (i_e, j_e) and (j_e, i_e).
Var scatter_symmetric(Var m, std::span<const std::pair<std::size_t, std::size_t>> edges, std::size_t n);
/// Row-wise log-softmax.
Var log_softmax(Var a);
/// 1 x 1 entry (r, c).
Var pick(Var a, Eigen::Index r, Eigen::Index c);

Matrix softmax_rows(const Matrix& logits);

}  // namespace como::nn
