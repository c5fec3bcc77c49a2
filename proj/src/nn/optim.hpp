#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "nn/autograd.hpp"

namespace como::nn {

class Optimizer {
public:
    virtual ~Optimizer() = default;
    /// Applies one update from the accumulated gradients. The parameter
    /// list must be the same, in the same order, on every call.
    virtual void step(std::span<Parameter* const> params) = 0;
};

class Adam : public Optimizer {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps)
    {
    }
    void step(std::span<Parameter* const> params) override;
    long steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Matrix> m_, v_;
};

class Sgd : public Optimizer {
public:
    explicit Sgd(double lr) : lr_(lr) {}
    void step(std::span<Parameter* const> params) override;

private:
    double lr_;
};

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);
/// Standard normal by Box-Muller; platform independent unlike <random>.
double standard_normal(std::mt19937_64& rng);
/// Glorot/Xavier uniform initialization.
Matrix glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// Named-tensor checkpoint as JSON; values round-trip exactly.
void save_checkpoint(std::ostream& out, std::span<const Parameter* const> params);
/// Fills parameters by name; shapes must match and every name must exist.
void load_checkpoint(std::istream& in, std::span<Parameter* const> params);

}  // namespace como::nn
