#include "nn/optim.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>

#include <json.hpp>

namespace como::nn {

using json = nlohmann::json;

namespace {

constexpr const char* kFormat = "como-checkpoint";
constexpr int kVersion = 1;

}  // namespace

void Adam::step(std::span<Parameter* const> params)
{
    if (m_.empty()) {
        for (const Parameter* p : params) {
            m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        }
    }
    if (m_.size() != params.size()) throw Error(ErrorKind::internal, "optimizer parameter list changed");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
            throw Error(ErrorKind::internal, "gradient shape mismatch for " + p.name);
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
        p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
}

void Sgd::step(std::span<Parameter* const> params)
{
    for (Parameter* p : params) p->value -= lr_ * p->grad;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng)
{
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
    return m;
}

void save_checkpoint(std::ostream& out, std::span<const Parameter* const> params)
{
    json tensors = json::array();
    for (const Parameter* p : params) {
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(p->value.size()));
        for (Eigen::Index r = 0; r < p->value.rows(); ++r)
            for (Eigen::Index c = 0; c < p->value.cols(); ++c) data.push_back(p->value(r, c));
        tensors.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}, {"data", data}});
    }
    out << json{{"format", kFormat}, {"version", kVersion}, {"tensors", tensors}}.dump() << '\n';
    if (!out) throw IoError("failed to write checkpoint");
}

void load_checkpoint(std::istream& in, std::span<Parameter* const> params)
{
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    }
    if (doc.value("format", "") != kFormat || doc.value("version", 0) != kVersion)
        throw DataError("unsupported checkpoint format or version");
    std::map<std::string, const json*> by_name;
    for (const auto& t : doc.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
    for (Parameter* p : params) {
        const auto it = by_name.find(p->name);
        if (it == by_name.end()) throw DataError("checkpoint lacks tensor '" + p->name + "'");
        const json& t = *it->second;
        const auto rows = t.at("rows").get<Eigen::Index>(), cols = t.at("cols").get<Eigen::Index>();
        if (rows != p->value.rows() || cols != p->value.cols())
            throw DataError("checkpoint tensor '" + p->name + "' has the wrong shape");
        const auto& data = t.at("data");
        if (static_cast<Eigen::Index>(data.size()) != rows * cols)
            throw DataError("checkpoint tensor '" + p->name + "' has the wrong length");
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) p->value(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
        p->zero_grad();
    }
}

}  // namespace como::nn
