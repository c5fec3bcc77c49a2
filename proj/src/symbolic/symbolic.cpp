#include "symbolic/symbolic.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "common/error.hpp"
#include "nn/optim.hpp"

namespace como::symbolic {

Embedding PcaReducer::fit(const MatrixXd& x) const
{
    if (x.rows() < 2) throw DataError("dimension reduction needs at least two samples");
    if (x.cols() < 2) throw DataError("dimension reduction needs at least two features");
    if (!x.allFinite()) throw DataError("dimension reduction input has non-finite values");
    Embedding e;
    e.mean = x.colwise().mean().transpose();
    const MatrixXd centered = x.rowwise() - e.mean.transpose();
    const MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
    const auto d = x.cols();
    // Eigenvalues come in ascending order.
    const VectorXd values = eig.eigenvalues().cwiseMax(0.0);
    const double total = values.sum();
    const double tol = 1e-12 * std::max(1.0, values(d - 1));
    e.components = MatrixXd::Zero(d, 2);
    for (int axis = 0; axis < 2; ++axis) {
        const double lambda = values(d - 1 - axis);
        if (lambda <= tol) {
            e.rank_deficient = true;
            continue;
        }
        VectorXd v = eig.eigenvectors().col(d - 1 - axis);
        Eigen::Index big = 0;
        for (Eigen::Index i = 1; i < d; ++i)
            if (std::abs(v(i)) > std::abs(v(big)) + 1e-12) big = i;
        if (v(big) < 0) v = -v;
        e.components.col(axis) = v;
        e.explained[axis] = total > 0 ? lambda / total : 0.0;
    }
    e.points = centered * e.components;
    return e;
}

Embedding reduce_2d(const MatrixXd& x) { return PcaReducer{}.fit(x); }

namespace {

struct Run {
    std::vector<int> labels;
    MatrixXd centroids;
    double inertia = 0.0;
};

Run lloyd(const MatrixXd& x, std::size_t k, std::mt19937_64& rng)
{
    const auto n = static_cast<std::size_t>(x.rows());
    MatrixXd c(static_cast<Eigen::Index>(k), x.cols());
    // k-means++
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::size_t first = std::min(n - 1, static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(n)));
    c.row(0) = x.row(static_cast<Eigen::Index>(first));
    for (std::size_t j = 1; j < k; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) - c.row(static_cast<Eigen::Index>(j - 1))).squaredNorm());
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = nn::uniform01(rng) * total;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                r -= d2[i];
                if (r < 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = std::min(n - 1, static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(n)));
        }
        c.row(static_cast<Eigen::Index>(j)) = x.row(static_cast<Eigen::Index>(pick));
    }

    Run run;
    run.labels.assign(n, -1);
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        std::vector<double> dist(n);
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                const double dd = (x.row(static_cast<Eigen::Index>(i)) - c.row(static_cast<Eigen::Index>(j))).squaredNorm();
                if (dd < bd) {
                    bd = dd;
                    best = static_cast<int>(j);
                }
            }
            dist[i] = bd;
            if (run.labels[i] != best) {
                run.labels[i] = best;
                changed = true;
            }
        }
        MatrixXd sums = MatrixXd::Zero(c.rows(), c.cols());
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(run.labels[i]) += x.row(static_cast<Eigen::Index>(i));
            ++count[static_cast<std::size_t>(run.labels[i])];
        }
        bool reseeded = false;
        for (std::size_t j = 0; j < k; ++j) {
            if (count[j] > 0) {
                c.row(static_cast<Eigen::Index>(j)) = sums.row(static_cast<Eigen::Index>(j)) / static_cast<double>(count[j]);
                continue;
            }
            // Empty cluster: move it onto the point farthest from its centre.
            const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
            c.row(static_cast<Eigen::Index>(j)) = x.row(static_cast<Eigen::Index>(far));
            dist[far] = 0.0;
            reseeded = true;
        }
        if (!changed && !reseeded) break;
    }
    run.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        run.inertia += (x.row(static_cast<Eigen::Index>(i)) - c.row(run.labels[i])).squaredNorm();
    run.centroids = std::move(c);
    return run;
}

}  // namespace

Clustering cluster_types(const MatrixXd& points, std::size_t k, std::uint64_t seed, std::size_t restarts)
{
    if (k == 0) throw ConfigError("cluster count must be positive");
    if (restarts == 0) throw ConfigError("clustering needs at least one restart");
    if (static_cast<std::size_t>(points.rows()) < k)
        throw DataError("clustering into " + std::to_string(k) + " types needs at least " + std::to_string(k) +
                        " samples, got " + std::to_string(points.rows()));
    if (!points.allFinite()) throw DataError("clustering input has non-finite values");
    std::mt19937_64 rng(seed);
    Run best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        Run run = lloyd(points, k, rng);
        if (run.inertia < best.inertia) best = std::move(run);
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (Eigen::Index d = 0; d < best.centroids.cols(); ++d) {
            const double ca = best.centroids(static_cast<Eigen::Index>(a), d);
            const double cb = best.centroids(static_cast<Eigen::Index>(b), d);
            if (ca != cb) return ca < cb;
        }
        return a < b;
    });
    std::vector<int> type_of(k);
    Clustering out;
    out.centroids.resize(static_cast<Eigen::Index>(k), points.cols());
    for (std::size_t t = 0; t < k; ++t) {
        type_of[order[t]] = static_cast<int>(t) + 1;
        out.centroids.row(static_cast<Eigen::Index>(t)) = best.centroids.row(static_cast<Eigen::Index>(order[t]));
    }
    for (int l : best.labels) out.types.push_back(type_of[static_cast<std::size_t>(l)]);
    out.inertia = best.inertia;
    return out;
}

std::string ConfigurationType::kind() const
{
    return dominant() ? "T" + std::to_string(dominant_type) + "-Dom" : "Diverse";
}

ConfigurationType classify_configuration(std::span<const int> core_types, geo::UrbanFunction function,
                                         const DominanceThresholds& thresholds)
{
    if (core_types.empty()) throw DataError("a block needs at least one core building to classify");
    std::map<int, std::size_t> freq;
    for (int t : core_types) {
        if (t < 1) throw DataError("core building type ids start at 1");
        ++freq[t];
    }
    int top = 0;
    std::size_t top_count = 0;
    for (const auto& [t, c] : freq)
        if (c > top_count) {
            top = t;
            top_count = c;
        }
    ConfigurationType out;
    out.core_count = core_types.size();
    out.share = static_cast<double>(top_count) / static_cast<double>(core_types.size());
    if (out.share >= thresholds.for_function(function) && top_count >= thresholds.min_count) out.dominant_type = top;
    return out;
}

RegionalResult regional_representative(const std::vector<geo::Neighborhood>& neighborhoods,
                                       const std::vector<BlockConfiguration>& blocks)
{
    RegionalResult out;
    std::vector<std::vector<const ConfigurationType*>> members(neighborhoods.size());
    for (const auto& b : blocks) {
        const geo::Point c = geo::centroid(b.boundary);
        bool placed = false;
        for (std::size_t n = 0; n < neighborhoods.size() && !placed; ++n)
            if (geo::point_in_polygon(c, neighborhoods[n].boundary)) {
                members[n].push_back(&b.config);
                placed = true;
            }
        if (!placed) out.unassigned_blocks.push_back(b.config.block_id);
    }
    for (std::size_t n = 0; n < neighborhoods.size(); ++n) {
        if (members[n].empty()) {
            out.empty_neighborhoods.push_back(neighborhoods[n].id);
            continue;
        }
        // Diverse is keyed as type 0 and sorts after every dominant type.
        std::map<int, std::size_t> freq;
        NeighborhoodSummary s;
        s.neighborhood_id = neighborhoods[n].id;
        s.name = neighborhoods[n].name;
        s.blocks = members[n].size();
        for (const auto* cfg : members[n]) {
            ++freq[cfg->dominant_type];
            ++s.histogram[cfg->kind()];
        }
        int rep = -1;
        std::size_t rep_count = 0;
        for (const auto& [t, c] : freq) {
            const bool better = c > rep_count || (c == rep_count && rep == 0 && t > 0);
            if (better) {
                rep = t;
                rep_count = c;
            }
        }
        ConfigurationType r;
        r.dominant_type = rep;
        s.representative = r.kind();
        out.neighborhoods.push_back(std::move(s));
    }
    return out;
}

}  // namespace como::symbolic
