#pragma once
#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <Eigen/Dense>
#include "errors.hpp"
#include "log.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace varlasso {

/// Largest |<X_i, X_j>| over i != j. Exact; O(p^2 n) through the Gram matrix.
inline double coherence(const Matrix& x)
{
    if (x.cols() < 2) return 0.0;
    const Matrix gram = x.transpose() * x;
    double mu = 0.0;
    for (Index j = 0; j < gram.cols(); ++j)
        for (Index i = j + 1; i < gram.rows(); ++i) mu = std::max(mu, std::abs(gram(i, j)));
    return mu;
}

/// Largest singular value of x by power iteration on the smaller of
/// x^t x and x x^t, started from the all-ones vector. Stops once the
/// eigen-residual ||G v - theta v|| falls below tol * theta.
inline double operator_norm(const Matrix& x, double tol = 1e-10, int max_iter = 100000)
{
    if (!(tol > 0.0)) throw InvalidArgument("operator_norm: tol must be positive");
    if (x.size() == 0) return 0.0;
    const Matrix g = x.rows() <= x.cols() ? Matrix(x * x.transpose()) : Matrix(x.transpose() * x);
    Vector v = Vector::Ones(g.rows()).normalized();
    double theta = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector gv = g * v;
        theta = v.dot(gv);
        const double nrm = gv.norm();
        if (nrm == 0.0) return 0.0;
        if ((gv - theta * v).norm() <= tol * std::abs(theta)) return std::sqrt(std::max(theta, 0.0));
        v = gv / nrm;
    }
    throw NumericalError("operator_norm: power iteration did not converge after "
                         + std::to_string(max_iter) + " iterations (last estimate "
                         + std::to_string(std::sqrt(std::max(theta, 0.0))) + ")");
}

/// n x p design with unit l2-norm columns. Immutable; copies share a
/// thread-safe cache of the coherence and the operator norm.
class DesignMatrix
{
public:
    static constexpr double column_norm_tol = 1e-10;

    explicit DesignMatrix(Matrix entries, std::size_t regenerated_columns = 0)
        : x_(std::move(entries)), regenerated_(regenerated_columns), cache_(std::make_shared<Cache>())
    {
        if (x_.rows() < 1 || x_.cols() < 2)
            throw InvalidArgument("DesignMatrix: need n >= 1 and p >= 2, got "
                                  + std::to_string(x_.rows()) + "x" + std::to_string(x_.cols()));
        for (Index j = 0; j < x_.cols(); ++j) {
            const double nrm = x_.col(j).norm();
            if (!(std::abs(nrm - 1.0) < column_norm_tol))
                throw InvalidArgument("DesignMatrix: column " + std::to_string(j)
                                      + " has l2 norm " + std::to_string(nrm) + ", expected 1");
        }
    }

    /// Divides every column by its l2 norm; zero columns are rejected.
    static DesignMatrix normalized(Matrix raw)
    {
        for (Index j = 0; j < raw.cols(); ++j) {
            const double nrm = raw.col(j).norm();
            if (nrm == 0.0) throw InvalidArgument("DesignMatrix: column " + std::to_string(j) + " is zero");
            raw.col(j) /= nrm;
        }
        return DesignMatrix(std::move(raw));
    }

    Index rows() const { return x_.rows(); }
    Index cols() const { return x_.cols(); }
    const Matrix& entries() const { return x_; }
    auto column(Index j) const { return x_.col(j); }
    std::size_t regenerated_columns() const { return regenerated_; }

    double coherence() const
    {
        std::lock_guard lock(cache_->mutex);
        if (!cache_->coherence) cache_->coherence = varlasso::coherence(x_);
        return *cache_->coherence;
    }

    double operator_norm(double tol = 1e-10) const
    {
        std::lock_guard lock(cache_->mutex);
        if (!cache_->opnorm || cache_->opnorm_tol > tol) {
            cache_->opnorm = varlasso::operator_norm(x_, tol);
            cache_->opnorm_tol = tol;
        }
        return *cache_->opnorm;
    }

    std::optional<double> cached_coherence() const
    {
        std::lock_guard lock(cache_->mutex);
        return cache_->coherence;
    }
    std::optional<double> cached_operator_norm() const
    {
        std::lock_guard lock(cache_->mutex);
        return cache_->opnorm;
    }

private:
    struct Cache
    {
        std::mutex mutex;
        std::optional<double> coherence;
        std::optional<double> opnorm;
        double opnorm_tol = 0.0;
    };

    Matrix x_;
    std::size_t regenerated_ = 0;
    std::shared_ptr<Cache> cache_;
};

/// i.i.d. N(0,1) entries, columns scaled to unit norm. A column that comes
/// out exactly zero is redrawn and counted.
inline DesignMatrix gen_gaussian_design(Index n, Index p, Seed seed)
{
    if (n < 1 || p < 2) throw InvalidArgument("gen_gaussian_design: need n >= 1 and p >= 2");
    Rng rng(seed);
    Matrix x(n, p);
    std::size_t regenerated = 0;
    for (Index j = 0; j < p; ++j) {
        for (;;) {
            for (Index i = 0; i < n; ++i) x(i, j) = rng.normal();
            const double nrm = x.col(j).norm();
            if (nrm > 0.0) {
                x.col(j) /= nrm;
                break;
            }
            ++regenerated;
            warn("gen_gaussian_design: zero-norm column " + std::to_string(j) + " regenerated");
        }
    }
    return DesignMatrix(std::move(x), regenerated);
}

/// True sparse signal. support is sorted; signs[k] is the sign of beta(support[k]).
struct GroundTruth
{
    IndexList support;
    SignVector signs;
    Vector beta;
    double sigma = 1.0;
    double level = 0.0;
    Seed seed = 0;
    std::size_t resampled = 0;

    Index sparsity() const { return static_cast<Index>(support.size()); }

    double min_abs_coefficient() const
    {
        double m = std::numeric_limits<double>::infinity();
        for (Index j : support) m = std::min(m, std::abs(beta(j)));
        return m;
    }

    void validate() const
    {
        if (!(sigma > 0.0)) throw InvalidArgument("GroundTruth: sigma must be positive");
        if (static_cast<Index>(support.size()) > beta.size())
            throw InvalidArgument("GroundTruth: support larger than p");
        if (signs.size() != static_cast<Index>(support.size()))
            throw InvalidArgument("GroundTruth: signs and support sizes differ");
        std::vector<bool> on(static_cast<std::size_t>(beta.size()), false);
        for (std::size_t k = 0; k < support.size(); ++k) {
            const Index j = support[k];
            if (j < 0 || j >= beta.size()) throw InvalidArgument("GroundTruth: support index out of range");
            if (beta(j) == 0.0 || sign_of(beta(j)) != signs(static_cast<Index>(k)))
                throw InvalidArgument("GroundTruth: sign pattern disagrees with beta at " + std::to_string(j));
            on[static_cast<std::size_t>(j)] = true;
        }
        for (Index j = 0; j < beta.size(); ++j)
            if (!on[static_cast<std::size_t>(j)] && beta(j) != 0.0)
                throw InvalidArgument("GroundTruth: beta nonzero off the support at " + std::to_string(j));
    }
};

/// Support uniform over s-subsets of {0..p-1}; each coefficient is
/// level * (+-1) + N(0,1). Recorded signs are those of the realized values.
inline GroundTruth gen_ground_truth(Index p, Index s, double level, double sigma, Seed seed)
{
    if (s < 0 || s > p) throw InvalidArgument("gen_ground_truth: need 0 <= s <= p");
    if (!(sigma > 0.0)) throw InvalidArgument("gen_ground_truth: sigma must be positive");
    Rng rng(seed);
    std::vector<Index> perm(static_cast<std::size_t>(p));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index k = 0; k < s; ++k) {
        const auto r = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - k)));
        std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(k + r)]);
    }
    GroundTruth t;
    t.support.assign(perm.begin(), perm.begin() + s);
    std::sort(t.support.begin(), t.support.end());
    t.beta = Vector::Zero(p);
    t.signs.resize(s);
    t.sigma = sigma;
    t.level = level;
    t.seed = seed;
    for (Index k = 0; k < s; ++k) {
        double v = 0.0;
        for (;;) {
            v = level * rng.rademacher() + rng.normal();
            if (v != 0.0) break;
            ++t.resampled;
            warn("gen_ground_truth: exactly-zero coefficient resampled");
        }
        t.beta(t.support[static_cast<std::size_t>(k)]) = v;
        t.signs(k) = sign_of(v);
    }
    return t;
}

/// y = X beta + noise, noise = sigma * w with w retained for oracles.
struct Observation
{
    Vector y;
    Vector noise;
    Seed seed = 0;
};

inline Observation observe(const DesignMatrix& x, const GroundTruth& truth, Seed seed)
{
    if (truth.beta.size() != x.cols()) throw InvalidArgument("observe: beta length differs from p");
    Rng rng(seed);
    Observation o;
    o.seed = seed;
    o.noise.resize(x.rows());
    for (Index i = 0; i < x.rows(); ++i) o.noise(i) = truth.sigma * rng.normal();
    o.y = x.entries() * truth.beta + o.noise;
    return o;
}

} // namespace varlasso
