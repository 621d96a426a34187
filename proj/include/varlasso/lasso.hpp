#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <Eigen/Dense>
#include "errors.hpp"
#include "log.hpp"
#include "model.hpp"
#include "types.hpp"

namespace varlasso {

struct SolverConfig
{
    double tol = 1e-9;       // max coefficient change per sweep
    double kkt_tol = 1e-7;
    double bp_tol = 1e-10;   // relative gap below which two path events count as a tie
    long max_sweeps = 100000;
};

/// Subgradient optimality check for min 1/2||y - Xb||^2 + lambda ||b||_1.
struct OptimalityCertificate
{
    double lambda = 0.0;
    double max_active_violation = 0.0;     // max_{j active} |X_j^t r - lambda sign(b_j)|
    double max_inactive_correlation = 0.0; // max_{j inactive} |X_j^t r|
    double tol = 0.0;
    bool strict = false;                   // inactive correlations < lambda - tol

    bool valid() const
    {
        return max_active_violation <= tol && max_inactive_correlation <= lambda + tol;
    }
};

inline OptimalityCertificate check_optimality(const Matrix& x, const Vector& y, double lambda,
                                              const Vector& beta, double tol)
{
    if (!(lambda > 0.0)) throw InvalidArgument("check_optimality: lambda must be positive");
    if (x.rows() != y.size() || x.cols() != beta.size())
        throw InvalidArgument("check_optimality: dimension mismatch");
    const Vector corr = x.transpose() * (y - x * beta);
    OptimalityCertificate c;
    c.lambda = lambda;
    c.tol = tol;
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta(j) != 0.0)
            c.max_active_violation = std::max(c.max_active_violation, std::abs(corr(j) - lambda * sign_of(beta(j))));
        else
            c.max_inactive_correlation = std::max(c.max_inactive_correlation, std::abs(corr(j)));
    }
    c.strict = c.max_inactive_correlation < lambda - tol;
    return c;
}

inline OptimalityCertificate check_optimality(const DesignMatrix& x, const Vector& y, double lambda,
                                              const Vector& beta, double tol)
{
    return check_optimality(x.entries(), y, lambda, beta, tol);
}

struct LassoSolution
{
    Vector beta;            // dense, length p; zero off active_set
    double lambda = 0.0;
    IndexList active_set;   // increasing
    SignVector signs;       // sign of beta on active_set, same order
    Vector residual;
    double objective = 0.0;
    OptimalityCertificate kkt;
    long sweeps = 0;

    double l1_norm() const { return beta.lpNorm<1>(); }
    double residual_sq() const { return residual.squaredNorm(); }
};

/// Assembles a LassoSolution (active set, residual, objective, certificate) from a coefficient vector.
inline LassoSolution make_solution(const Matrix& x, const Vector& y, double lambda, Vector beta, double kkt_tol)
{
    LassoSolution s;
    s.lambda = lambda;
    for (Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) s.active_set.push_back(j);
    s.signs.resize(static_cast<Index>(s.active_set.size()));
    for (std::size_t k = 0; k < s.active_set.size(); ++k)
        s.signs(static_cast<Index>(k)) = sign_of(beta(s.active_set[k]));
    s.residual = y - x * beta;
    s.objective = 0.5 * s.residual.squaredNorm() + lambda * beta.lpNorm<1>();
    s.kkt = check_optimality(x, y, lambda, beta, kkt_tol);
    s.beta = std::move(beta);
    return s;
}

/// Raised when coordinate descent exhausts its sweep budget; carries the last iterate.
class LassoDidNotConverge : public NumericalError
{
public:
    explicit LassoDidNotConverge(LassoSolution best)
        : NumericalError("solve_lasso: max sweeps exceeded (kkt active violation "
                         + std::to_string(best.kkt.max_active_violation) + ", inactive correlation "
                         + std::to_string(best.kkt.max_inactive_correlation) + ", lambda "
                         + std::to_string(best.lambda) + ")"),
          best_(std::move(best))
    {}
    const LassoSolution& best() const { return best_; }

private:
    LassoSolution best_;
};

inline double soft_threshold(double v, double t)
{
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

/// ||X^t y||_inf, the smallest lambda whose lasso solution is zero.
inline double tau_threshold(const Matrix& x, const Vector& y)
{
    if (x.rows() != y.size()) throw InvalidArgument("tau_threshold: dimension mismatch");
    const double tau = (x.transpose() * y).lpNorm<Eigen::Infinity>();
    if (tau == 0.0) warn("tau_threshold: X^t y = 0, every lambda > 0 gives the zero solution");
    return tau;
}

inline double tau_threshold(const DesignMatrix& x, const Vector& y) { return tau_threshold(x.entries(), y); }

/// Cyclic coordinate descent for unit-norm columns. Alternates full sweeps
/// with sweeps restricted to the current nonzeros; terminates when a full
/// sweep moves no coefficient by more than cfg.tol and the certificate
/// passes at cfg.kkt_tol. Warm start through `start` (may be empty).
inline LassoSolution solve_lasso(const Matrix& x, const Vector& y, double lambda,
                                 const SolverConfig& cfg = {}, const Vector& start = Vector())
{
    if (!(lambda > 0.0)) throw InvalidArgument("solve_lasso: lambda must be positive (lambda = 0 is unsupported)");
    if (x.rows() != y.size()) throw InvalidArgument("solve_lasso: dimension mismatch");
    const Index p = x.cols();
    Vector beta = start.size() == p ? start : Vector::Zero(p);
    Vector r = y - x * beta;
    const Vector col_sq = x.colwise().squaredNorm().transpose();

    auto sweep = [&](bool active_only) {
        double max_change = 0.0;
        for (Index j = 0; j < p; ++j) {
            if (active_only && beta(j) == 0.0) continue;
            if (col_sq(j) == 0.0) continue;
            const double old = beta(j);
            const double rho = x.col(j).dot(r) + col_sq(j) * old;
            const double upd = soft_threshold(rho, lambda) / col_sq(j);
            if (upd != old) {
                r.noalias() -= (upd - old) * x.col(j);
                beta(j) = upd;
                max_change = std::max(max_change, std::abs(upd - old));
            }
        }
        return max_change;
    };

    long sweeps = 0;
    while (sweeps < cfg.max_sweeps) {
        ++sweeps;
        const double change = sweep(false);
        if (change < cfg.tol) {
            // r drifts through incremental updates; refresh before certifying.
            r = y - x * beta;
            LassoSolution s = make_solution(x, y, lambda, beta, cfg.kkt_tol);
            if (s.kkt.valid()) {
                s.sweeps = sweeps;
                return s;
            }
        }
        while (sweeps < cfg.max_sweeps) {
            ++sweeps;
            if (sweep(true) < cfg.tol) break;
        }
    }
    LassoSolution best = make_solution(x, y, lambda, beta, cfg.kkt_tol);
    best.sweeps = sweeps;
    throw LassoDidNotConverge(std::move(best));
}

inline LassoSolution solve_lasso(const DesignMatrix& x, const Vector& y, double lambda,
                                 const SolverConfig& cfg = {}, const Vector& start = Vector())
{
    return solve_lasso(x.entries(), y, lambda, cfg, start);
}

struct GenericConditionCheck
{
    bool holds = false;
    double max_correlation = 0.0; // max_{j not in I} |<X_j, X_I (X_I^t X_I)^{-1} delta_I>|
    Index argmax = -1;
};

/// On-path spot check of the Generic Condition for one (I, delta) pair.
inline GenericConditionCheck check_generic_condition_local(const Matrix& x, const IndexList& active,
                                                           const SignVector& signs, double margin = 1e-10)
{
    if (static_cast<Index>(active.size()) != signs.size())
        throw InvalidArgument("check_generic_condition_local: active set and signs differ in length");
    GenericConditionCheck out;
    if (active.empty()) {
        out.holds = true;
        return out;
    }
    const Matrix xi = gather_columns(x, active);
    const Matrix gram = xi.transpose() * xi;
    Eigen::LDLT<Matrix> ldlt(gram);
    const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    const double dmin = ldlt.vectorD().cwiseAbs().minCoeff();
    if (ldlt.info() != Eigen::Success || !(dmin > 1e-13 * dmax))
        throw SingularMatrixError("check_generic_condition_local: X_I is singular");
    const Vector dir = xi * ldlt.solve(signs);
    std::vector<bool> in(static_cast<std::size_t>(x.cols()), false);
    for (Index j : active) in[static_cast<std::size_t>(j)] = true;
    for (Index j = 0; j < x.cols(); ++j) {
        if (in[static_cast<std::size_t>(j)]) continue;
        const double v = std::abs(x.col(j).dot(dir));
        if (v > out.max_correlation) {
            out.max_correlation = v;
            out.argmax = j;
        }
    }
    out.holds = out.max_correlation < 1.0 - margin;
    return out;
}

} // namespace varlasso
