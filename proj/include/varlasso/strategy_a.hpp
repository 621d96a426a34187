#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include "errors.hpp"
#include "homotopy.hpp"
#include "lasso.hpp"
#include "tuned.hpp"

namespace varlasso {

// Strategy A: choose lambda so that lambda^2 = cvar * sigma_hat^2 * log p with
// sigma_hat^2 = ||y - X beta_lambda||^2 / n, equivalently Gamma_A(lambda) = cvar with
//   Gamma_A(lambda) = (n / log p) * lambda^2 / ||y - X beta_lambda||^2.

namespace detail {
inline double gamma_a_value(Index n, Index p, double lambda, double residual_sq)
{
    if (p < 2) throw InvalidArgument("gamma_a: need p >= 2 so that log p > 0");
    if (!(residual_sq > 0.0))
        throw ZeroResidualError("gamma_a: zero residual at lambda=" + std::to_string(lambda));
    return static_cast<double>(n) / std::log(static_cast<double>(p)) * lambda * lambda / residual_sq;
}
} // namespace detail

/// Closed form on the segment containing lambda.
inline double gamma_a(const LassoPath& path, double lambda)
{
    if (!(lambda > 0.0)) throw InvalidArgument("gamma_a: lambda must be positive");
    return detail::gamma_a_value(path.n, path.p, lambda, path.residual_sq(lambda));
}

/// Direct evaluation through coordinate descent.
inline double gamma_a(const Matrix& x, const Vector& y, double lambda, const SolverConfig& cfg = {})
{
    if (!(lambda > 0.0)) throw InvalidArgument("gamma_a: lambda must be positive");
    const LassoSolution s = solve_lasso(x, y, lambda, cfg);
    return detail::gamma_a_value(x.rows(), x.cols(), lambda, s.residual_sq());
}

struct FixedPointOptions
{
    double lambda0 = 0.0;  // <= 0: tau
    double eps = 0.0;      // <= 0: 1e-8 * tau
    std::size_t max_iter = 200;
    double kkt_tol = SolverConfig{}.kkt_tol;
};

/// Fixed-point iteration lambda <- sqrt(cvar log p / n) * ||y - X beta_lambda||_2,
/// stopped when successive iterates differ by less than eps. Backend is
/// PathBackend or SolverBackend.
template <class BackendT>
TunedEstimate tune_fixed_point(const BackendT& backend, Index n, Index p, double cvar, FixedPointOptions opt = {})
{
    if (!(cvar > 0.0)) throw InvalidArgument("tune_fixed_point: cvar must be positive");
    if (p < 2) throw InvalidArgument("tune_fixed_point: need p >= 2");
    const double tau = backend.tau();
    if (!(tau > 0.0)) throw InvalidArgument("tune_fixed_point: X^t y = 0");
    const double lambda0 = opt.lambda0 > 0.0 ? opt.lambda0 : tau;
    const double eps = opt.eps > 0.0 ? opt.eps : 1e-8 * tau;
    const double factor = std::sqrt(cvar * std::log(static_cast<double>(p)) / static_cast<double>(n));

    TunedEstimate est;
    est.method = TuneMethod::fixed_point;
    double lambda = lambda0;
    est.history.emplace_back(0, lambda);
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        if (lambda < backend.lambda_floor()) {
            est.note = "iterate left the computed path range";
            break;
        }
        const LambdaState st = backend.at(lambda);
        if (!(st.residual_sq > 0.0))
            throw ZeroResidualError("tune_fixed_point: zero residual at lambda=" + std::to_string(lambda));
        const double next = factor * std::sqrt(st.residual_sq);
        est.history.emplace_back(it, next);
        est.iterations = it;
        const double step = std::abs(next - lambda);
        lambda = next;
        if (step < eps) {
            est.converged = true;
            break;
        }
    }
    if (est.converged || lambda >= backend.lambda_floor()) {
        detail::fill_from_solution(est, backend.solution(lambda, opt.kkt_tol));
        est.sigma_hat = std::sqrt(est.residual_sq / static_cast<double>(n));
    } else {
        est.lambda_hat = lambda;
    }
    return est;
}

inline TunedEstimate tune_fixed_point(const LassoPath& path, const Matrix& x, const Vector& y, double cvar,
                                      FixedPointOptions opt = {})
{
    return tune_fixed_point(PathBackend(path, x, y), x.rows(), x.cols(), cvar, opt);
}

/// Exact root of Gamma_A(lambda) = cvar on a precomputed path. On a segment
/// Gamma_A = (n/log p) lambda^2 / (perp_sq + lambda^2 quad), so the root is
/// lambda^2 = cvar perp_sq / (n/log p - cvar quad). Gamma_A is increasing,
/// so the first segment (from the top) holding a root holds the only one.
inline TunedEstimate tune_path_exact_a(const LassoPath& path, const Matrix& x, const Vector& y, double cvar,
                                       double kkt_tol = SolverConfig{}.kkt_tol)
{
    if (!(cvar > 0.0)) throw InvalidArgument("tune_path_exact_a: cvar must be positive");
    if (path.p < 2) throw InvalidArgument("tune_path_exact_a: need p >= 2");
    const double ratio = static_cast<double>(path.n) / std::log(static_cast<double>(path.p));
    std::optional<double> root;
    std::size_t roots = 0;
    if (path.y_sq > 0.0) {
        const double top = std::sqrt(cvar * path.y_sq / ratio);
        if (top >= path.tau) {
            root = top;
            ++roots;
        }
    }
    for (const auto& seg : path.segments) {
        const double denom = ratio - cvar * seg.quad;
        if (!(denom > 0.0)) continue;
        const double lam = std::sqrt(cvar * seg.perp_sq / denom);
        const double slack = 1e-12 * seg.lambda_hi;
        if (lam <= seg.lambda_hi + slack && lam >= seg.lambda_lo - slack && lam > 0.0) {
            // A root shared by two adjacent segments at their breakpoint counts once.
            if (!root || std::abs(*root - lam) > 1e-9 * lam) ++roots;
            if (!root) root = std::clamp(lam, seg.lambda_lo, seg.lambda_hi);
        }
    }
    if (!root) {
        const double lo = gamma_a(path, path.lambda_min);
        throw OutOfRangeError("tune_path_exact_a: Gamma_A = " + std::to_string(cvar)
                                  + " has no root on the computed path",
                              lo, std::numeric_limits<double>::infinity());
    }
    TunedEstimate est;
    est.method = TuneMethod::path_exact;
    est.converged = true;
    est.roots_found = roots;
    est.history.emplace_back(0, *root);
    detail::fill_from_solution(est, eval_path(path, x, y, *root, kkt_tol));
    est.sigma_hat = std::sqrt(est.residual_sq / static_cast<double>(path.n));
    return est;
}

/// Fixed point first; a non-converged run falls back to the exact path root.
inline TunedEstimate tune_strategy_a(const LassoPath& path, const Matrix& x, const Vector& y, double cvar,
                                     TuneMethod method = TuneMethod::fixed_point, FixedPointOptions opt = {})
{
    if (method == TuneMethod::path_exact) return tune_path_exact_a(path, x, y, cvar, opt.kkt_tol);
    TunedEstimate est = tune_fixed_point(path, x, y, cvar, opt);
    if (est.converged) return est;
    TunedEstimate exact = tune_path_exact_a(path, x, y, cvar, opt.kkt_tol);
    exact.iterations = est.iterations;
    exact.note = "fixed point did not converge; fell back to path_exact";
    return exact;
}

/// Theoretical range of cvar for exact recovery:
///   [(1-r)^2 / (20(1+r) C_spar), (1-r)^2 / (2(1+r) C_spar)] * (n/p) ||X||^2,
/// with C_spar = r^2 / ((1+alpha) e^2).
inline std::pair<double, double> cvar_admissible_interval(double opnorm_sq, Index n, Index p, double alpha, double r)
{
    if (!(r > 0.0 && r <= 0.5)) throw InvalidArgument("cvar_admissible_interval: need r in (0, 1/2]");
    if (!(alpha > 0.0)) throw InvalidArgument("cvar_admissible_interval: need alpha > 0");
    const double e2 = std::exp(2.0);
    const double c_spar = r * r / ((1.0 + alpha) * e2);
    const double scale = static_cast<double>(n) / static_cast<double>(p) * opnorm_sq;
    const double base = (1.0 - r) * (1.0 - r) / ((1.0 + r) * c_spar);
    return {base / 20.0 * scale, base / 2.0 * scale};
}

inline std::pair<double, double> cvar_admissible_interval(const DesignMatrix& x, double alpha, double r)
{
    const double nrm = x.operator_norm();
    return cvar_admissible_interval(nrm * nrm, x.rows(), x.cols(), alpha, r);
}

} // namespace varlasso
