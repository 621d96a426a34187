#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>
#include "errors.hpp"
#include "homotopy.hpp"
#include "lasso.hpp"
#include "tuned.hpp"

namespace varlasso {

// Strategy B: choose lambda so that lambda ||beta_lambda||_1 = C ||y - X beta_lambda||^2,
// i.e. Gamma_B(lambda) = C with Gamma_B(lambda) = lambda ||beta_lambda||_1 / ||y - X beta_lambda||^2.

namespace detail {

inline double gamma_b_value(const LambdaState& st)
{
    if (st.empty) return 0.0;
    if (!(st.residual_sq > 0.0))
        throw ZeroResidualError("gamma_b: zero residual at lambda=" + std::to_string(st.lambda));
    return st.lambda * st.l1 / st.residual_sq;
}

// On a segment Phi = lambda * l1 has Phi' = l1 - lambda * quad and
// (||r||^2)' = 2 lambda quad.
inline double gamma_b_slope(const LambdaState& st)
{
    if (st.empty) return 0.0;
    const double r2 = st.residual_sq;
    if (!(r2 > 0.0)) throw ZeroResidualError("gamma_b_derivative: zero residual at lambda=" + std::to_string(st.lambda));
    const double lam = st.lambda;
    return ((st.l1 - lam * st.quad) * r2 - 2.0 * lam * lam * st.quad * st.l1) / (r2 * r2);
}

inline bool at_breakpoint(const LassoPath& path, double lambda)
{
    auto near = [&](double b) { return std::abs(lambda - b) <= 1e-12 * b; };
    if (near(path.tau)) return true;
    for (std::size_t k = 0; k < path.segments.size(); ++k) {
        const bool path_end = k + 1 == path.segments.size() && path.stop == PathStop::reached_lambda_min;
        if (!path_end && near(path.segments[k].lambda_lo)) return true;
    }
    return false;
}

} // namespace detail

inline double gamma_b(const LassoPath& path, double lambda)
{
    if (!(lambda > 0.0)) throw InvalidArgument("gamma_b: lambda must be positive");
    return detail::gamma_b_value(path_state(path, lambda));
}

inline double gamma_b(const Matrix& x, const Vector& y, double lambda, const SolverConfig& cfg = {})
{
    if (!(lambda > 0.0)) throw InvalidArgument("gamma_b: lambda must be positive");
    const LassoSolution s = solve_lasso(x, y, lambda, cfg);
    if (s.active_set.empty()) return 0.0;
    if (!(s.residual_sq() > 0.0)) throw ZeroResidualError("gamma_b: zero residual");
    return lambda * s.l1_norm() / s.residual_sq();
}

/// dGamma_B/dlambda in the interior of a path segment; zero above tau.
inline double gamma_b_derivative(const LassoPath& path, double lambda)
{
    if (!(lambda > 0.0)) throw InvalidArgument("gamma_b_derivative: lambda must be positive");
    if (detail::at_breakpoint(path, lambda))
        throw InvalidArgument("gamma_b_derivative: lambda=" + std::to_string(lambda)
                              + " is a breakpoint where Gamma_B is not differentiable");
    return detail::gamma_b_slope(path_state(path, lambda));
}

/// The closed form (-||beta||_1 - lambda quad) / ||r||^2. It coincides with
/// gamma_b_derivative only where P_{V_A^perp} y = 0, i.e. |active| = n.
inline double gamma_b_derivative_paper_form(const LassoPath& path, double lambda)
{
    const LambdaState st = path_state(path, lambda);
    if (st.empty) return 0.0;
    return (-st.l1 - lambda * st.quad) / st.residual_sq;
}

inline double sigma_hat_b(double residual_sq, double lambda, double l1, Index n)
{
    return std::sqrt((residual_sq + 2.0 * lambda * l1) / static_cast<double>(n));
}

struct NewtonOptions
{
    double lambda0 = 0.0;  // <= 0: tau / 2
    double eps = 0.0;      // <= 0: 1e-8 * tau
    std::size_t max_iter = 200;
    double kkt_tol = SolverConfig{}.kkt_tol;
};

namespace detail {

/// Points in decreasing order between which Gamma_B is monotone: every
/// breakpoint plus the one interior critical point of each segment, where
/// u w - 2 q w lambda - u q lambda^2 = 0.
inline std::vector<double> newton_probes(const PathBackend& b)
{
    std::vector<double> pts;
    for (const auto& seg : b.path().segments) {
        pts.push_back(seg.lambda_hi);
        const double u = seg.lin, q = seg.quad, w = seg.perp_sq;
        if (u > 0.0 && q > 0.0 && w > 0.0) {
            const double crit = (std::sqrt(q * q * w * w + u * u * q * w) - q * w) / (u * q);
            if (crit > seg.lambda_lo && crit < seg.lambda_hi) pts.push_back(crit);
        }
    }
    pts.push_back(b.lambda_floor());
    return pts;
}

/// Without the path: geometric grid tau * 0.97^k down to 1e-6 tau.
inline std::vector<double> newton_probes(const SolverBackend& b)
{
    std::vector<double> pts;
    for (double l = b.tau(); l >= 1e-6 * b.tau(); l *= 0.97) pts.push_back(l);
    return pts;
}

} // namespace detail

/// Newton iteration on Gamma_B(lambda) - C inside a bracket [lo, hi] with
/// Gamma_B(lo) > C > Gamma_B(hi); any step leaving the bracket (or taken
/// with a non-negative slope) is replaced by bisection. The bracket is the
/// first probe interval below tau where Gamma_B crosses C, so the root
/// found is the largest one.
template <class BackendT>
TunedEstimate tune_newton(const BackendT& backend, Index n, double c, NewtonOptions opt = {})
{
    if (!(c > 0.0)) throw InvalidArgument("tune_newton: C must be positive");
    const double tau = backend.tau();
    if (!(tau > 0.0)) throw InvalidArgument("tune_newton: X^t y = 0");
    const double eps = opt.eps > 0.0 ? opt.eps : 1e-8 * tau;
    double lo = 0.0;
    double hi = tau;
    double g_max = 0.0;
    bool bracketed = false;
    for (double pt : detail::newton_probes(backend)) {
        if (!(pt < tau)) continue;
        const double g = detail::gamma_b_value(backend.at(pt));
        g_max = std::max(g_max, g);
        if (g > c) {
            lo = pt;
            bracketed = true;
            break;
        }
        hi = pt;
    }
    if (!bracketed)
        throw OutOfRangeError("tune_newton: C=" + std::to_string(c) + " exceeds Gamma_B on the computed path", 0.0,
                              g_max);
    double lambda = opt.lambda0 > 0.0 ? opt.lambda0 : 0.5 * tau;
    if (!(lambda > lo && lambda < hi)) lambda = 0.5 * (lo + hi);

    TunedEstimate est;
    est.method = TuneMethod::newton;
    est.history.emplace_back(0, lambda);
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        est.iterations = it;
        const LambdaState st = backend.at(lambda);
        const double g = detail::gamma_b_value(st) - c;
        if (g == 0.0) {
            est.converged = true;
            break;
        }
        if (g > 0.0) lo = lambda; else hi = lambda;
        // Derivative of the segment on the side the step heads to.
        const LambdaState side = g > 0.0 ? backend.at(lambda, +1) : backend.at(lambda, -1);
        const double slope = detail::gamma_b_slope(side);
        double next = slope < 0.0 ? lambda - g / slope : std::numeric_limits<double>::quiet_NaN();
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        est.history.emplace_back(it, next);
        const double step = std::abs(next - lambda);
        lambda = next;
        if (step < eps) {
            est.converged = true;
            break;
        }
    }
    detail::fill_from_solution(est, backend.solution(lambda, opt.kkt_tol));
    est.sigma_hat = sigma_hat_b(est.residual_sq, est.lambda_hat, est.l1_norm, n);
    if (!est.converged) est.note = "newton/bisection did not reach eps within max_iter";
    return est;
}

inline TunedEstimate tune_newton(const LassoPath& path, const Matrix& x, const Vector& y, double c,
                                 NewtonOptions opt = {})
{
    return tune_newton(PathBackend(path, x, y), x.rows(), c, opt);
}

/// Every root of Gamma_B(lambda) = C on the path, decreasing. On a segment
/// the equation reads (1 + C) quad lambda^2 - lin lambda + C perp_sq = 0.
inline std::vector<double> gamma_b_roots(const LassoPath& path, double c)
{
    std::vector<double> roots;
    for (const auto& seg : path.segments) {
        const double a = (1.0 + c) * seg.quad;
        const double b = -seg.lin;
        const double k = c * seg.perp_sq;
        const double disc = b * b - 4.0 * a * k;
        if (!(a > 0.0) || disc < 0.0) continue;
        const double sq = std::sqrt(disc);
        // Stable pair: q = -(b + sign(b) sqrt(disc)) / 2.
        const double qv = -0.5 * (b + (b >= 0.0 ? sq : -sq));
        double cand[2] = {qv / a, qv != 0.0 ? k / qv : 0.0};
        std::sort(cand, cand + 2, std::greater<>());
        for (double lam : cand) {
            const double slack = 1e-12 * seg.lambda_hi;
            if (!(lam > 0.0) || lam > seg.lambda_hi + slack || lam < seg.lambda_lo - slack) continue;
            lam = std::clamp(lam, seg.lambda_lo, seg.lambda_hi);
            if (roots.empty() || std::abs(roots.back() - lam) > 1e-9 * lam) roots.push_back(lam);
        }
    }
    return roots;
}

/// Exact root of Gamma_B = C from the path's per-segment closed forms. When
/// several roots exist the largest (closest to tau) is returned and
/// roots_found records how many there were.
inline TunedEstimate tune_path_exact_b(const LassoPath& path, const Matrix& x, const Vector& y, double c,
                                       double kkt_tol = SolverConfig{}.kkt_tol)
{
    if (!(c > 0.0)) throw InvalidArgument("tune_path_exact_b: C must be positive");
    const std::vector<double> roots = gamma_b_roots(path, c);
    if (roots.empty()) {
        double hi = 0.0;
        for (double b : path.breakpoints())
            if (b >= path.lambda_min && b < path.tau) hi = std::max(hi, gamma_b(path, b));
        throw OutOfRangeError("tune_path_exact_b: Gamma_B = " + std::to_string(c) + " has no root on the computed path",
                              0.0, hi);
    }
    TunedEstimate est;
    est.method = TuneMethod::path_exact;
    est.converged = true;
    est.roots_found = roots.size();
    est.history.emplace_back(0, roots.front());
    if (roots.size() > 1) est.note = std::to_string(roots.size()) + " roots; returned the largest";
    detail::fill_from_solution(est, eval_path(path, x, y, roots.front(), kkt_tol));
    est.sigma_hat = sigma_hat_b(est.residual_sq, est.lambda_hat, est.l1_norm, path.n);
    return est;
}

/// Newton first; non-convergence falls back to the exact path root.
inline TunedEstimate tune_strategy_b(const LassoPath& path, const Matrix& x, const Vector& y, double c,
                                     TuneMethod method = TuneMethod::newton, NewtonOptions opt = {})
{
    if (method == TuneMethod::path_exact) return tune_path_exact_b(path, x, y, c, opt.kkt_tol);
    TunedEstimate est = tune_newton(path, x, y, c, opt);
    if (est.converged) return est;
    TunedEstimate exact = tune_path_exact_b(path, x, y, c, opt.kkt_tol);
    exact.iterations = est.iterations;
    exact.note = "newton did not converge; fell back to path_exact";
    return exact;
}

} // namespace varlasso
