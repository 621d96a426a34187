#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>
#include <Eigen/Dense>
#include "cholesky.hpp"
#include "errors.hpp"
#include "lasso.hpp"
#include "types.hpp"

namespace varlasso {

/// One maximal interval [lambda_lo, lambda_hi] on which the active set and
/// signs are constant. There beta_A(lambda) = offset - lambda * slope with
///   offset = (X_A^t X_A)^{-1} X_A^t y,  slope = (X_A^t X_A)^{-1} signs,
/// and ||y - X beta||^2 = perp_sq + lambda^2 * quad.
struct PathSegment
{
    double lambda_hi = 0.0;
    double lambda_lo = 0.0;
    IndexList active;
    SignVector signs;
    Vector offset;
    Vector slope;
    double perp_sq = 0.0;  // ||P_{V_A^perp} y||^2
    double quad = 0.0;     // signs^t (X_A^t X_A)^{-1} signs
    double lin = 0.0;      // signs^t offset, so ||beta||_1 = lin - lambda * quad

    bool contains(double lambda) const { return lambda <= lambda_hi && lambda >= lambda_lo; }
    double residual_sq(double lambda) const { return perp_sq + lambda * lambda * quad; }
    double l1_norm(double lambda) const { return lin - lambda * quad; }
    Vector active_coefficients(double lambda) const { return offset - lambda * slope; }
};

enum class PathStop { reached_lambda_min, full_active_set, zero_response };

/// Piecewise-affine map lambda -> beta_lambda on [lambda_min, inf).
/// segments are ordered by decreasing lambda; segments[0].lambda_hi == tau.
struct LassoPath
{
    Index n = 0;
    Index p = 0;
    double tau = 0.0;
    double lambda_min = 0.0;
    double y_sq = 0.0;
    std::vector<PathSegment> segments;
    PathStop stop = PathStop::reached_lambda_min;

    /// tau followed by every segment's lower end, strictly decreasing.
    std::vector<double> breakpoints() const
    {
        std::vector<double> b{tau};
        for (const auto& s : segments) b.push_back(s.lambda_lo);
        return b;
    }

    /// Segment containing lambda; nullptr when lambda >= tau (zero solution).
    /// At an interior breakpoint the upper segment is returned.
    const PathSegment* find(double lambda) const
    {
        if (lambda < lambda_min) throw InvalidArgument("LassoPath: lambda " + std::to_string(lambda)
                                                       + " below path range (lambda_min = "
                                                       + std::to_string(lambda_min) + ")");
        if (lambda >= tau) return nullptr;
        auto it = std::lower_bound(segments.begin(), segments.end(), lambda,
                                   [](const PathSegment& s, double l) { return s.lambda_lo > l; });
        if (it == segments.end()) return &segments.back();
        return &*it;
    }

    Vector beta(double lambda) const
    {
        Vector b = Vector::Zero(p);
        if (const auto* seg = find(lambda)) {
            const Vector a = seg->active_coefficients(lambda);
            for (std::size_t k = 0; k < seg->active.size(); ++k) b(seg->active[k]) = a(static_cast<Index>(k));
        }
        return b;
    }

    double residual_sq(double lambda) const
    {
        const auto* seg = find(lambda);
        return seg ? seg->residual_sq(lambda) : y_sq;
    }

    double l1_norm(double lambda) const
    {
        const auto* seg = find(lambda);
        return seg ? seg->l1_norm(lambda) : 0.0;
    }
};

namespace detail {

struct PathEvent
{
    double lambda = -1.0;
    Index column = -1;
    bool entering = false;
    double sign = 0.0;
};

inline void fill_segment(PathSegment& seg, const Matrix& x, const Vector& y, const ActiveSetCholesky& chol)
{
    const Index k = static_cast<Index>(seg.active.size());
    Vector xty(k);
    for (Index i = 0; i < k; ++i) xty(i) = x.col(seg.active[static_cast<std::size_t>(i)]).dot(y);
    seg.offset = chol.solve(xty);
    seg.slope = chol.solve(seg.signs);
    seg.quad = seg.signs.dot(seg.slope);
    seg.lin = seg.signs.dot(seg.offset);
    Vector fit = Vector::Zero(x.rows());
    for (Index i = 0; i < k; ++i) fit += seg.offset(i) * x.col(seg.active[static_cast<std::size_t>(i)]);
    seg.perp_sq = (y - fit).squaredNorm();
}

} // namespace detail

/// Lasso homotopy from tau = ||X^t y||_inf down to lambda_min (or until
/// |active| = n). Breakpoints are variable entries (an inactive correlation
/// reaches lambda) and exits (an active coefficient reaches zero). Two
/// events within cfg.bp_tol (relative) raise DegenerateBreakpointError.
inline LassoPath homotopy_path(const Matrix& x, const Vector& y, double lambda_min, const SolverConfig& cfg = {})
{
    if (!(lambda_min > 0.0)) throw InvalidArgument("homotopy_path: lambda_min must be positive");
    if (x.rows() != y.size()) throw InvalidArgument("homotopy_path: dimension mismatch");
    LassoPath path;
    path.n = x.rows();
    path.p = x.cols();
    path.y_sq = y.squaredNorm();
    const Vector xty = x.transpose() * y;
    Index first = 0;
    path.tau = xty.cwiseAbs().maxCoeff(&first);
    if (path.tau == 0.0) {
        warn("homotopy_path: X^t y = 0; the path is identically zero");
        path.lambda_min = lambda_min;
        path.stop = PathStop::zero_response;
        return path;
    }
    if (lambda_min >= path.tau) {
        path.lambda_min = lambda_min;
        return path;
    }

    const Index p = x.cols();
    const Index n = x.rows();
    ActiveSetCholesky chol(std::min(n, p) + 1);
    std::vector<bool> in_active(static_cast<std::size_t>(p), false);

    PathSegment cur;
    cur.lambda_hi = path.tau;
    cur.active = {first};
    cur.signs = SignVector::Constant(1, sign_of(xty(first)));
    in_active[static_cast<std::size_t>(first)] = true;
    chol.append(x, {}, first);

    double lambda = path.tau;
    for (;;) {
        detail::fill_segment(cur, x, y, chol);
        const Index k = static_cast<Index>(cur.active.size());
        const Matrix xa = gather_columns(x, cur.active);
        // Inactive correlations along the segment: c(lambda) = c0 + lambda * d.
        const Vector c0 = x.transpose() * (y - xa * cur.offset);
        const Vector d = x.transpose() * (xa * cur.slope);

        const double ceiling = lambda * (1.0 - std::max(cfg.bp_tol, 1e-12));
        detail::PathEvent best, second;
        auto consider = [&](const detail::PathEvent& e) {
            if (!(e.lambda > 0.0) || !(e.lambda < ceiling)) return;
            if (e.lambda > best.lambda) {
                second = best;
                best = e;
            } else if (e.lambda > second.lambda) {
                second = e;
            }
        };
        const bool full = k >= n;
        for (Index j = 0; j < p && !full; ++j) {
            if (in_active[static_cast<std::size_t>(j)]) continue;
            if (1.0 - d(j) != 0.0) consider({c0(j) / (1.0 - d(j)), j, true, 1.0});
            if (1.0 + d(j) != 0.0) consider({-c0(j) / (1.0 + d(j)), j, true, -1.0});
        }
        for (Index i = 0; i < k; ++i)
            if (cur.slope(i) != 0.0)
                consider({cur.offset(i) / cur.slope(i), cur.active[static_cast<std::size_t>(i)], false, 0.0});

        if (best.lambda <= lambda_min) {
            cur.lambda_lo = lambda_min;
            path.segments.push_back(cur);
            path.stop = PathStop::reached_lambda_min;
            break;
        }
        if (second.lambda > 0.0 && second.column != best.column
            && best.lambda - second.lambda <= cfg.bp_tol * best.lambda)
            throw DegenerateBreakpointError(best.lambda, best.column, second.column);
        if (full) {
            // |active| = n: the final segment extends to the next event.
            cur.lambda_lo = best.lambda;
            path.segments.push_back(cur);
            path.stop = PathStop::full_active_set;
            break;
        }

        cur.lambda_lo = best.lambda;
        path.segments.push_back(cur);
        lambda = best.lambda;

        PathSegment next;
        next.lambda_hi = lambda;
        next.active = cur.active;
        if (best.entering) {
            next.active.push_back(best.column);
            next.signs.resize(k + 1);
            next.signs.head(k) = cur.signs;
            next.signs(k) = best.sign;
            chol.append(x, cur.active, best.column);
            in_active[static_cast<std::size_t>(best.column)] = true;
        } else {
            const auto pos = std::find(cur.active.begin(), cur.active.end(), best.column) - cur.active.begin();
            next.active.erase(next.active.begin() + pos);
            next.signs.resize(k - 1);
            for (Index i = 0, o = 0; i < k; ++i)
                if (i != pos) next.signs(o++) = cur.signs(i);
            chol.remove(pos);
            in_active[static_cast<std::size_t>(best.column)] = false;
        }
        if (chol.condition_estimate() > ActiveSetCholesky::refactor_condition) chol.refactor(x, next.active);
        cur = std::move(next);
        if (cur.active.empty()) {
            // Every coefficient left the model (possible only in degenerate data).
            throw NumericalError("homotopy_path: active set emptied below tau at lambda=" + std::to_string(lambda));
        }
    }
    path.lambda_min = path.segments.back().lambda_lo;
    return path;
}

inline LassoPath homotopy_path(const DesignMatrix& x, const Vector& y, double lambda_min, const SolverConfig& cfg = {})
{
    return homotopy_path(x.entries(), y, lambda_min, cfg);
}

/// Closed-form evaluation on the containing segment, with a fresh certificate.
inline LassoSolution eval_path(const LassoPath& path, const Matrix& x, const Vector& y, double lambda,
                               double kkt_tol = SolverConfig{}.kkt_tol)
{
    if (!(lambda > 0.0)) throw InvalidArgument("eval_path: lambda must be positive");
    return make_solution(x, y, lambda, path.beta(lambda), kkt_tol);
}

inline LassoSolution eval_path(const LassoPath& path, const DesignMatrix& x, const Vector& y, double lambda,
                               double kkt_tol = SolverConfig{}.kkt_tol)
{
    return eval_path(path, x.entries(), y, lambda, kkt_tol);
}

/// CSV: segment,lambda_hi,lambda_lo,active,signs (indices/signs space-separated).
inline void write_path_csv(const LassoPath& path, std::ostream& os)
{
    os << "segment,lambda_hi,lambda_lo,active,signs\n";
    os.precision(17);
    for (std::size_t k = 0; k < path.segments.size(); ++k) {
        const auto& s = path.segments[k];
        os << k << ',' << s.lambda_hi << ',' << s.lambda_lo << ',';
        for (std::size_t i = 0; i < s.active.size(); ++i) os << (i ? " " : "") << s.active[i];
        os << ',';
        for (Index i = 0; i < s.signs.size(); ++i) os << (i ? " " : "") << (s.signs(i) > 0 ? "+1" : "-1");
        os << '\n';
    }
}

} // namespace varlasso
