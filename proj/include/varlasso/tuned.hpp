#pragma once
#include <cmath>
#include <string>
#include <utility>
#include <vector>
#include <Eigen/Dense>
#include "errors.hpp"
#include "homotopy.hpp"
#include "lasso.hpp"
#include "types.hpp"

namespace varlasso {

enum class TuneMethod { fixed_point, path_exact, newton };

inline const char* to_string(TuneMethod m)
{
    switch (m) {
    case TuneMethod::fixed_point: return "fixed_point";
    case TuneMethod::path_exact: return "path_exact";
    case TuneMethod::newton: return "newton";
    }
    return "?";
}

/// Where the tuners get beta_lambda from.
enum class Backend { homotopy, coordinate_descent };

/// (beta_hat, lambda_hat, sigma_hat) from a data-driven choice of lambda.
struct TunedEstimate
{
    Vector beta;
    IndexList active_set;
    SignVector signs;
    double lambda_hat = 0.0;
    double sigma_hat = 0.0;
    double residual_sq = 0.0;
    double l1_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    TuneMethod method = TuneMethod::fixed_point;
    std::vector<std::pair<std::size_t, double>> history;
    OptimalityCertificate kkt;
    std::size_t roots_found = 0;  // path_exact only
    std::string note;
};

/// Lasso solution at one lambda plus the per-segment scalars the tuning
/// functions need: quad = signs^t (X_A^t X_A)^{-1} signs.
struct LambdaState
{
    double lambda = 0.0;
    double residual_sq = 0.0;
    double l1 = 0.0;
    double quad = 0.0;
    bool empty = true;
};

/// Closed-form state on the path; side < 0 picks the lower segment when
/// lambda sits exactly on a breakpoint.
inline LambdaState path_state(const LassoPath& path, double lambda, int side = 0)
{
    LambdaState st;
    st.lambda = lambda;
    const PathSegment* seg = path.find(lambda);
    if (side < 0) {
        if (!seg && lambda == path.tau && !path.segments.empty()) seg = &path.segments.front();
        else if (seg && lambda == seg->lambda_lo && seg != &path.segments.back()) ++seg;
    }
    if (!seg) {
        st.residual_sq = path.y_sq;
        return st;
    }
    st.empty = false;
    st.residual_sq = seg->residual_sq(lambda);
    st.l1 = seg->l1_norm(lambda);
    st.quad = seg->quad;
    return st;
}

/// Closed-form evaluation on a precomputed homotopy path.
class PathBackend
{
public:
    PathBackend(const LassoPath& path, const Matrix& x, const Vector& y) : path_(path), x_(x), y_(y) {}

    const LassoPath& path() const { return path_; }
    double tau() const { return path_.tau; }
    double lambda_floor() const { return path_.lambda_min; }

    LambdaState at(double lambda, int side = 0) const { return path_state(path_, lambda, side); }

    LassoSolution solution(double lambda, double kkt_tol) const { return eval_path(path_, x_, y_, lambda, kkt_tol); }

private:
    const LassoPath& path_;
    const Matrix& x_;
    const Vector& y_;
};

/// Coordinate-descent evaluation with warm starts between calls.
class SolverBackend
{
public:
    SolverBackend(const Matrix& x, const Vector& y, SolverConfig cfg = {})
        : x_(x), y_(y), cfg_(cfg), tau_(tau_threshold(x, y))
    {}

    double tau() const { return tau_; }
    double lambda_floor() const { return 0.0; }

    LambdaState at(double lambda, int = 0) const
    {
        const LassoSolution s = solution(lambda, cfg_.kkt_tol);
        LambdaState st;
        st.lambda = lambda;
        st.residual_sq = s.residual_sq();
        st.l1 = s.l1_norm();
        if (!s.active_set.empty()) {
            st.empty = false;
            const Matrix xa = gather_columns(x_, s.active_set);
            Eigen::LDLT<Matrix> ldlt(xa.transpose() * xa);
            st.quad = s.signs.dot(ldlt.solve(s.signs));
        }
        return st;
    }

    LassoSolution solution(double lambda, double kkt_tol) const
    {
        SolverConfig cfg = cfg_;
        cfg.kkt_tol = kkt_tol;
        LassoSolution s = solve_lasso(x_, y_, lambda, cfg, warm_);
        warm_ = s.beta;
        return s;
    }

private:
    const Matrix& x_;
    const Vector& y_;
    SolverConfig cfg_;
    double tau_;
    mutable Vector warm_;
};

namespace detail {

inline void fill_from_solution(TunedEstimate& est, const LassoSolution& s)
{
    est.beta = s.beta;
    est.active_set = s.active_set;
    est.signs = s.signs;
    est.lambda_hat = s.lambda;
    est.residual_sq = s.residual_sq();
    est.l1_norm = s.l1_norm();
    est.kkt = s.kkt;
}

} // namespace detail

} // namespace varlasso
