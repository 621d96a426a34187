#pragma once
#include <cmath>
#include <Eigen/Dense>
#include "errors.hpp"
#include "theory.hpp"
#include "types.hpp"

namespace varlasso {

// Estimators that know the true support T and its signs. For lambda fixed,
//   beta_T = (X_T^t X_T)^{-1} (X_T^t y - lambda sgn),  zero off T.

namespace detail {

/// G = X_T^t X_T with its Cholesky factor and the orthogonal-complement
/// projector applied through the factor.
class SupportFactor
{
public:
    SupportFactor(const Matrix& x, const IndexList& support, const SignVector& signs)
        : xt_(gather_columns(x, support)), signs_(signs)
    {
        if (static_cast<Index>(support.size()) != signs.size())
            throw InvalidArgument("oracle: support and signs sizes differ");
        if (support.empty()) throw InvalidArgument("oracle: empty support");
        if (xt_.cols() > xt_.rows()) throw SingularMatrixError("oracle: |T| > n, X_T^t X_T is singular");
        gram_ = xt_.transpose() * xt_;
        llt_.compute(gram_);
        const Vector d = Matrix(llt_.matrixL()).diagonal();
        if (llt_.info() != Eigen::Success || !(d.minCoeff() > 1e-7 * d.maxCoeff()))
            throw SingularMatrixError("oracle: X_T^t X_T is (numerically) singular");
        ginv_sgn_ = llt_.solve(signs_);
    }

    const Matrix& xt() const { return xt_; }
    const Matrix& gram() const { return gram_; }
    Vector solve(const Vector& v) const { return llt_.solve(v); }
    const Vector& ginv_signs() const { return ginv_sgn_; }
    /// sgn^t G^{-1} sgn = ||X_T G^{-1} sgn||^2.
    double quad() const { return signs_.dot(ginv_sgn_); }
    /// (I - P_{V_T}) v.
    Vector perp(const Vector& v) const { return v - xt_ * llt_.solve(xt_.transpose() * v); }

private:
    Matrix xt_;
    SignVector signs_;
    Matrix gram_;
    Eigen::LLT<Matrix> llt_;
    Vector ginv_sgn_;
};

} // namespace detail

inline Vector oracle_beta(const Matrix& x, const IndexList& support, const SignVector& signs, const Vector& y,
                          double lambda)
{
    const detail::SupportFactor f(x, support, signs);
    const Vector bt = f.solve(f.xt().transpose() * y) - lambda * f.ginv_signs();
    Vector b = Vector::Zero(x.cols());
    for (std::size_t k = 0; k < support.size(); ++k) b(support[k]) = bt(static_cast<Index>(k));
    return b;
}

struct OracleA
{
    double lambda = 0.0;
    bool well_defined = false;
    double perp_sq = 0.0;      // ||P_{V_T^perp} z||^2
    double quad = 0.0;         // ||X_T (X_T^t X_T)^{-1} sgn||^2
    double denominator = 0.0;  // n / (cvar log p) - quad
};

/// lambda^2 = ||P_perp z||^2 / (n / (cvar log p) - quad).
inline OracleA oracle_lambda_a(const Matrix& x, const IndexList& support, const SignVector& signs, const Vector& z,
                               double cvar)
{
    if (!(cvar > 0.0)) throw InvalidArgument("oracle_lambda_a: cvar must be positive");
    if (x.cols() < 2) throw InvalidArgument("oracle_lambda_a: need p >= 2");
    const detail::SupportFactor f(x, support, signs);
    OracleA o;
    o.perp_sq = f.perp(z).squaredNorm();
    o.quad = f.quad();
    o.denominator = static_cast<double>(x.rows()) / (cvar * std::log(static_cast<double>(x.cols()))) - o.quad;
    o.well_defined = o.denominator > 0.0;
    if (o.well_defined) o.lambda = std::sqrt(o.perp_sq / o.denominator);
    return o;
}

struct OracleB
{
    double root_minus = 0.0;  // the oracle value
    double root_plus = 0.0;
    double delta = 0.0;
    bool well_defined = false;
    double perp_sq = 0.0;
    double quad = 0.0;
    double cross = 0.0;  // sgn^t (X_T^t X_T)^{-1} X_T^t y
};

/// Roots of (1/2 + C) quad lambda^2 - C cross lambda + ||P_perp z||^2 / 2 = 0.
/// P_perp y = P_perp z whenever y - z lies in span(X_T), so y is used.
inline OracleB oracle_lambda_b(const Matrix& x, const IndexList& support, const SignVector& signs, const Vector& y,
                               double c)
{
    if (!(c > 0.0)) throw InvalidArgument("oracle_lambda_b: C must be positive");
    const detail::SupportFactor f(x, support, signs);
    OracleB o;
    o.perp_sq = f.perp(y).squaredNorm();
    o.quad = f.quad();
    o.cross = f.ginv_signs().dot(f.xt().transpose() * y);
    const double cv = c * o.cross;
    o.delta = cv * cv - (1.0 + 2.0 * c) * o.quad * o.perp_sq;
    o.well_defined = o.delta > 0.0;
    if (o.well_defined) {
        const double sq = std::sqrt(o.delta);
        const double denom = (1.0 + 2.0 * c) * o.quad;
        // Product of the roots is perp_sq / ((1 + 2C) quad); use it for the small one.
        if (cv > 0.0) {
            o.root_plus = (cv + sq) / denom;
            o.root_minus = o.perp_sq / (denom * o.root_plus);
        } else {
            o.root_minus = (cv - sq) / denom;
            o.root_plus = o.root_minus != 0.0 ? o.perp_sq / (denom * o.root_minus) : (cv + sq) / denom;
        }
    }
    return o;
}

/// ||y - X_T beta_T||^2 computed directly and via ||P_perp y||^2 + lambda^2 quad.
struct ResidualDecomposition
{
    double direct = 0.0;
    double decomposed = 0.0;
};

inline ResidualDecomposition oracle_residual(const Matrix& x, const IndexList& support, const SignVector& signs,
                                             const Vector& y, double lambda)
{
    const detail::SupportFactor f(x, support, signs);
    const Vector b = oracle_beta(x, support, signs, y, lambda);
    return {(y - x * b).squaredNorm(), f.perp(y).squaredNorm() + lambda * lambda * f.quad()};
}

/// max_{j not in T} |X_j^t (y - X_T beta_T)| / lambda; < 1 is strict dual feasibility.
inline double oracle_dual_ratio(const Matrix& x, const IndexList& support, const SignVector& signs, const Vector& y,
                                double lambda)
{
    if (!(lambda > 0.0)) throw InvalidArgument("oracle_dual_ratio: lambda must be positive");
    const Vector b = oracle_beta(x, support, signs, y, lambda);
    const Vector corr = x.transpose() * (y - x * b);
    std::vector<bool> on(static_cast<std::size_t>(x.cols()), false);
    for (Index j : support) on[static_cast<std::size_t>(j)] = true;
    double m = 0.0;
    for (Index j = 0; j < x.cols(); ++j)
        if (!on[static_cast<std::size_t>(j)]) m = std::max(m, std::abs(corr(j)));
    return m / lambda;
}

/// The five deterministic conditions on (X, T, sgn, z); margin >= 0 iff a
/// condition holds.
struct CpConditions
{
    Check noise_on_support;       // ||G^{-1} X_T^t z||_inf <= kappa sigma sqrt(log p)
    Check inverse_signs;          // ||G^{-1} sgn||_inf <= 3
    Check irrepresentable;        // ||X_{T^c}^t X_T G^{-1} sgn||_inf <= 1/4
    Check noise_off_support;      // ||X_{T^c}^t (I - P_T) z||_inf <= kappa sigma sqrt(log p)
    Check near_isometry;          // ||G - I|| <= r

    bool all() const
    {
        return noise_on_support.ok && inverse_signs.ok && irrepresentable.ok && noise_off_support.ok
            && near_isometry.ok;
    }
};

inline CpConditions check_cp_conditions(const Matrix& x, const IndexList& support, const SignVector& signs,
                                        const Vector& z, double sigma, const TheoryParams& params)
{
    if (x.rows() != z.size()) throw InvalidArgument("check_cp_conditions: dimension mismatch");
    if (x.cols() < 2) throw InvalidArgument("check_cp_conditions: need p >= 2");
    const detail::SupportFactor f(x, support, signs);
    const double bound = kappa(params.alpha) * sigma * std::sqrt(std::log(static_cast<double>(x.cols())));

    std::vector<bool> on(static_cast<std::size_t>(x.cols()), false);
    for (Index j : support) on[static_cast<std::size_t>(j)] = true;
    auto off_support_max = [&](const Vector& v) {
        double m = 0.0;
        for (Index j = 0; j < x.cols(); ++j)
            if (!on[static_cast<std::size_t>(j)]) m = std::max(m, std::abs(x.col(j).dot(v)));
        return m;
    };

    CpConditions c;
    c.noise_on_support = make_check(bound - f.solve(f.xt().transpose() * z).lpNorm<Eigen::Infinity>());
    c.inverse_signs = make_check(3.0 - f.ginv_signs().lpNorm<Eigen::Infinity>());
    c.irrepresentable = make_check(0.25 - off_support_max(f.xt() * f.ginv_signs()));
    c.noise_off_support = make_check(bound - off_support_max(f.perp(z)));
    const Matrix dev = f.gram() - Matrix::Identity(f.gram().rows(), f.gram().cols());
    const double dev_norm = Eigen::SelfAdjointEigenSolver<Matrix>(dev, Eigen::EigenvaluesOnly)
                                .eigenvalues()
                                .cwiseAbs()
                                .maxCoeff();
    c.near_isometry = make_check(params.r - dev_norm);
    return c;
}

} // namespace varlasso
