#pragma once
#include <algorithm>
#include <cmath>
#include <Eigen/Dense>
#include "errors.hpp"
#include "types.hpp"

namespace varlasso {

/// Lower Cholesky factor L of G = X_A^t X_A for a growing/shrinking active
/// set A. Appending a column borders L with one row; removing one deletes a
/// row and restores triangularity with Givens rotations.
class ActiveSetCholesky
{
public:
    static constexpr double refactor_condition = 1e10;

    ActiveSetCholesky() = default;
    explicit ActiveSetCholesky(Index capacity) : l_(capacity, capacity) {}

    Index size() const { return size_; }

    /// x_a holds the current active columns (size() of them); col is the new one.
    void append(const Matrix& x, const IndexList& active, Index col)
    {
        ensure_capacity(size_ + 1);
        const Index k = size_;
        Vector cross(k);
        for (Index i = 0; i < k; ++i) cross(i) = x.col(active[static_cast<std::size_t>(i)]).dot(x.col(col));
        const double diag = x.col(col).squaredNorm();
        if (k > 0) {
            const Vector w = l_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solve(cross);
            const double d2 = diag - w.squaredNorm();
            if (!(d2 > 1e-14 * diag))
                throw SingularMatrixError("ActiveSetCholesky: column " + std::to_string(col)
                                          + " is (numerically) in the span of the active set");
            l_.row(k).head(k) = w.transpose();
            l_(k, k) = std::sqrt(d2);
        } else {
            if (!(diag > 0.0)) throw SingularMatrixError("ActiveSetCholesky: zero column");
            l_(0, 0) = std::sqrt(diag);
        }
        ++size_;
    }

    /// Removes active position pos (0-based) from the factorization.
    void remove(Index pos)
    {
        const Index m = size_;
        for (Index i = pos; i + 1 < m; ++i) l_.row(i).head(m) = l_.row(i + 1).head(m);
        // Rows pos..m-2 now have one nonzero past the diagonal; rotate it away.
        for (Index i = pos; i + 1 < m; ++i) {
            const double a = l_(i, i);
            const double b = l_(i, i + 1);
            const double r = std::hypot(a, b);
            const double c = a / r;
            const double s = b / r;
            for (Index row = i; row + 1 < m; ++row) {
                const double u = l_(row, i);
                const double v = l_(row, i + 1);
                l_(row, i) = c * u + s * v;
                l_(row, i + 1) = -s * u + c * v;
            }
            l_(i, i + 1) = 0.0;
        }
        --size_;
        for (Index i = 0; i < size_; ++i)
            if (l_(i, i) < 0.0) l_.col(i).segment(i, size_ - i) *= -1.0;
    }

    void refactor(const Matrix& x, const IndexList& active)
    {
        const Matrix xa = gather_columns(x, active);
        const Index k = xa.cols();
        ensure_capacity(k);
        Eigen::LLT<Matrix> llt(xa.transpose() * xa);
        if (llt.info() != Eigen::Success) throw SingularMatrixError("ActiveSetCholesky: refactorization failed");
        l_.topLeftCorner(k, k) = llt.matrixL();
        size_ = k;
    }

    /// (max L_ii / min L_ii)^2, a cheap lower estimate of cond(G).
    double condition_estimate() const
    {
        if (size_ == 0) return 1.0;
        const auto d = l_.diagonal().head(size_).cwiseAbs();
        const double ratio = d.maxCoeff() / d.minCoeff();
        return ratio * ratio;
    }

    /// Solves G v = rhs.
    Vector solve(const Vector& rhs) const
    {
        const auto l = l_.topLeftCorner(size_, size_).triangularView<Eigen::Lower>();
        Vector v = l.solve(rhs);
        l.transpose().solveInPlace(v);
        return v;
    }

    Matrix factor() const { return l_.topLeftCorner(size_, size_).triangularView<Eigen::Lower>(); }

private:
    void ensure_capacity(Index k)
    {
        if (l_.rows() >= k) return;
        const Index cap = std::max<Index>(k, 2 * l_.rows());
        Matrix grown = Matrix::Zero(cap, cap);
        grown.topLeftCorner(size_, size_) = l_.topLeftCorner(size_, size_);
        l_ = std::move(grown);
    }

    Matrix l_;
    Index size_ = 0;
};

} // namespace varlasso
