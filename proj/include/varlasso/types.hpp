#pragma once
#include <cstdint>
#include <vector>
#include <Eigen/Core>

namespace varlasso {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Ordered list of column indices (0-based).
using IndexList = std::vector<Index>;

/// Entries are exactly -1.0 or +1.0; stored as doubles so they enter
/// linear algebra directly.
using SignVector = Eigen::VectorXd;

using Seed = std::uint64_t;

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline Matrix gather_columns(const Matrix& x, const IndexList& idx)
{
    Matrix out(x.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = x.col(idx[k]);
    return out;
}

inline Vector gather(const Vector& v, const IndexList& idx)
{
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
    return out;
}

} // namespace varlasso
