#pragma once

#include <Eigen/Core>

#include "ttiga/dense_tensor.hpp"

namespace ttiga::detail {

struct ThinQR {
    Eigen::MatrixXd q;
    Eigen::MatrixXd r;
};

/// a = q * r with q having min(rows, cols) orthonormal columns.
ThinQR thin_qr(const Eigen::MatrixXd& a);

struct ThinSVD {
    Eigen::MatrixXd u;
    Eigen::VectorXd s;
    Eigen::MatrixXd v;
};

ThinSVD thin_svd(const Eigen::MatrixXd& a);

/// Singular values below this are treated as exact zeros.
inline constexpr double kZeroSingularValue = 1e-300;

/// Smallest rank r >= 1 whose discarded tail satisfies sqrt(sum_{i>=r} s_i^2) <= delta.
/// `max_rank` of 0 means unbounded.
Index truncation_rank(const Eigen::VectorXd& s, double delta, Index max_rank = 0);

}  // namespace ttiga::detail
