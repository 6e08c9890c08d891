#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ttiga/dense_tensor.hpp"

namespace ttiga {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using StridedMap = Eigen::Map<Matrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

/// Order-3 TT core of shape (r0, n, r1).
///
/// Storage is column-major with the left rank index fastest: entry (a, i, b)
/// sits at a + r0 * (i + n * b). With this layout the left unfolding
/// (r0*n) x r1 and the right unfolding r0 x (n*r1) are plain column-major
/// matrices over the same buffer.
class Core3 {
public:
    Core3() = default;
    Core3(Index r0, Index n, Index r1);
    Core3(Index r0, Index n, Index r1, Vector data);

    Index left_rank() const noexcept { return r0_; }
    Index mode_size() const noexcept { return n_; }
    Index right_rank() const noexcept { return r1_; }
    Index size() const noexcept { return r0_ * n_ * r1_; }

    double& operator()(Index a, Index i, Index b) { return data_[a + r0_ * (i + n_ * b)]; }
    double operator()(Index a, Index i, Index b) const { return data_[a + r0_ * (i + n_ * b)]; }

    Vector& values() noexcept { return data_; }
    const Vector& values() const noexcept { return data_; }

    MatrixMap left_unfolding() { return {data_.data(), r0_ * n_, r1_}; }
    ConstMatrixMap left_unfolding() const { return {data_.data(), r0_ * n_, r1_}; }
    MatrixMap right_unfolding() { return {data_.data(), r0_, n_ * r1_}; }
    ConstMatrixMap right_unfolding() const { return {data_.data(), r0_, n_ * r1_}; }

    /// r0 x r1 matrix for a fixed mode index.
    StridedMap slice(Index i) { return {data_.data() + r0_ * i, r0_, r1_, Eigen::OuterStride<>(r0_ * n_)}; }
    ConstStridedMap slice(Index i) const
    {
        return {data_.data() + r0_ * i, r0_, r1_, Eigen::OuterStride<>(r0_ * n_)};
    }

    /// Core with (a, i, b) -> (b, i, a).
    Core3 transposed() const;

private:
    Index r0_ = 0, n_ = 0, r1_ = 0;
    Vector data_;
};

/// Order-4 operator core of shape (r0, m, n, r1), row mode m and column mode n.
/// Entry (a, i, j, b) sits at a + r0 * (i + m * (j + n * b)).
class Core4 {
public:
    Core4() = default;
    Core4(Index r0, Index m, Index n, Index r1);

    Index left_rank() const noexcept { return r0_; }
    Index row_size() const noexcept { return m_; }
    Index col_size() const noexcept { return n_; }
    Index right_rank() const noexcept { return r1_; }
    Index size() const noexcept { return r0_ * m_ * n_ * r1_; }

    double& operator()(Index a, Index i, Index j, Index b) { return data_[a + r0_ * (i + m_ * (j + n_ * b))]; }
    double operator()(Index a, Index i, Index j, Index b) const
    {
        return data_[a + r0_ * (i + m_ * (j + n_ * b))];
    }

    Vector& values() noexcept { return data_; }
    const Vector& values() const noexcept { return data_; }

    /// View as an order-3 core over the merged (row, column) index i + m*j.
    Core3 as_core3() const;
    static Core4 from_core3(const Core3& c, Index m, Index n);

    Core4 transposed_ranks() const;
    /// Swaps row and column modes.
    Core4 transposed_modes() const;

private:
    Index r0_ = 0, m_ = 0, n_ = 0, r1_ = 0;
    Vector data_;
};

/// Tensor in TT format: x(i_1..i_d) = G_1[i_1] G_2[i_2] ... G_d[i_d].
class TTTensor {
public:
    TTTensor() = default;
    explicit TTTensor(std::vector<Core3> cores);

    /// Rank-1 tensor with every entry equal to `value`.
    static TTTensor constant(std::span<const Index> shape, double value);
    static TTTensor zeros(std::span<const Index> shape);
    /// Rank-1 tensor from per-mode vectors.
    static TTTensor rank_one(const std::vector<Vector>& factors);

    Index order() const noexcept { return static_cast<Index>(cores_.size()); }
    std::vector<Index> shape() const;
    /// (1, R_1, ..., R_{d-1}, 1)
    std::vector<Index> ranks() const;
    Index max_rank() const;
    /// Mean over the full rank vector including the two boundary ones.
    double mean_rank() const;
    Index storage() const;

    const std::vector<Core3>& cores() const noexcept { return cores_; }
    std::vector<Core3>& cores() noexcept { return cores_; }
    const Core3& core(Index k) const { return cores_[static_cast<std::size_t>(k)]; }
    Core3& core(Index k) { return cores_[static_cast<std::size_t>(k)]; }

    /// Single entry by multi-index.
    double entry(std::span<const Index> index) const;

    /// Same tensor with the mode order reversed.
    TTTensor reversed() const;

private:
    void validate() const;
    std::vector<Core3> cores_;
};

/// Operator in TT format mapping column-shape tensors to row-shape tensors.
class TTMatrix {
public:
    TTMatrix() = default;
    explicit TTMatrix(std::vector<Core4> cores);

    static TTMatrix identity(std::span<const Index> shape);
    /// Rank-1 operator from per-mode dense matrices (row x column).
    static TTMatrix kronecker(const std::vector<Matrix>& factors);
    /// diag(t) as an operator.
    static TTMatrix diagonal(const TTTensor& t);

    Index order() const noexcept { return static_cast<Index>(cores_.size()); }
    std::vector<Index> row_shape() const;
    std::vector<Index> col_shape() const;
    std::vector<Index> ranks() const;
    Index max_rank() const;
    double mean_rank() const;
    Index storage() const;

    const std::vector<Core4>& cores() const noexcept { return cores_; }
    std::vector<Core4>& cores() noexcept { return cores_; }
    const Core4& core(Index k) const { return cores_[static_cast<std::size_t>(k)]; }
    Core4& core(Index k) { return cores_[static_cast<std::size_t>(k)]; }

    double entry(std::span<const Index> row, std::span<const Index> col) const;

    TTMatrix reversed() const;
    TTMatrix transposed() const;

    /// The operator viewed as a TT tensor over merged (row, col) modes.
    TTTensor as_tensor() const;
    static TTMatrix from_tensor(const TTTensor& t, std::span<const Index> rows, std::span<const Index> cols);

    /// Diagonal entries as a TT tensor (square operators only).
    TTTensor diagonal_part() const;

private:
    void validate() const;
    std::vector<Core4> cores_;
};

// ---------------------------------------------------------------- operations

/// TT-SVD. Guarantees ||x - full(result)||_F <= eps * ||x||_F.
TTTensor tt_from_dense(const DenseTensor& x, double eps, Index max_rank = 0);

/// Default budget for materializing TT tensors densely (entries).
inline constexpr Index kDefaultDenseBudget = Index{1} << 26;

DenseTensor tt_full(const TTTensor& t, Index budget = kDefaultDenseBudget);
/// Dense (rows x cols) matrix, row and column multi-indices linearized row-major.
Matrix tt_full(const TTMatrix& a, Index budget = kDefaultDenseBudget);

TTTensor tt_round(const TTTensor& t, double eps, Index max_rank = 0);
TTMatrix tt_round(const TTMatrix& a, double eps, Index max_rank = 0);

TTTensor tt_add(const TTTensor& a, const TTTensor& b);
TTMatrix tt_add(const TTMatrix& a, const TTMatrix& b);
TTTensor tt_hadamard(const TTTensor& a, const TTTensor& b);
TTTensor tt_scale(const TTTensor& a, double s);
TTMatrix tt_scale(const TTMatrix& a, double s);
/// a + s * b
TTTensor tt_axpy(const TTTensor& a, double s, const TTTensor& b);

double tt_dot(const TTTensor& a, const TTTensor& b);
/// Sum over all entries of a * w * b, without forming the Hadamard product.
double tt_dot3(const TTTensor& a, const TTTensor& w, const TTTensor& b);
/// Frobenius norm computed by orthogonalization (stable for small norms).
double tt_norm(const TTTensor& t);
/// Sum of all entries.
double tt_sum(const TTTensor& t);

TTTensor ttm_apply(const TTMatrix& a, const TTTensor& x);
/// Operator product a * b.
TTMatrix ttm_compose(const TTMatrix& a, const TTMatrix& b);

/// Left-orthogonalizes cores 0..d-2 in place; returns the norm of the tensor.
double left_orthogonalize(TTTensor& t);
/// Right-orthogonalizes cores 1..d-1 in place; returns the norm of the tensor.
double right_orthogonalize(TTTensor& t);

/// Applies a per-mode matrix (new_size x old_size) along mode k of every slice.
TTTensor tt_mode_product(const TTTensor& t, Index mode, const Matrix& m);

}  // namespace ttiga
