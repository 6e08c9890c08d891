#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ttiga/tt_tensor.hpp"

namespace ttiga {

/// Batch of multi-indices, one per row.
using IndexMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Tensor known only through an entry oracle evaluated on batches.
struct BlackBoxTensor {
    std::vector<Index> shape;
    std::function<Vector(const IndexMatrix&)> oracle;
};

struct CrossOptions {
    double tol = 1e-8;        ///< target max relative error on validation samples
    Index max_rank = 64;
    int max_sweeps = 40;
    Index validation_size = 1000;
    std::uint64_t seed = 2024;

    void validate() const;
};

struct CrossReport {
    double error = 0.0;  ///< max |f - t| / max |f| on the last validation set
    int sweeps = 0;
    std::int64_t evaluations = 0;  ///< exact number of oracle entries requested
    bool converged = false;
    /// Final pivot sets: left[k] holds multi-indices of positions 0..k-1,
    /// right[k] of positions k..d-1. The result interpolates the oracle on
    /// every (left[k], i, right[k+1]).
    std::vector<IndexMatrix> left, right;
};

/// Rows of a tall full-column-rank matrix whose square submatrix has
/// quasi-maximal volume: every entry of M * M[rows]^{-1} is at most 1 + delta.
std::vector<Index> maxvol(const Matrix& m, double delta = 0.01, int max_iters = 0);

/// TT approximation from entry evaluations (alternating maxvol sweeps).
TTTensor cross_interpolate(const BlackBoxTensor& f, const CrossOptions& opts = {}, CrossReport* report = nullptr);

}  // namespace ttiga
