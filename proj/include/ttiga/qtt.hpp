#pragma once

#include <vector>

#include "ttiga/tt_tensor.hpp"

namespace ttiga {

/// For each original mode, the ordered factors of its size. The first factor
/// is the most significant digit: index i of a mode with factors (f1, f2, f3)
/// maps to digits (d1, d2, d3) with i = (d1 * f2 + d2) * f3 + d3, which is the
/// row-major reshape of that mode.
struct QttFactorization {
    std::vector<std::vector<Index>> factors;

    /// Prime factors of every mode in ascending order.
    static QttFactorization primes(std::span<const Index> shape);
    void validate(std::span<const Index> shape) const;
    std::vector<Index> reshaped_shape() const;
};

std::vector<Index> prime_factors(Index n);

/// Splits every core into one core per factor. `eps` is a relative
/// truncation used per split (0 keeps exact ranks up to round-off).
TTTensor qtt_reshape(const TTTensor& t, const QttFactorization& f, double eps = 1e-14);
TTTensor qtt_unreshape(const TTTensor& t, const QttFactorization& f);

/// Row and column modes are split with the same factors.
TTMatrix qtt_reshape(const TTMatrix& a, const QttFactorization& f, double eps = 1e-14);
TTMatrix qtt_unreshape(const TTMatrix& a, const QttFactorization& f);

}  // namespace ttiga
