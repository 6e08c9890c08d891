#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ttiga {

using Index = std::ptrdiff_t;

/// A d-way array stored with the last index running fastest (row-major).
///
/// Entry (n_1, ..., n_d) lives at linear position
/// ((n_1 * N_2 + n_2) * N_3 + n_3) ... * N_d + n_d.
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(std::vector<Index> shape);
    DenseTensor(std::vector<Index> shape, std::vector<double> data);

    const std::vector<Index>& shape() const noexcept { return shape_; }
    Index order() const noexcept { return static_cast<Index>(shape_.size()); }
    Index size() const noexcept { return static_cast<Index>(data_.size()); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    double& operator[](Index linear) { return data_[static_cast<std::size_t>(linear)]; }
    double operator[](Index linear) const { return data_[static_cast<std::size_t>(linear)]; }

    double& at(std::span<const Index> index);
    double at(std::span<const Index> index) const;

    Index linear_index(std::span<const Index> index) const;
    std::vector<Index> multi_index(Index linear) const;

    double frobenius_norm() const;

private:
    std::vector<Index> shape_;
    std::vector<double> data_;
};

/// Product of the entries of `shape`; throws if any entry is non-positive.
Index shape_volume(std::span<const Index> shape);

}  // namespace ttiga
