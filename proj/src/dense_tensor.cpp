#include "ttiga/dense_tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ttiga {

Index shape_volume(std::span<const Index> shape)
{
    Index v = 1;
    for (Index n : shape) {
        if (n <= 0) throw std::invalid_argument("mode sizes must be positive, got " + std::to_string(n));
        v *= n;
    }
    return v;
}

DenseTensor::DenseTensor(std::vector<Index> shape) : shape_(std::move(shape))
{
    if (shape_.empty()) throw std::invalid_argument("DenseTensor: empty shape");
    data_.assign(static_cast<std::size_t>(shape_volume(shape_)), 0.0);
}

DenseTensor::DenseTensor(std::vector<Index> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data))
{
    if (shape_.empty()) throw std::invalid_argument("DenseTensor: empty shape");
    if (static_cast<Index>(data_.size()) != shape_volume(shape_))
        throw std::invalid_argument("DenseTensor: data length does not match shape");
}

Index DenseTensor::linear_index(std::span<const Index> index) const
{
    if (index.size() != shape_.size()) throw std::invalid_argument("DenseTensor: index order mismatch");
    Index lin = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k) {
        if (index[k] < 0 || index[k] >= shape_[k]) throw std::out_of_range("DenseTensor: index out of range");
        lin = lin * shape_[k] + index[k];
    }
    return lin;
}

std::vector<Index> DenseTensor::multi_index(Index linear) const
{
    std::vector<Index> idx(shape_.size());
    for (std::size_t k = shape_.size(); k-- > 0;) {
        idx[k] = linear % shape_[k];
        linear /= shape_[k];
    }
    return idx;
}

double& DenseTensor::at(std::span<const Index> index) { return data_[static_cast<std::size_t>(linear_index(index))]; }

double DenseTensor::at(std::span<const Index> index) const
{
    return data_[static_cast<std::size_t>(linear_index(index))];
}

double DenseTensor::frobenius_norm() const
{
    long double s = 0;
    for (double v : data_) s += static_cast<long double>(v) * v;
    return static_cast<double>(std::sqrt(s));
}

}  // namespace ttiga
