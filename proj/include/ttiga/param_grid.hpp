#pragma once

#include <vector>

#include "ttiga/tt_tensor.hpp"

namespace ttiga {

/// Tensor grid of Gauss-Legendre collocation nodes over a parameter box,
/// with Lagrange interpolation through the nodes of each parameter.
class ParamGrid {
public:
    struct Axis {
        double lo = 0.0, hi = 1.0;
        Vector nodes;
        Vector quad_weights;  ///< Gauss weights on [lo, hi]
        Vector bary;          ///< barycentric weights of the nodes
    };

    ParamGrid() = default;
    /// One axis per parameter: interval [lo, hi] with `count` nodes.
    ParamGrid(const std::vector<std::pair<double, double>>& intervals, const std::vector<Index>& counts);

    Index size() const noexcept { return static_cast<Index>(axes_.size()); }
    const Axis& axis(Index k) const { return axes_[static_cast<std::size_t>(k)]; }
    std::vector<Index> shape() const;

    /// Lagrange basis values P_i(theta) for every node i of axis k.
    Vector lagrange(Index k, double theta) const;

    /// Parameter vector at a node multi-index.
    std::vector<double> node(std::span<const Index> idx) const;

private:
    std::vector<Axis> axes_;
};

}  // namespace ttiga
