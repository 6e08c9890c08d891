#include "ttiga/param_grid.hpp"

#include <stdexcept>
#include <string>
#include <tuple>

#include "ttiga/bspline.hpp"

namespace ttiga {

ParamGrid::ParamGrid(const std::vector<std::pair<double, double>>& intervals, const std::vector<Index>& counts)
{
    if (intervals.size() != counts.size()) throw std::invalid_argument("ParamGrid: one node count per interval");
    for (std::size_t k = 0; k < intervals.size(); ++k) {
        const auto [lo, hi] = intervals[k];
        if (!(hi > lo)) throw std::invalid_argument("ParamGrid: empty interval for parameter " + std::to_string(k));
        if (counts[k] < 1) throw std::invalid_argument("ParamGrid: node count must be positive");
        Axis a;
        a.lo = lo;
        a.hi = hi;
        std::tie(a.nodes, a.quad_weights) = gauss_legendre(static_cast<int>(counts[k]), lo, hi);
        const Index n = a.nodes.size();
        a.bary.resize(n);
        // Scaled to the interval length to avoid over/underflow for large n.
        const double scale = 4.0 / (hi - lo);
        for (Index i = 0; i < n; ++i) {
            double w = 1.0;
            for (Index j = 0; j < n; ++j)
                if (j != i) w *= scale * (a.nodes[i] - a.nodes[j]);
            a.bary[i] = 1.0 / w;
        }
        axes_.push_back(std::move(a));
    }
}

std::vector<Index> ParamGrid::shape() const
{
    std::vector<Index> s;
    for (const auto& a : axes_) s.push_back(a.nodes.size());
    return s;
}

Vector ParamGrid::lagrange(Index k, double theta) const
{
    const Axis& a = axis(k);
    const double tol = 1e-12 * (a.hi - a.lo);
    if (theta < a.lo - tol || theta > a.hi + tol)
        throw std::domain_error("parameter " + std::to_string(k) + " outside its interval: " + std::to_string(theta));
    const Index n = a.nodes.size();
    Vector out = Vector::Zero(n);
    for (Index i = 0; i < n; ++i)
        if (theta == a.nodes[i]) {
            out[i] = 1.0;
            return out;
        }
    double den = 0.0;
    for (Index i = 0; i < n; ++i) {
        out[i] = a.bary[i] / (theta - a.nodes[i]);
        den += out[i];
    }
    return out / den;
}

std::vector<double> ParamGrid::node(std::span<const Index> idx) const
{
    if (static_cast<Index>(idx.size()) != size()) throw std::invalid_argument("ParamGrid::node: index length mismatch");
    std::vector<double> th;
    for (Index k = 0; k < size(); ++k) th.push_back(axis(k).nodes[idx[static_cast<std::size_t>(k)]]);
    return th;
}

}  // namespace ttiga
