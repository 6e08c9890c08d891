#pragma once

#include <utility>
#include <vector>

#include "ttiga/tt_tensor.hpp"

namespace ttiga {

/// Open (clamped) knot vector on [0, 1].
class KnotVector {
public:
    KnotVector() = default;
    KnotVector(std::vector<double> knots, int degree);

    int degree() const noexcept { return p_; }
    /// Number of basis functions n = #knots - p - 1.
    Index size() const noexcept { return static_cast<Index>(knots_.size()) - p_ - 1; }
    const std::vector<double>& knots() const noexcept { return knots_; }
    double operator[](Index i) const { return knots_[static_cast<std::size_t>(i)]; }

    /// Distinct knot values in increasing order.
    std::vector<double> breakpoints() const;
    /// Multiplicity of each breakpoint.
    std::vector<int> multiplicities() const;

private:
    std::vector<double> knots_;
    int p_ = 0;
};

/// Per-span Gauss-Legendre points and weights on [0, 1].
struct QuadratureGrid {
    Vector points;
    Vector weights;
    /// Index of the first point of each nonempty span, plus the total count.
    std::vector<Index> span_offsets;
    Index size() const noexcept { return points.size(); }
};

class BSplineBasis {
public:
    BSplineBasis() = default;
    explicit BSplineBasis(KnotVector kv);

    int degree() const noexcept { return kv_.degree(); }
    Index size() const noexcept { return kv_.size(); }
    const KnotVector& knot_vector() const noexcept { return kv_; }

    /// Index s with knots[s] <= x < knots[s+1] (last nonempty span for x = 1).
    Index find_span(double x) const;
    /// Nonzero values b_{span-p..span}(x).
    Vector basis_funs(Index span, double x) const;
    /// Rows k = 0..nder of the nonzero derivatives at x.
    Matrix ders_basis_funs(Index span, double x, int nder) const;

    /// All n values at x.
    Vector eval_all(double x) const;
    /// All n first derivatives at x.
    Vector eval_all_deriv(double x) const;

    /// Greville abscissae, mean of p consecutive knots.
    Vector greville() const;
    /// p + 1 Gauss points per nonempty span.
    QuadratureGrid quadrature(int points_per_span = -1) const;

    /// Matrix (b_k(x_m)) of shape (#points, n); `deriv` selects derivative order 0 or 1.
    Matrix collocation_matrix(const Vector& points, int deriv = 0) const;

private:
    void check_point(double x) const;
    KnotVector kv_;
};

/// Open knot vector with n functions of degree p.
///
/// `breakpoints` lists interior knots with their multiplicity. The remaining
/// n - p - 1 - sum(mult) simple knots are distributed uniformly across the
/// segments between breakpoints, proportionally to segment length.
BSplineBasis make_basis(Index n, int degree, const std::vector<std::pair<double, int>>& breakpoints = {});

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<Vector, Vector> gauss_legendre(int q);

/// Gauss-Legendre rule mapped to [a, b].
std::pair<Vector, Vector> gauss_legendre(int q, double a, double b);

}  // namespace ttiga
