#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>

#include "ttiga/amen.hpp"
#include "ttiga/bspline.hpp"
#include "ttiga/cross.hpp"
#include "ttiga/param_grid.hpp"
#include "ttiga/tt_tensor.hpp"

namespace ttiga {

using Point3 = std::array<double, 3>;

/// Parameter-dependent map from the reference cube to physical space.
struct ParametricMap {
    Index num_params = 0;
    std::function<Point3(const Point3& y, std::span<const double> theta)> eval;
};

struct GeometryOptions {
    double cross_tol = 1e-11;    ///< relative max error of the Greville-grid cross
    double eps_geom = 1e-10;     ///< rounding of intermediate Hadamard products
    double reciprocal_eps = 1e-10;
    bool qtt_reciprocal = false;  ///< invert o in QTT form
    Index max_rank = 64;
    Index positivity_samples = 10000;
    std::uint64_t seed = 7;
};

/// Spline geometry with TT control points p_s of shape n1 x n2 x n3 x l1 x ...
struct GeometryMap {
    std::array<BSplineBasis, 3> bases;
    ParamGrid grid;
    std::array<TTTensor, 3> control;
    double fit_error = 0.0;  ///< worst cross validation error over the components

    /// Spline map with control points interpolated in theta.
    Point3 evaluate(const Point3& y, std::span<const double> theta) const;
    /// D_y G at (y, theta); entry (s, t) = dG_s / dy_t.
    Eigen::Matrix3d jacobian(const Point3& y, std::span<const double> theta) const;
    /// Same spline map with control points interpolated onto another grid of the same box.
    GeometryMap resampled(const ParamGrid& grid) const;
};

GeometryMap fit_geometry(const ParametricMap& map, const std::array<BSplineBasis, 3>& bases, const ParamGrid& grid,
                         const GeometryOptions& opts = {});

using SpatialQuadrature = std::array<QuadratureGrid, 3>;

SpatialQuadrature default_quadrature(const std::array<BSplineBasis, 3>& bases);

/// Geometry terms on the quadrature x parameter grid.
struct JacobianBundle {
    SpatialQuadrature quad;
    std::array<std::array<TTTensor, 3>, 3> J;    ///< J[s][t] = dG_s / dy_t
    std::array<std::array<TTTensor, 3>, 3> adj;  ///< adjugate, adj * J = det * I
    TTTensor o;                                  ///< |det J|
    TTTensor inv_o;                              ///< 1 / o
    std::array<TTTensor, 6> K;                   ///< (00, 01, 02, 11, 12, 22)
    bool orientation_reversed = false;           ///< det J < 0 everywhere, o = -det J
    double min_sampled_o = 0.0;
    SolveReport reciprocal_report;

    const TTTensor& k(int a, int b) const;
};

/// Index into JacobianBundle::K for the symmetric pair (a, b).
int metric_slot(int a, int b);

/// Throws std::runtime_error when o changes sign on the samples or 1/o fails.
JacobianBundle jacobians(const GeometryMap& geom, const SpatialQuadrature& quad, const GeometryOptions& opts = {});

/// Only o = |det D_y G| (no reciprocal, no metric).
TTTensor jacobian_weight(const GeometryMap& geom, const SpatialQuadrature& quad, const GeometryOptions& opts = {});

/// Physical coordinates x_s of the quadrature x parameter grid.
std::array<TTTensor, 3> physical_coordinates(const GeometryMap& geom, const SpatialQuadrature& quad, double eps);

}  // namespace ttiga
