#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ttiga/amen.hpp"
#include "ttiga/geometry.hpp"

namespace ttiga {

/// Scalar field evaluated at a point (reference or physical, see the field) and a parameter vector.
using ScalarFn = std::function<double(const Point3&, std::span<const double>)>;

enum class BoundaryKind { neumann, dirichlet };

/// Homogeneous Neumann, or Dirichlet with data g in physical coordinates (empty g means 0).
struct FaceCondition {
    BoundaryKind kind = BoundaryKind::neumann;
    ScalarFn g;
};

/// Reference-cube faces in the order y1=0, y1=1, y2=0, y2=1, y3=0, y3=1.
using FaceConditions = std::array<FaceCondition, 6>;

inline constexpr int face_index(int axis, int side) { return 2 * axis + side; }

/// div(kappa grad u) + rho u = f with u = g on Dirichlet faces and zero flux elsewhere.
struct BVPProblem {
    GeometryMap geometry;
    ScalarFn kappa;   ///< in reference coordinates y; empty means 1
    double rho = 0.0;
    ScalarFn source;  ///< in physical coordinates x; empty means 0
    FaceConditions faces;

    /// Throws std::invalid_argument on Neumann faces carrying data or an
    /// ill-posed setup (rho = 0 without Dirichlet faces).
    void validate() const;
    bool has_dirichlet() const;
};

struct AssemblyOptions {
    double op_eps = 1e-9;     ///< operator rounding (relative Frobenius)
    double cross_tol = 1e-10;  ///< coefficient / data cross accuracy
    Index max_rank = 0;
    GeometryOptions geometry;
};

/// Extended operator with boundary rows replaced by a scaled identity.
struct DiscreteOperator {
    TTMatrix op;
    std::array<Vector, 3> interior;  ///< per-axis 0/1 masks; a point is interior when all three are 1
    double boundary_scale = 1.0;
};

/// Mass operator with weight o (times `coeff` when given).
TTMatrix assemble_mass(const JacobianBundle& bundle, const std::array<BSplineBasis, 3>& bases, const TTTensor* coeff = nullptr,
                       double eps = 0.0);

/// Stiffness operator sum_{a,b} d_a b_m K^{ab} kappa d_b b_k, rounded at eps.
TTMatrix assemble_stiffness(const JacobianBundle& bundle, const std::array<BSplineBasis, 3>& bases, const TTTensor& kappa, double eps);

/// kappa on the quadrature x parameter grid (constant one when the problem has no kappa).
TTTensor kappa_tensor(const BVPProblem& problem, const SpatialQuadrature& quad, const AssemblyOptions& opts);

/// Spline control values of f(G(y, theta), theta) from Greville interpolation.
TTTensor interpolate_source(const BVPProblem& problem, const AssemblyOptions& opts);

/// M f_hat; zero tensor when the problem has no source.
TTTensor assemble_rhs(const BVPProblem& problem, const TTMatrix& mass, const AssemblyOptions& opts);

/// Control values of the Dirichlet lifting: face data interpolated at the
/// Greville trace grid, zero inside.
TTTensor dirichlet_lift(const BVPProblem& problem, const AssemblyOptions& opts);

struct BoundarySystem {
    DiscreteOperator op;
    TTTensor rhs;
    TTTensor lift;
};

/// Lifting: solve op * u_I = P_I (rhs - L u_D), then u = u_I + u_D.
/// `l` is the unconstrained operator S - rho M and `rhs` the matching load (-M f_hat).
BoundarySystem apply_dirichlet(const TTMatrix& l, const TTTensor& rhs, const BVPProblem& problem, const AssemblyOptions& opts);

/// Discrete solution sum u_{ki} b_k(y) P_i(theta).
struct SolutionField {
    TTTensor u;
    std::array<BSplineBasis, 3> bases;
    ParamGrid grid;

    double evaluate(const Point3& y, std::span<const double> theta) const;
    /// Gradient with respect to the reference coordinates.
    std::array<double, 3> reference_gradient(const Point3& y, std::span<const double> theta) const;
};

struct EvalPoint {
    Point3 y;
    std::vector<double> theta;
};

std::vector<double> eval_solution(const SolutionField& sol, const std::vector<EvalPoint>& points);

struct Timings {
    double geometry = 0.0;
    double assembly = 0.0;
    double solve = 0.0;
};

struct BVPSolution {
    SolutionField field;
    SolveReport report;
    Timings timings;
    TTMatrix stiffness;
    TTMatrix mass;
    DiscreteOperator system;
};

struct BVPOptions {
    SolveOptions solver;
    AssemblyOptions assembly;
    bool qtt_solve = false;  ///< solve the extended system in QTT form
};

/// Assembles and solves; op_eps defaults to 0.1 * solver eps when left at 0.
BVPSolution solve_bvp(const BVPProblem& problem, const BVPOptions& opts);

struct ErrorOptions {
    /// Parameter nodes per axis for the error quadrature: refine * l + extra.
    Index param_refine = 2;
    Index param_extra = 2;
    double cross_tol = 1e-11;
    Index samples = 1000;
    std::uint64_t seed = 99;
};

struct ErrorNorms {
    double l2_rel = 0.0;
    double max_abs = 0.0;
};

/// Relative L2(Xi, G, 0) error against a reference in physical coordinates,
/// plus the max pointwise error on random (y, theta) samples.
ErrorNorms error_norms(const SolutionField& sol, const GeometryMap& geom, const ScalarFn& reference, const ErrorOptions& opts = {});

// ------------------------------------------------------------ serialization

/// Writes <stem>.tt (container) and <stem>.json (bases, grid, boundary tags).
void save_solution(const std::string& stem, const SolutionField& sol);
SolutionField load_solution(const std::string& stem);
void save_operator(const std::string& stem, const DiscreteOperator& op, const std::array<BSplineBasis, 3>& bases,
                   const ParamGrid& grid, const FaceConditions& faces);

}  // namespace ttiga
