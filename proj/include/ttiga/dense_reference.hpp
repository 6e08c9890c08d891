#pragma once

// Brute-force single-parameter IGA assembly and solve, used to validate the
// TT operators. Every quantity is computed pointwise from the spline map:
// no TT arithmetic, no adjugates, no reciprocal tensors.

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ttiga/iga.hpp"

namespace ttiga::reference {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct ReferenceSystem {
    SparseMatrix mass;
    SparseMatrix stiffness;
};

inline Index flat_index(const std::array<Index, 3>& n, Index i0, Index i1, Index i2) { return (i0 * n[1] + i1) * n[2] + i2; }

inline ReferenceSystem reference_assemble(const GeometryMap& g, const ScalarFn& kappa, std::span<const double> theta,
                                          const SpatialQuadrature& quad)
{
    const std::array<Index, 3> n{g.bases[0].size(), g.bases[1].size(), g.bases[2].size()};
    const Index total = n[0] * n[1] * n[2];
    std::vector<Eigen::Triplet<double>> tm, ts;
    std::array<Matrix, 3> val, der;
    for (int k = 0; k < 3; ++k) {
        val[k] = g.bases[k].collocation_matrix(quad[k].points, 0);
        der[k] = g.bases[k].collocation_matrix(quad[k].points, 1);
    }
    const std::array<int, 3> p{g.bases[0].degree(), g.bases[1].degree(), g.bases[2].degree()};
    const Index nloc = (p[0] + 1) * (p[1] + 1) * (p[2] + 1);
    std::vector<Index> local(static_cast<std::size_t>(nloc));
    Vector bv(nloc);
    Matrix grad(3, nloc), mloc(nloc, nloc), sloc(nloc, nloc);
    const auto& o0 = quad[0].span_offsets;
    const auto& o1 = quad[1].span_offsets;
    const auto& o2 = quad[2].span_offsets;
    // One element per triple of nonempty spans; all its points share the same support.
    for (std::size_t e0 = 0; e0 + 1 < o0.size(); ++e0)
        for (std::size_t e1 = 0; e1 + 1 < o1.size(); ++e1)
            for (std::size_t e2 = 0; e2 + 1 < o2.size(); ++e2) {
                const std::array<Index, 3> a{g.bases[0].find_span(quad[0].points[o0[e0]]) - p[0],
                                             g.bases[1].find_span(quad[1].points[o1[e1]]) - p[1],
                                             g.bases[2].find_span(quad[2].points[o2[e2]]) - p[2]};
                Index c = 0;
                for (Index m0 = a[0]; m0 <= a[0] + p[0]; ++m0)
                    for (Index m1 = a[1]; m1 <= a[1] + p[1]; ++m1)
                        for (Index m2 = a[2]; m2 <= a[2] + p[2]; ++m2) local[static_cast<std::size_t>(c++)] = flat_index(n, m0, m1, m2);
                mloc.setZero();
                sloc.setZero();
                for (Index j0 = o0[e0]; j0 < o0[e0 + 1]; ++j0)
                    for (Index j1 = o1[e1]; j1 < o1[e1 + 1]; ++j1)
                        for (Index j2 = o2[e2]; j2 < o2[e2 + 1]; ++j2) {
                            const Point3 y{quad[0].points[j0], quad[1].points[j1], quad[2].points[j2]};
                            const double w = quad[0].weights[j0] * quad[1].weights[j1] * quad[2].weights[j2];
                            const Eigen::Matrix3d jac = g.jacobian(y, theta);
                            const Eigen::Matrix3d jit = jac.inverse().transpose();
                            const double dv = w * std::abs(jac.determinant());
                            const double kap = kappa ? kappa(y, theta) : 1.0;
                            c = 0;
                            for (Index m0 = a[0]; m0 <= a[0] + p[0]; ++m0)
                                for (Index m1 = a[1]; m1 <= a[1] + p[1]; ++m1)
                                    for (Index m2 = a[2]; m2 <= a[2] + p[2]; ++m2) {
                                        bv[c] = val[0](j0, m0) * val[1](j1, m1) * val[2](j2, m2);
                                        const Eigen::Vector3d gy(der[0](j0, m0) * val[1](j1, m1) * val[2](j2, m2),
                                                                 val[0](j0, m0) * der[1](j1, m1) * val[2](j2, m2),
                                                                 val[0](j0, m0) * val[1](j1, m1) * der[2](j2, m2));
                                        grad.col(c++) = jit * gy;  // physical gradient
                                    }
                            mloc.noalias() += dv * bv * bv.transpose();
                            sloc.noalias() += (dv * kap) * grad.transpose() * grad;
                        }
                for (Index r = 0; r < nloc; ++r)
                    for (Index q = 0; q < nloc; ++q) {
                        tm.emplace_back(local[static_cast<std::size_t>(r)], local[static_cast<std::size_t>(q)], mloc(r, q));
                        ts.emplace_back(local[static_cast<std::size_t>(r)], local[static_cast<std::size_t>(q)], sloc(r, q));
                    }
            }
    ReferenceSystem r;
    r.mass.resize(total, total);
    r.stiffness.resize(total, total);
    r.mass.setFromTriplets(tm.begin(), tm.end());
    r.stiffness.setFromTriplets(ts.begin(), ts.end());
    return r;
}

/// Extended block-diagonal operator over every parameter node, ordered like tt_full.
template <class F>
Matrix reference_extended(const GeometryMap& g, const SpatialQuadrature& quad, F pick)
{
    const auto pshape = g.grid.shape();
    Index blocks = 1;
    for (Index s : pshape) blocks *= s;
    const Index total = g.bases[0].size() * g.bases[1].size() * g.bases[2].size();
    Matrix out = Matrix::Zero(total * blocks, total * blocks);
    std::vector<Index> idx(pshape.size(), 0);
    for (Index blk = 0; blk < blocks; ++blk) {
        Index rem = blk;
        for (Index k = static_cast<Index>(pshape.size()) - 1; k >= 0; --k) {
            idx[static_cast<std::size_t>(k)] = rem % pshape[static_cast<std::size_t>(k)];
            rem /= pshape[static_cast<std::size_t>(k)];
        }
        const auto theta = g.grid.node(idx);
        const Matrix m = Matrix(pick(reference_assemble(g, {}, theta, quad)));
        for (Index r = 0; r < total; ++r)
            for (Index c = 0; c < total; ++c) out(r * blocks + blk, c * blocks + blk) = m(r, c);
    }
    return out;
}

/// Control values of the Dirichlet lifting at one parameter value, by dense
/// 2D Greville collocation per face (later faces overwrite shared edges).
inline Vector reference_lift(const BVPProblem& pr, std::span<const double> theta, std::vector<bool>& fixed)
{
    const auto& g = pr.geometry;
    const std::array<Index, 3> n{g.bases[0].size(), g.bases[1].size(), g.bases[2].size()};
    Vector u = Vector::Zero(n[0] * n[1] * n[2]);
    fixed.assign(static_cast<std::size_t>(u.size()), false);
    for (int axis = 0; axis < 3; ++axis)
        for (int side = 0; side < 2; ++side) {
            const auto& fc = pr.faces[static_cast<std::size_t>(face_index(axis, side))];
            if (fc.kind != BoundaryKind::dirichlet) continue;
            const int b = (axis + 1) % 3, c = (axis + 2) % 3;
            const Vector gb = g.bases[b].greville(), gc = g.bases[c].greville();
            const Matrix cb = g.bases[b].collocation_matrix(gb), cc = g.bases[c].collocation_matrix(gc);
            Matrix kron(n[b] * n[c], n[b] * n[c]);
            for (Index i = 0; i < n[b]; ++i)
                for (Index j = 0; j < n[c]; ++j)
                    for (Index k = 0; k < n[b]; ++k)
                        for (Index l = 0; l < n[c]; ++l) kron(i * n[c] + j, k * n[c] + l) = cb(i, k) * cc(j, l);
            Vector rhs(n[b] * n[c]);
            for (Index i = 0; i < n[b]; ++i)
                for (Index j = 0; j < n[c]; ++j) {
                    Point3 y{};
                    y[axis] = side;
                    y[b] = gb[i];
                    y[c] = gc[j];
                    rhs[i * n[c] + j] = fc.g ? fc.g(g.evaluate(y, theta), theta) : 0.0;
                }
            const Vector coef = kron.partialPivLu().solve(rhs);
            for (Index i = 0; i < n[b]; ++i)
                for (Index j = 0; j < n[c]; ++j) {
                    std::array<Index, 3> m{};
                    m[axis] = side == 0 ? 0 : n[axis] - 1;
                    m[b] = i;
                    m[c] = j;
                    const Index f = flat_index(n, m[0], m[1], m[2]);
                    u[f] = coef[i * n[c] + j];
                    fixed[static_cast<std::size_t>(f)] = true;
                }
        }
    return u;
}

struct ReferenceSolution {
    Vector u;
    SparseMatrix mass;
};

/// Direct sparse solve of (S - rho M) u = 0 with the Dirichlet rows eliminated (no source term).
inline ReferenceSolution reference_solve(const BVPProblem& pr, std::span<const double> theta)
{
    const auto& g = pr.geometry;
    const SpatialQuadrature quad = default_quadrature(g.bases);
    ReferenceSystem sys = reference_assemble(g, pr.kappa, theta, quad);
    SparseMatrix l = sys.stiffness - pr.rho * sys.mass;
    std::vector<bool> fixed;
    const Vector ud = reference_lift(pr, theta, fixed);
    std::vector<Index> free;
    std::vector<Index> pos(fixed.size(), -1);
    for (std::size_t i = 0; i < fixed.size(); ++i)
        if (!fixed[i]) {
            pos[i] = static_cast<Index>(free.size());
            free.push_back(static_cast<Index>(i));
        }
    const Vector r = -(l * ud);
    std::vector<Eigen::Triplet<double>> t;
    for (Index c = 0; c < l.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(l, c); it; ++it) {
            const Index pr_ = pos[static_cast<std::size_t>(it.row())], pc = pos[static_cast<std::size_t>(it.col())];
            if (pr_ >= 0 && pc >= 0) t.emplace_back(pr_, pc, it.value());
        }
    SparseMatrix a(static_cast<Index>(free.size()), static_cast<Index>(free.size()));
    a.setFromTriplets(t.begin(), t.end());
    Vector b(static_cast<Index>(free.size()));
    for (std::size_t i = 0; i < free.size(); ++i) b[static_cast<Index>(i)] = r[free[i]];
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("reference_solve: factorization failed");
    const Vector x = lu.solve(b);
    ReferenceSolution out{ud, std::move(sys.mass)};
    for (std::size_t i = 0; i < free.size(); ++i) out.u[free[i]] = x[static_cast<Index>(i)];
    return out;
}

/// Spatial coefficient vector of a TT solution at theta (Lagrange interpolation over the parameters).
inline Vector solution_slice(const SolutionField& sol, std::span<const double> theta)
{
    TTTensor t = sol.u;
    for (Index k = 0; k < sol.grid.size(); ++k)
        t = tt_mode_product(t, 3 + k, sol.grid.lagrange(k, theta[static_cast<std::size_t>(k)]).transpose());
    const DenseTensor d = tt_full(t);
    return Eigen::Map<const Vector>(d.data().data(), static_cast<Index>(d.data().size()));
}

/// Spline field with spatial coefficients u (flat_index order) at y.
inline double eval_coefficients(const std::array<BSplineBasis, 3>& bases, const Vector& u, const Point3& y)
{
    const Vector b0 = bases[0].eval_all(y[0]), b1 = bases[1].eval_all(y[1]), b2 = bases[2].eval_all(y[2]);
    const std::array<Index, 3> n{b0.size(), b1.size(), b2.size()};
    double v = 0.0;
    for (Index i0 = 0; i0 < n[0]; ++i0) {
        if (b0[i0] == 0.0) continue;
        for (Index i1 = 0; i1 < n[1]; ++i1) {
            if (b1[i1] == 0.0) continue;
            double s = 0.0;
            for (Index i2 = 0; i2 < n[2]; ++i2) s += u[flat_index(n, i0, i1, i2)] * b2[i2];
            v += b0[i0] * b1[i1] * s;
        }
    }
    return v;
}

/// sqrt(e^T M e / u^T M u).
inline double mass_relative_error(const Vector& u, const Vector& ref, const SparseMatrix& m)
{
    const Vector e = u - ref;
    return std::sqrt(e.dot(m * e) / ref.dot(m * ref));
}

}  // namespace ttiga::reference
