#include "ttiga/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "ttiga/qtt.hpp"

namespace ttiga {

namespace {

std::vector<Vector> point_factors(const std::array<BSplineBasis, 3>& bases, const ParamGrid& grid, const Point3& y,
                                  std::span<const double> theta, int deriv_axis)
{
    if (static_cast<Index>(theta.size()) != grid.size())
        throw std::invalid_argument("geometry: expected " + std::to_string(grid.size()) + " parameters");
    std::vector<Vector> f;
    for (int k = 0; k < 3; ++k)
        f.push_back(k == deriv_axis ? bases[k].eval_all_deriv(y[k]) : bases[k].eval_all(y[k]));
    for (Index k = 0; k < grid.size(); ++k) f.push_back(grid.lagrange(k, theta[static_cast<std::size_t>(k)]));
    return f;
}

TTTensor hadamard_round(const TTTensor& a, const TTTensor& b, double eps) { return tt_round(tt_hadamard(a, b), eps); }

TTTensor spatial_apply(TTTensor t, const std::array<Matrix, 3>& m)
{
    for (Index k = 0; k < 3; ++k) t = tt_mode_product(t, k, m[static_cast<std::size_t>(k)]);
    return t;
}

std::array<std::array<Matrix, 2>, 3> quad_collocation(const std::array<BSplineBasis, 3>& bases, const SpatialQuadrature& quad)
{
    std::array<std::array<Matrix, 2>, 3> c;
    for (int k = 0; k < 3; ++k)
        for (int d = 0; d < 2; ++d) c[k][d] = bases[k].collocation_matrix(quad[k].points, d);
    return c;
}

std::array<std::array<TTTensor, 3>, 3> jacobian_entries(const GeometryMap& geom, const SpatialQuadrature& quad, double eps)
{
    const auto c = quad_collocation(geom.bases, quad);
    std::array<std::array<TTTensor, 3>, 3> j;
    for (int s = 0; s < 3; ++s)
        for (int t = 0; t < 3; ++t) {
            std::array<Matrix, 3> m;
            for (int k = 0; k < 3; ++k) m[k] = c[k][k == t ? 1 : 0];
            j[s][t] = tt_round(spatial_apply(geom.control[s], m), eps);
        }
    return j;
}

TTTensor determinant(const std::array<std::array<TTTensor, 3>, 3>& j, double eps)
{
    static constexpr int perms[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
    TTTensor det;
    for (int p = 0; p < 6; ++p) {
        TTTensor term = hadamard_round(hadamard_round(j[0][perms[p][0]], j[1][perms[p][1]], eps), j[2][perms[p][2]], eps);
        if (p >= 3) term = tt_scale(term, -1.0);
        det = p == 0 ? term : tt_round(tt_add(det, term), eps);
    }
    return det;
}

// Sign check on random entries; flips det when it is negative everywhere.
double orient(TTTensor& det, Index samples, std::uint64_t seed, bool& reversed)
{
    std::mt19937_64 rng(seed);
    const auto shape = det.shape();
    std::vector<Index> idx(shape.size());
    double lo = INFINITY, hi = -INFINITY;
    for (Index t = 0; t < samples; ++t) {
        for (std::size_t k = 0; k < shape.size(); ++k) idx[k] = std::uniform_int_distribution<Index>(0, shape[k] - 1)(rng);
        const double v = det.entry(idx);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    reversed = hi < 0;
    if (reversed) {
        det = tt_scale(det, -1.0);
        std::swap(lo, hi);
        lo = -lo;
    }
    if (!(lo > 0)) throw std::runtime_error("degenerate geometry: det D_y G changes sign or vanishes on sampled points");
    return lo;
}

}  // namespace

Point3 GeometryMap::evaluate(const Point3& y, std::span<const double> theta) const
{
    const TTTensor f = TTTensor::rank_one(point_factors(bases, grid, y, theta, -1));
    return {tt_dot(control[0], f), tt_dot(control[1], f), tt_dot(control[2], f)};
}

Eigen::Matrix3d GeometryMap::jacobian(const Point3& y, std::span<const double> theta) const
{
    Eigen::Matrix3d j;
    for (int t = 0; t < 3; ++t) {
        const TTTensor f = TTTensor::rank_one(point_factors(bases, grid, y, theta, t));
        for (int s = 0; s < 3; ++s) j(s, t) = tt_dot(control[s], f);
    }
    return j;
}

GeometryMap GeometryMap::resampled(const ParamGrid& fine) const
{
    if (fine.size() != grid.size()) throw std::invalid_argument("GeometryMap::resampled: parameter count mismatch");
    GeometryMap g = *this;
    g.grid = fine;
    for (Index k = 0; k < grid.size(); ++k) {
        const auto& ax = fine.axis(k);
        if (std::abs(ax.lo - grid.axis(k).lo) > 1e-14 || std::abs(ax.hi - grid.axis(k).hi) > 1e-14)
            throw std::invalid_argument("GeometryMap::resampled: parameter box mismatch");
        Matrix l(ax.nodes.size(), grid.axis(k).nodes.size());
        for (Index i = 0; i < ax.nodes.size(); ++i) l.row(i) = grid.lagrange(k, ax.nodes[i]).transpose();
        for (auto& c : g.control) c = tt_mode_product(c, 3 + k, l);
    }
    return g;
}

GeometryMap fit_geometry(const ParametricMap& map, const std::array<BSplineBasis, 3>& bases, const ParamGrid& grid,
                         const GeometryOptions& opts)
{
    if (!map.eval) throw std::invalid_argument("fit_geometry: missing map");
    if (map.num_params != grid.size())
        throw std::invalid_argument("fit_geometry: map has " + std::to_string(map.num_params) + " parameters, grid has " +
                                    std::to_string(grid.size()));
    GeometryMap g;
    g.bases = bases;
    g.grid = grid;
    std::array<Vector, 3> gv;
    std::array<Eigen::PartialPivLU<Matrix>, 3> inv;
    std::vector<Index> shape;
    for (int k = 0; k < 3; ++k) {
        gv[k] = bases[k].greville();
        const Matrix b = bases[k].collocation_matrix(gv[k]);
        inv[k] = b.partialPivLu();
        // Greville collocation is nonsingular; a tiny pivot means a broken basis.
        if (!(inv[k].rcond() > 1e-14)) throw std::logic_error("fit_geometry: singular Greville collocation matrix");
        shape.push_back(bases[k].size());
    }
    for (Index n : grid.shape()) shape.push_back(n);

    CrossOptions co;
    co.tol = opts.cross_tol;
    co.max_rank = opts.max_rank;
    co.seed = opts.seed;
    std::array<Matrix, 3> binv;
    for (int k = 0; k < 3; ++k) binv[k] = inv[k].solve(Matrix::Identity(bases[k].size(), bases[k].size()));
    for (int s = 0; s < 3; ++s) {
        BlackBoxTensor f{shape, [&, s](const IndexMatrix& idx) {
                             Vector v(idx.rows());
                             std::vector<double> th(static_cast<std::size_t>(grid.size()));
                             for (Index r = 0; r < idx.rows(); ++r) {
                                 const Point3 y{gv[0][idx(r, 0)], gv[1][idx(r, 1)], gv[2][idx(r, 2)]};
                                 for (Index k = 0; k < grid.size(); ++k)
                                     th[static_cast<std::size_t>(k)] = grid.axis(k).nodes[idx(r, 3 + k)];
                                 v[r] = map.eval(y, th)[static_cast<std::size_t>(s)];
                             }
                             return v;
                         }};
        CrossReport rep;
        TTTensor gs = cross_interpolate(f, co, &rep);
        g.fit_error = std::max(g.fit_error, rep.error);
        g.control[s] = tt_round(spatial_apply(gs, binv), 1e-13);
    }
    return g;
}

SpatialQuadrature default_quadrature(const std::array<BSplineBasis, 3>& bases)
{
    return {bases[0].quadrature(), bases[1].quadrature(), bases[2].quadrature()};
}

int metric_slot(int a, int b)
{
    if (a < 0 || a > 2 || b < 0 || b > 2) throw std::out_of_range("metric_slot: index out of range");
    if (a > b) std::swap(a, b);
    static constexpr int slot[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return slot[a][b];
}

const TTTensor& JacobianBundle::k(int a, int b) const { return K[static_cast<std::size_t>(metric_slot(a, b))]; }

TTTensor jacobian_weight(const GeometryMap& geom, const SpatialQuadrature& quad, const GeometryOptions& opts)
{
    TTTensor det = determinant(jacobian_entries(geom, quad, opts.eps_geom), opts.eps_geom);
    bool reversed = false;
    orient(det, opts.positivity_samples, opts.seed, reversed);
    return det;
}

JacobianBundle jacobians(const GeometryMap& geom, const SpatialQuadrature& quad, const GeometryOptions& opts)
{
    const double eps = opts.eps_geom;
    JacobianBundle jb;
    jb.quad = quad;
    jb.J = jacobian_entries(geom, quad, eps);
    jb.o = determinant(jb.J, eps);
    jb.min_sampled_o = orient(jb.o, opts.positivity_samples, opts.seed, jb.orientation_reversed);

    try {
        if (opts.qtt_reciprocal) {
            const auto f = QttFactorization::primes(jb.o.shape());
            const TTTensor oq = qtt_reshape(jb.o, f, 0.1 * opts.reciprocal_eps);
            jb.inv_o = tt_round(qtt_unreshape(tt_reciprocal(oq, opts.reciprocal_eps, &jb.reciprocal_report), f), 0.1 * opts.reciprocal_eps);
        } else {
            jb.inv_o = tt_reciprocal(jb.o, opts.reciprocal_eps, &jb.reciprocal_report);
        }
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("degenerate geometry: ") + e.what());
    }

    // adj(J)_{a c} is the cofactor of J at (c, a).
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c) {
            const int c1 = (c + 1) % 3, c2 = (c + 2) % 3, a1 = (a + 1) % 3, a2 = (a + 2) % 3;
            jb.adj[a][c] = tt_round(tt_axpy(tt_hadamard(jb.J[c1][a1], jb.J[c2][a2]), -1.0, tt_hadamard(jb.J[c1][a2], jb.J[c2][a1])), eps);
        }
    // K = J^{-1} J^{-T} |det J| = adj adj^T / o.
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            TTTensor sum;
            for (int c = 0; c < 3; ++c) {
                TTTensor term = hadamard_round(jb.adj[a][c], jb.adj[b][c], eps);
                sum = c == 0 ? term : tt_round(tt_add(sum, term), eps);
            }
            jb.K[static_cast<std::size_t>(metric_slot(a, b))] = hadamard_round(sum, jb.inv_o, eps);
        }
    return jb;
}

std::array<TTTensor, 3> physical_coordinates(const GeometryMap& geom, const SpatialQuadrature& quad, double eps)
{
    const auto c = quad_collocation(geom.bases, quad);
    std::array<TTTensor, 3> x;
    for (int s = 0; s < 3; ++s) x[s] = tt_round(spatial_apply(geom.control[s], {c[0][0], c[1][0], c[2][0]}), eps);
    return x;
}

}  // namespace ttiga
