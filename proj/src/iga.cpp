#include "ttiga/iga.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ttiga/qtt.hpp"
#include "ttiga/tt_io.hpp"

namespace ttiga {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<Index> spatial_shape(const std::array<BSplineBasis, 3>& bases)
{
    return {bases[0].size(), bases[1].size(), bases[2].size()};
}

std::vector<Index> full_shape(const std::array<BSplineBasis, 3>& bases, const ParamGrid& grid)
{
    auto s = spatial_shape(bases);
    for (Index n : grid.shape()) s.push_back(n);
    return s;
}

// First nonzero basis index at each quadrature point.
std::vector<Index> support_start(const BSplineBasis& b, const Vector& pts)
{
    std::vector<Index> lo(static_cast<std::size_t>(pts.size()));
    for (Index j = 0; j < pts.size(); ++j) lo[static_cast<std::size_t>(j)] = b.find_span(pts[j]) - b.degree();
    return lo;
}

// Spatial operator core: sum_j w_j bm(j, m) bk(j, k) c(a, j, b).
Core4 spatial_core(const Core3& c, const QuadratureGrid& q, const BSplineBasis& basis, const Matrix& bm, const Matrix& bk)
{
    const Index r0 = c.left_rank(), r1 = c.right_rank(), nq = c.mode_size(), n = basis.size();
    if (nq != q.size()) throw std::invalid_argument("assembly: coefficient grid does not match the quadrature");
    const int p = basis.degree();
    const auto lo = support_start(basis, q.points);
    Core4 out(r0, n, n, r1);
    double* o = out.values().data();
    const double* cv = c.values().data();
    for (Index j = 0; j < nq; ++j) {
        const Index l = lo[static_cast<std::size_t>(j)];
        for (Index m = l; m <= l + p; ++m)
            for (Index k = l; k <= l + p; ++k) {
                const double f = q.weights[j] * bm(j, m) * bk(j, k);
                if (f == 0.0) continue;
                for (Index b = 0; b < r1; ++b) {
                    double* dst = o + r0 * (m + n * (k + n * b));
                    const double* src = cv + r0 * (j + nq * b);
                    for (Index a = 0; a < r0; ++a) dst[a] += f * src[a];
                }
            }
    }
    return out;
}

// Parameter core: c(a, i, b) on the diagonal i = q.
Core4 parameter_core(const Core3& c)
{
    const Index r0 = c.left_rank(), r1 = c.right_rank(), n = c.mode_size();
    Core4 out(r0, n, n, r1);
    for (Index b = 0; b < r1; ++b)
        for (Index i = 0; i < n; ++i)
            for (Index a = 0; a < r0; ++a) out(a, i, i, b) = c(a, i, b);
    return out;
}

// Weighted bilinear form with derivative orders per axis for the row and column functions.
TTMatrix weighted_form(const TTTensor& coeff, const SpatialQuadrature& quad, const std::array<BSplineBasis, 3>& bases,
                       const std::array<int, 3>& drow, const std::array<int, 3>& dcol)
{
    std::vector<Core4> cores;
    for (int k = 0; k < 3; ++k) {
        const Matrix bm = bases[k].collocation_matrix(quad[k].points, drow[k]);
        const Matrix bk = drow[k] == dcol[k] ? bm : bases[k].collocation_matrix(quad[k].points, dcol[k]);
        cores.push_back(spatial_core(coeff.core(k), quad[k], bases[k], bm, bk));
    }
    for (Index k = 3; k < coeff.order(); ++k) cores.push_back(parameter_core(coeff.core(k)));
    return TTMatrix(std::move(cores));
}

TTTensor spatial_apply(TTTensor t, const std::array<Matrix, 3>& m)
{
    for (Index k = 0; k < 3; ++k) t = tt_mode_product(t, k, m[static_cast<std::size_t>(k)]);
    return t;
}

std::array<Matrix, 3> greville_inverses(const std::array<BSplineBasis, 3>& bases)
{
    std::array<Matrix, 3> inv;
    for (int k = 0; k < 3; ++k) {
        const Matrix b = bases[k].collocation_matrix(bases[k].greville());
        inv[k] = b.partialPivLu().solve(Matrix::Identity(b.rows(), b.cols()));
    }
    return inv;
}

CrossOptions cross_options(const AssemblyOptions& opts)
{
    CrossOptions co;
    co.tol = opts.cross_tol;
    co.seed = opts.geometry.seed + 101;
    if (opts.max_rank > 0) co.max_rank = opts.max_rank;
    return co;
}

// Cross over (m_0, m_1, m_2, l...) where spatial coordinates come from TT coordinate tensors.
TTTensor cross_physical(const std::array<TTTensor, 3>& x, const ParamGrid& grid, const ScalarFn& f, const CrossOptions& co)
{
    BlackBoxTensor bb{x[0].shape(), [&](const IndexMatrix& idx) {
                          Vector v(idx.rows());
                          std::vector<double> th(static_cast<std::size_t>(grid.size()));
                          for (Index r = 0; r < idx.rows(); ++r) {
                              std::span<const Index> ix(idx.row(r).data(), static_cast<std::size_t>(idx.cols()));
                              const Point3 p{x[0].entry(ix), x[1].entry(ix), x[2].entry(ix)};
                              for (Index k = 0; k < grid.size(); ++k)
                                  th[static_cast<std::size_t>(k)] = grid.axis(k).nodes[idx(r, 3 + k)];
                              v[r] = f(p, th);
                          }
                          return v;
                      }};
    return cross_interpolate(bb, co);
}

std::vector<Vector> point_factors(const std::array<BSplineBasis, 3>& bases, const ParamGrid& grid, const Point3& y,
                                  std::span<const double> theta, int deriv_axis)
{
    if (static_cast<Index>(theta.size()) != grid.size())
        throw std::invalid_argument("evaluate: expected " + std::to_string(grid.size()) + " parameters");
    std::vector<Vector> f;
    for (int k = 0; k < 3; ++k) {
        if (!(y[k] >= 0.0 && y[k] <= 1.0)) throw std::domain_error("evaluate: reference point outside [0,1]^3");
        f.push_back(k == deriv_axis ? bases[k].eval_all_deriv(y[k]) : bases[k].eval_all(y[k]));
    }
    for (Index k = 0; k < grid.size(); ++k) f.push_back(grid.lagrange(k, theta[static_cast<std::size_t>(k)]));
    return f;
}

Vector unit(Index n, Index i)
{
    Vector e = Vector::Zero(n);
    e[i] = 1.0;
    return e;
}

}  // namespace

// ------------------------------------------------------------------ problem

bool BVPProblem::has_dirichlet() const
{
    return std::any_of(faces.begin(), faces.end(), [](const FaceCondition& f) { return f.kind == BoundaryKind::dirichlet; });
}

void BVPProblem::validate() const
{
    for (int f = 0; f < 6; ++f)
        if (faces[static_cast<std::size_t>(f)].kind == BoundaryKind::neumann && faces[static_cast<std::size_t>(f)].g)
            throw std::invalid_argument("BVPProblem: Dirichlet data given on face " + std::to_string(f) + " which is tagged Neumann");
    if (rho == 0.0 && !has_dirichlet()) throw std::invalid_argument("BVPProblem: pure Neumann problem with rho = 0 is singular");
    for (const auto& b : geometry.bases)
        if (b.size() == 0) throw std::invalid_argument("BVPProblem: geometry is not fitted");
}

// ----------------------------------------------------------------- assembly

TTMatrix assemble_mass(const JacobianBundle& bundle, const std::array<BSplineBasis, 3>& bases, const TTTensor* coeff, double eps)
{
    TTTensor w = bundle.o;
    if (coeff) {
        if (coeff->shape() != bundle.o.shape()) throw std::invalid_argument("assemble_mass: coefficient grid mismatch");
        w = tt_round(tt_hadamard(w, *coeff), eps > 0 ? 0.1 * eps : 1e-14);
    }
    TTMatrix m = weighted_form(w, bundle.quad, bases, {0, 0, 0}, {0, 0, 0});
    return eps > 0 ? tt_round(m, eps) : m;
}

TTMatrix assemble_stiffness(const JacobianBundle& bundle, const std::array<BSplineBasis, 3>& bases, const TTTensor& kappa, double eps)
{
    if (kappa.shape() != bundle.o.shape()) throw std::invalid_argument("assemble_stiffness: kappa grid mismatch");
    const double ceps = eps > 0 ? 0.1 * eps : 1e-14;
    const bool unit_kappa = kappa.max_rank() == 1 && tt_norm(tt_axpy(kappa, -1.0, TTTensor::constant(kappa.shape(), 1.0))) == 0.0;
    TTMatrix s;
    bool first = true;
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            const TTTensor c = unit_kappa ? bundle.k(a, b) : tt_round(tt_hadamard(bundle.k(a, b), kappa), ceps);
            std::array<int, 3> da{0, 0, 0}, db{0, 0, 0};
            da[a] = 1;
            db[b] = 1;
            TTMatrix term = weighted_form(c, bundle.quad, bases, da, db);
            if (a != b) term = tt_add(term, weighted_form(c, bundle.quad, bases, db, da));
            s = first ? term : tt_add(s, term);
            if (eps > 0) s = tt_round(s, eps);
            first = false;
        }
    return s;
}

TTTensor kappa_tensor(const BVPProblem& problem, const SpatialQuadrature& quad, const AssemblyOptions& opts)
{
    const ParamGrid& grid = problem.geometry.grid;
    std::vector<Index> shape{quad[0].size(), quad[1].size(), quad[2].size()};
    for (Index n : grid.shape()) shape.push_back(n);
    if (!problem.kappa) return TTTensor::constant(shape, 1.0);
    BlackBoxTensor bb{shape, [&](const IndexMatrix& idx) {
                          Vector v(idx.rows());
                          std::vector<double> th(static_cast<std::size_t>(grid.size()));
                          for (Index r = 0; r < idx.rows(); ++r) {
                              const Point3 y{quad[0].points[idx(r, 0)], quad[1].points[idx(r, 1)], quad[2].points[idx(r, 2)]};
                              for (Index k = 0; k < grid.size(); ++k)
                                  th[static_cast<std::size_t>(k)] = grid.axis(k).nodes[idx(r, 3 + k)];
                              v[r] = problem.kappa(y, th);
                          }
                          return v;
                      }};
    CrossReport rep;
    TTTensor k = cross_interpolate(bb, cross_options(opts), &rep);
    return tt_round(k, 0.1 * opts.cross_tol);
}

TTTensor interpolate_source(const BVPProblem& problem, const AssemblyOptions& opts)
{
    const GeometryMap& g = problem.geometry;
    if (!problem.source) return TTTensor::zeros(full_shape(g.bases, g.grid));
    std::array<Matrix, 3> col;
    for (int k = 0; k < 3; ++k) col[k] = g.bases[k].collocation_matrix(g.bases[k].greville());
    std::array<TTTensor, 3> x;
    for (int s = 0; s < 3; ++s) x[s] = spatial_apply(g.control[s], col);
    const TTTensor vals = cross_physical(x, g.grid, problem.source, cross_options(opts));
    return tt_round(spatial_apply(vals, greville_inverses(g.bases)), 0.1 * opts.cross_tol);
}

TTTensor assemble_rhs(const BVPProblem& problem, const TTMatrix& mass, const AssemblyOptions& opts)
{
    if (!problem.source) return TTTensor::zeros(mass.row_shape());
    return tt_round(ttm_apply(mass, interpolate_source(problem, opts)), opts.op_eps);
}

TTTensor dirichlet_lift(const BVPProblem& problem, const AssemblyOptions& opts)
{
    const GeometryMap& g = problem.geometry;
    const auto shape = full_shape(g.bases, g.grid);
    TTTensor lift = TTTensor::zeros(shape);
    const auto inv = greville_inverses(g.bases);
    std::array<Matrix, 3> gcol;
    for (int k = 0; k < 3; ++k) gcol[k] = g.bases[k].collocation_matrix(g.bases[k].greville());
    for (int axis = 0; axis < 3; ++axis)
        for (int side = 0; side < 2; ++side) {
            const FaceCondition& fc = problem.faces[static_cast<std::size_t>(face_index(axis, side))];
            if (fc.kind != BoundaryKind::dirichlet) continue;
            const Index n = g.bases[axis].size();
            const Vector e = unit(n, side == 0 ? 0 : n - 1);
            TTTensor face;
            if (fc.g) {
                // Coordinates on the face trace x Greville x parameter grid (mode `axis` has size 1).
                std::array<Matrix, 3> m = gcol;
                m[axis] = g.bases[axis].eval_all(side == 0 ? 0.0 : 1.0).transpose();
                std::array<TTTensor, 3> x;
                for (int s = 0; s < 3; ++s) x[s] = spatial_apply(g.control[s], m);
                face = cross_physical(x, g.grid, fc.g, cross_options(opts));
                std::array<Matrix, 3> im = inv;
                im[axis] = Matrix::Ones(1, 1);
                face = spatial_apply(face, im);
            } else {
                auto fs = shape;
                fs[static_cast<std::size_t>(axis)] = 1;
                face = TTTensor::zeros(fs);
            }
            // Overwrite the face: lift += E (face - R lift).
            const TTTensor current = tt_mode_product(lift, axis, e.transpose());
            const TTTensor delta = tt_round(tt_axpy(face, -1.0, current), 1e-14);
            lift = tt_round(tt_add(lift, tt_mode_product(delta, axis, e)), 0.1 * opts.cross_tol);
        }
    return lift;
}

BoundarySystem apply_dirichlet(const TTMatrix& l, const TTTensor& rhs, const BVPProblem& problem, const AssemblyOptions& opts)
{
    problem.validate();
    const GeometryMap& g = problem.geometry;
    const auto shape = full_shape(g.bases, g.grid);
    if (l.row_shape() != shape || l.col_shape() != shape || rhs.shape() != shape)
        throw std::invalid_argument("apply_dirichlet: operator or rhs shape does not match the discretization");

    BoundarySystem sys;
    std::vector<Vector> mask_factors;
    for (int k = 0; k < 3; ++k) {
        const Index n = g.bases[k].size();
        Vector m = Vector::Ones(n);
        if (problem.faces[static_cast<std::size_t>(face_index(k, 0))].kind == BoundaryKind::dirichlet) m[0] = 0.0;
        if (problem.faces[static_cast<std::size_t>(face_index(k, 1))].kind == BoundaryKind::dirichlet) m[n - 1] = 0.0;
        sys.op.interior[static_cast<std::size_t>(k)] = m;
        mask_factors.push_back(m);
    }
    for (Index k = 3; k < static_cast<Index>(shape.size()); ++k) mask_factors.push_back(Vector::Ones(shape[static_cast<std::size_t>(k)]));
    const TTTensor mask = TTTensor::rank_one(mask_factors);
    const TTMatrix pi = TTMatrix::diagonal(mask);

    // P_I L P_I by scaling rows and columns of the spatial cores.
    TTMatrix masked = l;
    for (int k = 0; k < 3; ++k) {
        Core4& c = masked.core(k);
        const Vector& m = mask_factors[static_cast<std::size_t>(k)];
        for (Index b = 0; b < c.right_rank(); ++b)
            for (Index j = 0; j < c.col_size(); ++j)
                for (Index i = 0; i < c.row_size(); ++i)
                    if (m[i] == 0.0 || m[j] == 0.0)
                        for (Index a = 0; a < c.left_rank(); ++a) c(a, i, j, b) = 0.0;
    }
    double interior_count = 1.0;
    for (const auto& m : mask_factors) interior_count *= m.sum();
    double s = interior_count > 0 ? std::abs(tt_sum(masked.diagonal_part())) / interior_count : 1.0;
    if (!(s > 0) || !std::isfinite(s)) s = 1.0;
    sys.op.boundary_scale = s;
    const TTMatrix complement = tt_add(TTMatrix::identity(shape), tt_scale(pi, -1.0));
    sys.op.op = tt_add(masked, tt_scale(complement, s));

    sys.lift = dirichlet_lift(problem, opts);
    TTTensor r = rhs;
    if (tt_norm(sys.lift) > 0) r = tt_axpy(r, -1.0, ttm_apply(l, sys.lift));
    sys.rhs = tt_round(ttm_apply(pi, r), opts.op_eps);
    return sys;
}

// ------------------------------------------------------------------- solve

double SolutionField::evaluate(const Point3& y, std::span<const double> theta) const
{
    return tt_dot(u, TTTensor::rank_one(point_factors(bases, grid, y, theta, -1)));
}

std::array<double, 3> SolutionField::reference_gradient(const Point3& y, std::span<const double> theta) const
{
    std::array<double, 3> gr{};
    for (int t = 0; t < 3; ++t) gr[t] = tt_dot(u, TTTensor::rank_one(point_factors(bases, grid, y, theta, t)));
    return gr;
}

std::vector<double> eval_solution(const SolutionField& sol, const std::vector<EvalPoint>& points)
{
    std::vector<double> v;
    v.reserve(points.size());
    for (const auto& p : points) v.push_back(sol.evaluate(p.y, p.theta));
    return v;
}

BVPSolution solve_bvp(const BVPProblem& problem, const BVPOptions& opts)
{
    problem.validate();
    opts.solver.validate();
    AssemblyOptions aopts = opts.assembly;
    if (!(aopts.op_eps > 0)) aopts.op_eps = 0.1 * opts.solver.eps;
    const GeometryMap& g = problem.geometry;

    BVPSolution out;
    auto t0 = Clock::now();
    const JacobianBundle bundle = jacobians(g, default_quadrature(g.bases), aopts.geometry);
    out.timings.geometry = seconds_since(t0);

    t0 = Clock::now();
    const TTTensor kappa = kappa_tensor(problem, bundle.quad, aopts);
    out.mass = assemble_mass(bundle, g.bases, nullptr, aopts.op_eps);
    out.stiffness = assemble_stiffness(bundle, g.bases, kappa, aopts.op_eps);
    TTMatrix l = out.stiffness;
    if (problem.rho != 0.0) l = tt_round(tt_add(l, tt_scale(out.mass, -problem.rho)), aopts.op_eps);
    // div(kappa grad u) + rho u = f  <=>  (S - rho M) u = -M f_hat.
    const TTTensor rhs = tt_scale(assemble_rhs(problem, out.mass, aopts), -1.0);
    BoundarySystem sys = apply_dirichlet(l, rhs, problem, aopts);
    out.timings.assembly = seconds_since(t0);

    t0 = Clock::now();
    TTTensor ui;
    if (opts.qtt_solve) {
        const auto f = QttFactorization::primes(sys.rhs.shape());
        const TTMatrix aq = qtt_reshape(sys.op.op, f, 0.1 * aopts.op_eps);
        const TTTensor bq = qtt_reshape(sys.rhs, f, 0.1 * aopts.op_eps);
        SolveResult res = amen_solve(aq, bq, opts.solver);
        ui = qtt_unreshape(res.x, f);
        out.report = std::move(res.report);
    } else {
        SolveResult res = amen_solve(sys.op.op, sys.rhs, opts.solver);
        ui = std::move(res.x);
        out.report = std::move(res.report);
    }
    out.timings.solve = seconds_since(t0);

    out.field.u = tt_round(tt_add(ui, sys.lift), 0.01 * opts.solver.eps);
    out.field.bases = g.bases;
    out.field.grid = g.grid;
    out.system = std::move(sys.op);
    return out;
}

// ------------------------------------------------------------------ errors

ErrorNorms error_norms(const SolutionField& sol, const GeometryMap& geom, const ScalarFn& reference, const ErrorOptions& opts)
{
    if (!reference) throw std::invalid_argument("error_norms: missing reference");
    const ParamGrid& grid = sol.grid;
    std::vector<std::pair<double, double>> box;
    std::vector<Index> counts;
    for (Index k = 0; k < grid.size(); ++k) {
        box.emplace_back(grid.axis(k).lo, grid.axis(k).hi);
        counts.push_back(opts.param_refine * grid.axis(k).nodes.size() + opts.param_extra);
    }
    const ParamGrid fine(box, counts);
    SpatialQuadrature quad;
    for (int k = 0; k < 3; ++k) quad[k] = sol.bases[k].quadrature(sol.bases[k].degree() + 2);

    const GeometryMap gf = geom.resampled(fine);
    GeometryOptions go;
    go.positivity_samples = 1000;
    const TTTensor o = jacobian_weight(gf, quad, go);
    const auto x = physical_coordinates(gf, quad, 1e-13);

    TTTensor uh = sol.u;
    for (int k = 0; k < 3; ++k) uh = tt_mode_product(uh, k, sol.bases[k].collocation_matrix(quad[k].points));
    for (Index k = 0; k < grid.size(); ++k) {
        Matrix l(counts[static_cast<std::size_t>(k)], grid.axis(k).nodes.size());
        for (Index i = 0; i < l.rows(); ++i) l.row(i) = grid.lagrange(k, fine.axis(k).nodes[i]).transpose();
        uh = tt_mode_product(uh, 3 + k, l);
    }
    CrossOptions co;
    co.tol = opts.cross_tol;
    co.seed = opts.seed;
    const TTTensor uref = cross_physical(x, fine, reference, co);

    std::vector<Vector> wf{quad[0].weights, quad[1].weights, quad[2].weights};
    for (Index k = 0; k < fine.size(); ++k) wf.push_back(fine.axis(k).quad_weights);
    const TTTensor w = tt_hadamard(TTTensor::rank_one(wf), o);
    const TTTensor diff = tt_round(tt_axpy(uh, -1.0, uref), 1e-10);

    ErrorNorms e;
    const double den = tt_dot3(uref, w, uref);
    const double num = std::max(0.0, tt_dot3(diff, w, diff));
    e.l2_rel = den > 0 ? std::sqrt(num / den) : std::sqrt(num);

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit01(0.0, 1.0);
    std::vector<double> th(static_cast<std::size_t>(grid.size()));
    for (Index t = 0; t < opts.samples; ++t) {
        const Point3 y{unit01(rng), unit01(rng), unit01(rng)};
        for (Index k = 0; k < grid.size(); ++k)
            th[static_cast<std::size_t>(k)] = grid.axis(k).lo + (grid.axis(k).hi - grid.axis(k).lo) * unit01(rng);
        const double v = sol.evaluate(y, th);
        e.max_abs = std::max(e.max_abs, std::abs(v - reference(geom.evaluate(y, th), th)));
    }
    return e;
}

// ----------------------------------------------------------- serialization

namespace {

nlohmann::json bases_json(const std::array<BSplineBasis, 3>& bases, const ParamGrid& grid)
{
    nlohmann::json j;
    for (const auto& b : bases) j["bases"].push_back({{"degree", b.degree()}, {"knots", b.knot_vector().knots()}});
    j["parameters"] = nlohmann::json::array();
    for (Index k = 0; k < grid.size(); ++k)
        j["parameters"].push_back({{"lo", grid.axis(k).lo}, {"hi", grid.axis(k).hi}, {"nodes", grid.axis(k).nodes.size()}});
    return j;
}

void write_json(const std::string& path, const nlohmann::json& j)
{
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << '\n';
}

}  // namespace

void save_solution(const std::string& stem, const SolutionField& sol)
{
    save_tt(stem + ".tt", sol.u);
    nlohmann::json j = bases_json(sol.bases, sol.grid);
    j["kind"] = "solution";
    write_json(stem + ".json", j);
}

SolutionField load_solution(const std::string& stem)
{
    std::ifstream f(stem + ".json");
    if (!f) throw std::runtime_error("cannot read " + stem + ".json");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(stem + ".json: " + e.what());
    }
    SolutionField sol;
    const auto& jb = j.at("bases");
    if (jb.size() != 3) throw std::runtime_error(stem + ".json: expected three bases");
    for (int k = 0; k < 3; ++k)
        sol.bases[k] = BSplineBasis(KnotVector(jb[k].at("knots").get<std::vector<double>>(), jb[k].at("degree").get<int>()));
    std::vector<std::pair<double, double>> box;
    std::vector<Index> counts;
    for (const auto& p : j.at("parameters")) {
        box.emplace_back(p.at("lo").get<double>(), p.at("hi").get<double>());
        counts.push_back(p.at("nodes").get<Index>());
    }
    sol.grid = ParamGrid(box, counts);
    auto obj = load_tt(stem + ".tt");
    if (!std::holds_alternative<TTTensor>(obj)) throw std::runtime_error(stem + ".tt: expected a tensor");
    sol.u = std::get<TTTensor>(std::move(obj));
    if (sol.u.shape() != full_shape(sol.bases, sol.grid)) throw std::runtime_error(stem + ": tensor shape does not match the sidecar");
    return sol;
}

void save_operator(const std::string& stem, const DiscreteOperator& op, const std::array<BSplineBasis, 3>& bases,
                   const ParamGrid& grid, const FaceConditions& faces)
{
    save_tt(stem + ".tt", op.op);
    nlohmann::json j = bases_json(bases, grid);
    j["kind"] = "operator";
    j["boundary_scale"] = op.boundary_scale;
    static const char* names[6] = {"y1=0", "y1=1", "y2=0", "y2=1", "y3=0", "y3=1"};
    for (int f = 0; f < 6; ++f)
        j["faces"][names[f]] = faces[static_cast<std::size_t>(f)].kind == BoundaryKind::dirichlet ? "dirichlet" : "neumann";
    write_json(stem + ".json", j);
}

}  // namespace ttiga
