#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "ttiga/geometry.hpp"
#include "ttiga/test_cases.hpp"

using namespace ttiga;

namespace {

std::array<BSplineBasis, 3> cube_bases(Index n, int p) { return {make_basis(n, p), make_basis(n, p), make_basis(n, p)}; }

struct Sample {
    std::vector<Index> index;  // quadrature indices followed by parameter node indices
    Point3 y;
    std::vector<double> theta;
};

std::vector<Sample> random_samples(const JacobianBundle& b, const ParamGrid& grid, int count, unsigned seed)
{
    std::mt19937 rng(seed);
    std::vector<Sample> out;
    for (int s = 0; s < count; ++s) {
        Sample smp;
        for (int k = 0; k < 3; ++k) {
            const Index j = std::uniform_int_distribution<Index>(0, b.quad[k].size() - 1)(rng);
            smp.index.push_back(j);
            smp.y[k] = b.quad[k].points[j];
        }
        std::vector<Index> pidx;
        for (Index k = 0; k < grid.size(); ++k) pidx.push_back(std::uniform_int_distribution<Index>(0, grid.axis(k).nodes.size() - 1)(rng));
        smp.index.insert(smp.index.end(), pidx.begin(), pidx.end());
        smp.theta = grid.node(pidx);
        out.push_back(std::move(smp));
    }
    return out;
}

ParametricMap affine_map()
{
    return {1, [](const Point3& y, std::span<const double> th) {
                return Point3{2 * y[0] + 0.3 * y[1] + th[0], -0.2 * y[0] + 1.5 * y[1] + 0.1 * y[2], 0.4 * y[1] + 0.7 * y[2] - th[0]};
            }};
}

}  // namespace

TEST(Geometry, IdentityControlPointsAreGreville)
{
    const auto bases = cube_bases(7, 2);
    const ParamGrid grid({{0.0, 1.0}}, {3});
    const ParametricMap id{1, [](const Point3& y, std::span<const double>) { return y; }};
    const GeometryMap g = fit_geometry(id, bases, grid);
    for (int s = 0; s < 3; ++s) {
        const Vector gr = bases[static_cast<std::size_t>(s)].greville();
        for (Index i0 = 0; i0 < 7; ++i0)
            for (Index i1 = 0; i1 < 7; ++i1)
                for (Index i2 = 0; i2 < 7; ++i2)
                    for (Index t = 0; t < 3; ++t) {
                        const std::array<Index, 4> idx{i0, i1, i2, t};
                        const double expect = gr[idx[static_cast<std::size_t>(s)]];
                        EXPECT_NEAR(g.control[static_cast<std::size_t>(s)].entry(idx), expect, 1e-12);
                    }
    }
}

TEST(Geometry, AffineMapIsReproduced)
{
    const auto bases = cube_bases(5, 2);
    const ParamGrid grid({{-1.0, 1.0}}, {3});
    const ParametricMap m = affine_map();
    const GeometryMap g = fit_geometry(m, bases, grid);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0), t(-1.0, 1.0);
    for (int s = 0; s < 50; ++s) {
        const Point3 y{u(rng), u(rng), u(rng)};
        const std::vector<double> th{t(rng)};
        const Point3 x = g.evaluate(y, th), xe = m.eval(y, th);
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(x[k], xe[k], 1e-12);
        Eigen::Matrix3d a;
        a << 2, 0.3, 0, -0.2, 1.5, 0.1, 0, 0.4, 0.7;
        EXPECT_LE((g.jacobian(y, th) - a).cwiseAbs().maxCoeff(), 1e-11);
    }
}

TEST(Geometry, ScaledCubeHasConstantWeightAndMetric)
{
    const auto bases = cube_bases(6, 3);
    const ParamGrid grid({{0.0, 1.0}}, {2});
    const ParametricMap m{1, [](const Point3& y, std::span<const double>) { return Point3{2 * y[0], 2 * y[1], 2 * y[2]}; }};
    const GeometryMap g = fit_geometry(m, bases, grid);
    const JacobianBundle b = jacobians(g, default_quadrature(bases));
    EXPECT_FALSE(b.orientation_reversed);
    for (const auto& s : random_samples(b, grid, 40, 1)) {
        EXPECT_NEAR(b.o.entry(s.index), 8.0, 1e-9);
        EXPECT_NEAR(b.inv_o.entry(s.index), 0.125, 1e-9);
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) EXPECT_NEAR(b.k(a, c).entry(s.index), a == c ? 2.0 : 0.0, 1e-8);
    }
}

TEST(Geometry, CylinderWeightMatchesPointwiseDeterminant)
{
    const CaseDefinition c = make_case("tc1");
    const auto bases = make_case_bases(c, {10, 10, 10}, {3, 3, 3});
    const ParamGrid grid = make_case_grid(c, {4});
    const GeometryMap g = fit_geometry(c.map, bases, grid);
    EXPECT_LE(g.fit_error, 1e-10);
    const JacobianBundle b = jacobians(g, default_quadrature(bases));
    double worst = 0.0;
    for (const auto& s : random_samples(b, grid, 200, 2)) {
        const double o = b.o.entry(s.index);
        worst = std::max(worst, std::abs(o - std::abs(g.jacobian(s.y, s.theta).determinant())) / o);
    }
    EXPECT_LE(worst, 1e-8);
}

TEST(Geometry, SplineJacobianConvergesToAnalyticMap)
{
    const CaseDefinition c = make_case("tc1");
    const double h = 1e-6;
    std::vector<double> pos_err, jac_err;
    for (Index n : {10, 20, 40}) {
        const auto bases = make_case_bases(c, {n, n, n}, {3, 3, 3});
        const ParamGrid grid = make_case_grid(c, {4});
        const GeometryMap g = fit_geometry(c.map, bases, grid);
        const std::vector<double> th{grid.axis(0).nodes[3]};
        double wx = 0.0, wj = 0.0;
        for (int a = 0; a <= 10; ++a)
            for (int b = 0; b <= 10; ++b)
                for (int d = 0; d <= 10; ++d) {
                    const Point3 y{a / 10.0, b / 10.0, d / 10.0};
                    const Point3 x = g.evaluate(y, th), xe = c.map.eval(y, th);
                    for (int k = 0; k < 3; ++k) wx = std::max(wx, std::abs(x[k] - xe[k]));
                    // Central differences of the analytic map.
                    Eigen::Matrix3d fd;
                    for (int t = 0; t < 3; ++t) {
                        Point3 yp = y, ym = y;
                        yp[t] = std::min(1.0, yp[t] + h);
                        ym[t] = std::max(0.0, ym[t] - h);
                        const Point3 xp = c.map.eval(yp, th), xm = c.map.eval(ym, th);
                        for (int r = 0; r < 3; ++r) fd(r, t) = (xp[r] - xm[r]) / (yp[t] - ym[t]);
                    }
                    wj = std::max(wj, (g.jacobian(y, th) - fd).cwiseAbs().maxCoeff());
                }
        pos_err.push_back(wx);
        jac_err.push_back(wj);
    }
    // Cubic interpolation: values like h^4, derivatives like h^3.
    for (std::size_t k = 0; k + 1 < pos_err.size(); ++k) {
        EXPECT_GE(std::log2(pos_err[k] / pos_err[k + 1]), 3.5);
        EXPECT_GE(std::log2(jac_err[k] / jac_err[k + 1]), 2.5);
    }
}

TEST(Geometry, AdjugateAndMetricIdentities)
{
    const CaseDefinition c = make_case("tc1");
    const auto bases = make_case_bases(c, {8, 8, 8}, {2, 2, 2});
    const ParamGrid grid = make_case_grid(c, {3});
    const GeometryMap g = fit_geometry(c.map, bases, grid);
    const JacobianBundle b = jacobians(g, default_quadrature(bases));
    for (const auto& s : random_samples(b, grid, 100, 5)) {
        Eigen::Matrix3d j, adj, k;
        for (int r = 0; r < 3; ++r)
            for (int t = 0; t < 3; ++t) {
                j(r, t) = b.J[r][t].entry(s.index);
                adj(r, t) = b.adj[r][t].entry(s.index);
                k(r, t) = b.k(r, t).entry(s.index);
            }
        const double o = b.o.entry(s.index);
        const double det = j.determinant();
        EXPECT_LE((adj * j - det * Eigen::Matrix3d::Identity()).norm(), 1e-8 * std::abs(det));
        EXPECT_NEAR(std::abs(det), o, 1e-8 * o);
        EXPECT_NEAR(b.inv_o.entry(s.index) * o, 1.0, 1e-8);
        const Eigen::Matrix3d jinv = j.inverse();
        const Eigen::Matrix3d expect = jinv * jinv.transpose() * o;
        EXPECT_LE((k - expect).norm(), 1e-7 * expect.norm());
        EXPECT_GT(k.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff(), 0.0);
        EXPECT_LE((j - g.jacobian(s.y, s.theta)).norm(), 1e-8 * j.norm());
    }
}

TEST(Geometry, ReflectedMapIsReoriented)
{
    const auto bases = cube_bases(5, 2);
    const ParamGrid grid({{0.0, 1.0}}, {2});
    const ParametricMap m{1, [](const Point3& y, std::span<const double> th) {
                              return Point3{-y[0] * (1 + 0.5 * th[0]), y[1], y[2]};
                          }};
    const JacobianBundle b = jacobians(fit_geometry(m, bases, grid), default_quadrature(bases));
    EXPECT_TRUE(b.orientation_reversed);
    EXPECT_GT(b.min_sampled_o, 0.0);
    for (const auto& s : random_samples(b, grid, 20, 9)) EXPECT_NEAR(b.o.entry(s.index), 1 + 0.5 * s.theta[0], 1e-9);
}

TEST(Geometry, FoldedMapIsRejected)
{
    const auto bases = cube_bases(5, 2);
    const ParamGrid grid({{-1.0, 1.0}}, {3});
    // det changes sign with theta.
    const ParametricMap m{1, [](const Point3& y, std::span<const double> th) {
                              return Point3{y[0] * (th[0] + 0.1), y[1], y[2]};
                          }};
    const GeometryMap g = fit_geometry(m, bases, grid);
    EXPECT_THROW(jacobians(g, default_quadrature(bases)), std::runtime_error);
}

TEST(Geometry, AffineParameterDependenceHasLowRank)
{
    const CaseDefinition c = make_case("tc2", 3);
    const auto bases = make_case_bases(c, {8, 8, 4}, {2, 2, 2});
    const ParamGrid grid = make_case_grid(c, {3, 3, 3});
    const GeometryMap g = fit_geometry(c.map, bases, grid);
    for (const auto& ctl : g.control) {
        const auto r = ctl.ranks();
        // Affine in theta: the split before parameter j separates {1, theta_j..theta_np}.
        for (std::size_t k = 3; k + 1 < r.size(); ++k) EXPECT_LE(r[k], static_cast<Index>(r.size() - k));
    }
}

TEST(Geometry, ResampledGridInterpolatesPolynomialTheta)
{
    const auto bases = cube_bases(5, 2);
    const ParamGrid grid({{-1.0, 1.0}}, {3});
    const ParametricMap m{1, [](const Point3& y, std::span<const double> th) {
                              return Point3{y[0] * (2 + th[0] * th[0]), y[1] + 0.2 * th[0], y[2]};
                          }};
    const GeometryMap g = fit_geometry(m, bases, grid);
    const GeometryMap fine = g.resampled(ParamGrid({{-1.0, 1.0}}, {6}));
    for (double t : {-0.9, -0.2, 0.35, 1.0}) {
        const std::vector<double> th{t};
        const Point3 y{0.3, 0.6, 0.1};
        const Point3 a = fine.evaluate(y, th), e = m.eval(y, th);
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[k], e[k], 1e-12);
    }
}

TEST(Geometry, MetricSlotIsSymmetric)
{
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) EXPECT_EQ(metric_slot(a, b), metric_slot(b, a));
    EXPECT_EQ(metric_slot(0, 0), 0);
    EXPECT_EQ(metric_slot(2, 2), 5);
}
