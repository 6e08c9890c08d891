#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "ttiga/bspline.hpp"
#include "ttiga/param_grid.hpp"

using namespace ttiga;

namespace {

std::vector<double> knots_of(const BSplineBasis& b) { return b.knot_vector().knots(); }

// Textbook recursive Cox-de Boor, used as an independent reference.
double cox_de_boor(const std::vector<double>& z, Index i, int p, double x)
{
    if (p == 0) {
        const bool last = z[static_cast<std::size_t>(i + 1)] == z.back() && x == z.back() &&
                          z[static_cast<std::size_t>(i)] < z[static_cast<std::size_t>(i + 1)];
        return (z[static_cast<std::size_t>(i)] <= x && x < z[static_cast<std::size_t>(i + 1)]) || last ? 1.0 : 0.0;
    }
    double v = 0.0;
    const double d1 = z[static_cast<std::size_t>(i + p)] - z[static_cast<std::size_t>(i)];
    const double d2 = z[static_cast<std::size_t>(i + p + 1)] - z[static_cast<std::size_t>(i + 1)];
    if (d1 > 0) v += (x - z[static_cast<std::size_t>(i)]) / d1 * cox_de_boor(z, i, p - 1, x);
    if (d2 > 0) v += (z[static_cast<std::size_t>(i + p + 1)] - x) / d2 * cox_de_boor(z, i + 1, p - 1, x);
    return v;
}

}  // namespace

TEST(Knots, FigureOneConfigurations)
{
    EXPECT_EQ(knots_of(make_basis(5, 1)), (std::vector<double>{0, 0, 0.25, 0.5, 0.75, 1, 1}));
    EXPECT_EQ(knots_of(make_basis(6, 2)), (std::vector<double>{0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1}));
    EXPECT_EQ(knots_of(make_basis(7, 2, {{0.5, 2}})), (std::vector<double>{0, 0, 0, 0.25, 0.5, 0.5, 0.75, 1, 1, 1}));
}

TEST(Knots, InvalidInputs)
{
    EXPECT_THROW(make_basis(2, 2), std::invalid_argument);
    EXPECT_THROW(make_basis(6, 2, {{0.5, 3}}), std::invalid_argument);
    EXPECT_THROW(make_basis(4, 2, {{0.5, 2}}), std::invalid_argument);
    EXPECT_THROW(KnotVector({0, 0.5, 1, 1}, 1), std::invalid_argument);
    EXPECT_THROW(make_basis(6, 2).eval_all(1.5), std::domain_error);
}

TEST(Eval, EndpointsAndHatMidpoint)
{
    for (int p = 1; p <= 4; ++p) {
        auto b = make_basis(9, p);
        Vector v0 = b.eval_all(0.0), v1 = b.eval_all(1.0);
        EXPECT_EQ(v0[0], 1.0);
        EXPECT_EQ(v0.sum(), 1.0);
        EXPECT_NEAR(v1[8], 1.0, 1e-15);
    }
    Vector h = make_basis(5, 1).eval_all(0.375);
    Vector ref(5);
    ref << 0, 0.5, 0.5, 0, 0;
    EXPECT_LT((h - ref).norm(), 1e-15);
}

TEST(Eval, MatchesRecursiveDefinition)
{
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto b : {make_basis(7, 2, {{0.5, 2}}), make_basis(10, 3), make_basis(8, 3, {{0.3, 3}, {0.6, 1}})}) {
        for (int t = 0; t < 200; ++t) {
            const double x = u(rng);
            Vector v = b.eval_all(x);
            for (Index i = 0; i < b.size(); ++i)
                EXPECT_NEAR(v[i], cox_de_boor(knots_of(b), i, b.degree(), x), 1e-13);
        }
    }
}

TEST(Eval, PartitionOfUnityAndDerivativeSum)
{
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto b : {make_basis(6, 2), make_basis(12, 3, {{0.5, 3}}), make_basis(20, 1), make_basis(9, 4)}) {
        for (int t = 0; t < 1000; ++t) {
            const double x = u(rng);
            Vector v = b.eval_all(x);
            EXPECT_NEAR(v.sum(), 1.0, 1e-13);
            EXPECT_NEAR(b.eval_all_deriv(x).sum(), 0.0, 1e-12);
            EXPECT_LE((v.array() != 0.0).count(), b.degree() + 1);
            EXPECT_GE(v.minCoeff(), 0.0);
        }
    }
}

TEST(Eval, DerivativeMatchesFiniteDifference)
{
    auto b = make_basis(10, 3, {{0.5, 2}});
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    const double h = 1e-6;
    for (int t = 0; t < 100; ++t) {
        double x = u(rng);
        if (std::abs(x - 0.5) < 2 * h) continue;
        Vector fd = (b.eval_all(x + h) - b.eval_all(x - h)) / (2 * h);
        EXPECT_LT((fd - b.eval_all_deriv(x)).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(Eval, ContinuityReducedByMultiplicity)
{
    // p = 2 with knot 1/2 doubled: C^0 across 1/2, so the first derivative jumps.
    auto b = make_basis(7, 2, {{0.5, 2}});
    const double h = 1e-9;
    Vector jump0 = b.eval_all(0.5 + h) - b.eval_all(0.5 - h);
    Vector jump1 = b.eval_all_deriv(0.5 + h) - b.eval_all_deriv(0.5 - h);
    EXPECT_LT(jump0.cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_GT(jump1.cwiseAbs().maxCoeff(), 1.0);
    // At a simple knot the first derivative is continuous.
    Vector j1s = b.eval_all_deriv(0.25 + h) - b.eval_all_deriv(0.25 - h);
    EXPECT_LT(j1s.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Greville, KnownValuesAndNonsingular)
{
    Vector g1 = make_basis(5, 1).greville();
    Vector r1(5);
    r1 << 0, 0.25, 0.5, 0.75, 1;
    EXPECT_LT((g1 - r1).norm(), 1e-15);

    Vector g2 = make_basis(6, 2).greville();
    Vector r2(6);
    r2 << 0, 0.125, 0.375, 0.625, 0.875, 1;
    EXPECT_LT((g2 - r2).norm(), 1e-15);

    for (int p = 1; p <= 4; ++p)
        for (Index n : {Index(p + 1), Index(p + 3), Index{16}, Index{33}}) {
            auto b = make_basis(n, p);
            Vector g = b.greville();
            EXPECT_EQ(g[0], 0.0);
            EXPECT_NEAR(g[n - 1], 1.0, 1e-15);
            Eigen::JacobiSVD<Matrix> svd(b.collocation_matrix(g));
            const double cond = svd.singularValues()(0) / svd.singularValues()(n - 1);
            EXPECT_TRUE(std::isfinite(cond));
            EXPECT_LT(cond, 1e3) << "p=" << p << " n=" << n;
        }
}

TEST(Collocation, BandedAndIdentityAtKnotsForHats)
{
    auto b = make_basis(5, 1);
    Vector pts(5);
    pts << 0, 0.25, 0.5, 0.75, 1;
    EXPECT_LT((b.collocation_matrix(pts) - Matrix::Identity(5, 5)).norm(), 1e-15);

    auto c = make_basis(12, 3);
    Matrix m = c.collocation_matrix(c.greville());
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            if (std::abs(i - j) > 3) EXPECT_EQ(m(i, j), 0.0);
}

TEST(Collocation, PolynomialReproduction)
{
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int p = 1; p <= 4; ++p) {
        auto b = make_basis(11, p, p >= 2 ? std::vector<std::pair<double, int>>{{0.4, p}} : std::vector<std::pair<double, int>>{});
        auto poly = [p](double x) {
            double v = 0;
            for (int k = 0; k <= p; ++k) v += (k + 1) * std::pow(x - 0.3, k);
            return v;
        };
        Vector g = b.greville();
        Vector f(g.size());
        for (Index m = 0; m < g.size(); ++m) f[m] = poly(g[m]);
        Vector c = b.collocation_matrix(g).partialPivLu().solve(f);
        for (int t = 0; t < 100; ++t) {
            const double x = u(rng);
            EXPECT_NEAR(b.eval_all(x).dot(c), poly(x), 1e-12);
        }
    }
}

TEST(Quadrature, CountsWeightsAndExactness)
{
    auto b1 = make_basis(5, 1);
    auto q1 = b1.quadrature();
    EXPECT_EQ(q1.size(), 8);
    EXPECT_NEAR(q1.weights.sum(), 1.0, 1e-15);
    EXPECT_GT(q1.weights.minCoeff(), 0.0);

    for (int p = 1; p <= 4; ++p) {
        auto b = make_basis(10, p, p >= 2 ? std::vector<std::pair<double, int>>{{0.5, p}} : std::vector<std::pair<double, int>>{});
        auto q = b.quadrature();
        const auto bp = b.knot_vector().breakpoints();
        for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
            double num = 0.0;
            for (Index i = q.span_offsets[s]; i < q.span_offsets[s + 1]; ++i) {
                EXPECT_GT(q.points[i], bp[s]);
                EXPECT_LT(q.points[i], bp[s + 1]);
                num += q.weights[i] * std::pow(q.points[i], 2 * p + 1);
            }
            const double ref = (std::pow(bp[s + 1], 2 * p + 2) - std::pow(bp[s], 2 * p + 2)) / (2 * p + 2);
            EXPECT_NEAR(num, ref, 1e-14);
        }
    }
}

TEST(Quadrature, GramMatrixMatchesFineReference)
{
    auto b = make_basis(6, 2);
    auto q = b.quadrature();
    Matrix bq = b.collocation_matrix(q.points);
    Matrix gram = bq.transpose() * q.weights.asDiagonal() * bq;
    // 12-point Gauss on each span is far beyond the degree-4 integrand.
    auto fine = b.quadrature(12);
    Matrix bf = b.collocation_matrix(fine.points);
    Matrix ref = bf.transpose() * fine.weights.asDiagonal() * bf;
    EXPECT_LT((gram - ref).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(gram.sum(), 1.0, 1e-14);
}

TEST(GaussLegendre, HighOrderRule)
{
    for (int q : {1, 2, 5, 10, 20}) {
        auto [x, w] = gauss_legendre(q);
        EXPECT_NEAR(w.sum(), 2.0, 1e-13);
        for (int k = 0; k < 2 * q; k += 2) {
            double s = 0;
            for (Index i = 0; i < q; ++i) s += w[i] * std::pow(x[i], k);
            EXPECT_NEAR(s, 2.0 / (k + 1), 1e-13);
        }
    }
}

TEST(ParamGridTest, NodesInsideAndPolynomialInterpolation)
{
    ParamGrid g({{-0.05, 0.05}, {0.0, 1.0}}, {4, 6});
    EXPECT_EQ(g.shape(), (std::vector<Index>{4, 6}));
    for (Index k = 0; k < 2; ++k) {
        const auto& a = g.axis(k);
        EXPECT_GT(a.nodes.minCoeff(), a.lo);
        EXPECT_LT(a.nodes.maxCoeff(), a.hi);
        EXPECT_NEAR(a.quad_weights.sum(), a.hi - a.lo, 1e-15);
    }
    // Degree 5 polynomial through 6 nodes of axis 1.
    auto f = [](double t) { return 1 - 2 * t + 3 * t * t * t - t * t * t * t * t; };
    Vector vals(6);
    for (Index i = 0; i < 6; ++i) vals[i] = f(g.axis(1).nodes[i]);
    for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) EXPECT_NEAR(g.lagrange(1, t).dot(vals), f(t), 1e-13);
    // Exactly a unit vector at a node.
    Vector e = g.lagrange(0, g.axis(0).nodes[2]);
    EXPECT_EQ(e[2], 1.0);
    EXPECT_EQ(e.sum(), 1.0);
    EXPECT_THROW(g.lagrange(0, 0.2), std::domain_error);
}
