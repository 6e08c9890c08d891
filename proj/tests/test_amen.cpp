#include <gtest/gtest.h>

#include <random>

#include <Eigen/Dense>

#include "support/random_ops.hpp"
#include "support/random_tt.hpp"
#include "ttiga/amen.hpp"

using namespace ttiga;
using namespace ttiga::testing;

namespace {

Vector dense_solve(const TTMatrix& a, const TTTensor& b) { return tt_full(a).partialPivLu().solve(flat(b)); }

TTMatrix spd_system(const std::vector<Index>& shape, std::mt19937& rng)
{
    std::vector<Matrix> ls;
    for (Index n : shape) ls.push_back(random_spd(n, 0.5, 3.0, rng));
    return kronecker_sum(ls, 0.5);
}

}  // namespace

TEST(Amen, IdentityConvergesInOneSweep)
{
    std::mt19937 rng(1);
    auto b = random_tt({5, 4, 6}, {3, 2}, rng);
    auto res = amen_solve(TTMatrix::identity(b.shape()), b);
    EXPECT_TRUE(res.report.converged);
    EXPECT_EQ(res.report.sweeps, 1);
    EXPECT_LT(rel_diff(flat(res.x), flat(b)), 1e-12);
}

TEST(Amen, ScaledIdentity)
{
    std::vector<Index> shape{4, 5, 3};
    auto a = TTMatrix::diagonal(TTTensor::constant(shape, 2.0));
    auto res = amen_solve(a, TTTensor::constant(shape, 1.0));
    EXPECT_TRUE(res.report.converged);
    EXPECT_TRUE(flat(res.x).isApproxToConstant(0.5, 1e-12));
}

TEST(Amen, ZeroRightHandSide)
{
    std::vector<Index> shape{3, 3};
    auto res = amen_solve(TTMatrix::identity(shape), TTTensor::zeros(shape));
    EXPECT_TRUE(res.report.converged);
    EXPECT_EQ(flat(res.x).norm(), 0.0);
}

TEST(Amen, MatchesDenseSolveSpd)
{
    std::mt19937 rng(2);
    auto a = spd_system({6, 6, 6}, rng);
    auto b = random_tt({6, 6, 6}, {2, 2}, rng);
    SolveOptions o;
    o.eps = 1e-10;
    auto res = amen_solve(a, b, o);
    ASSERT_TRUE(res.report.converged) << res.report.to_log();
    EXPECT_LE(res.report.residual, o.eps);
    EXPECT_LT(rel_diff(flat(res.x), dense_solve(a, b)), 1e-8);
    // Independent residual check
    const Vector r = tt_full(a) * flat(res.x) - flat(b);
    EXPECT_LE(r.norm() / flat(b).norm(), 1.5 * o.eps);
}

TEST(Amen, ResidualNormMatchesDense)
{
    std::mt19937 rng(12);
    auto a = spd_system({5, 6, 4, 3}, rng);
    auto b = random_tt({5, 6, 4, 3}, {2, 3, 2}, rng);
    auto x = random_tt({5, 6, 4, 3}, {3, 2, 3}, rng);
    const double ref = (tt_full(a) * flat(x) - flat(b)).norm();
    EXPECT_NEAR(residual_norm(a, x, b), ref, 1e-12 * ref);
    // Small residual: exact solution perturbed by 1e-9.
    const Vector xs = dense_solve(a, b);
    auto xt = tt_from_dense(DenseTensor(b.shape(), std::vector<double>(xs.data(), xs.data() + xs.size())), 0.0);
    auto xp = tt_axpy(xt, 1e-9, x);
    const double ref2 = (tt_full(a) * flat(xp) - flat(b)).norm();
    EXPECT_NEAR(residual_norm(a, xp, b), ref2, 1e-4 * ref2);
}

TEST(Amen, NonsymmetricIterativeLocalSolves)
{
    std::mt19937 rng(3);
    std::vector<Matrix> ls;
    for (Index n : {12, 10, 12}) {
        Matrix l = random_spd(n, 1.0, 4.0, rng);
        l += 0.3 * Matrix::Random(n, n);
        ls.push_back(l);
    }
    auto a = kronecker_sum(ls, 1.0);
    auto b = random_tt({12, 10, 12}, {3, 3}, rng);
    for (auto pc : {LocalPreconditioner::none, LocalPreconditioner::jacobi, LocalPreconditioner::block_jacobi}) {
        SolveOptions o;
        o.eps = 1e-8;
        o.dense_threshold = 10;  // force GMRES
        o.preconditioner = pc;
        auto res = amen_solve(a, b, o);
        ASSERT_TRUE(res.report.converged) << res.report.to_log();
        EXPECT_LT(rel_diff(flat(res.x), dense_solve(a, b)), 1e-6);
    }
}

TEST(Amen, PreconditionerDoesNotChangeFixedPoint)
{
    std::mt19937 rng(4);
    auto a = spd_system({8, 9, 7}, rng);
    auto b = random_tt({8, 9, 7}, {2, 3}, rng);
    SolveOptions on, off;
    on.eps = off.eps = 1e-9;
    on.dense_threshold = off.dense_threshold = 1;
    on.preconditioner = LocalPreconditioner::jacobi;
    off.preconditioner = LocalPreconditioner::none;
    auto x1 = amen_solve(a, b, on).x;
    auto x2 = amen_solve(a, b, off).x;
    EXPECT_LT(rel_diff(flat(x1), flat(x2)), 10 * on.eps);
}

TEST(Amen, ShapeMismatchThrows)
{
    auto a = TTMatrix::identity(std::vector<Index>{3, 4});
    EXPECT_THROW(amen_solve(a, TTTensor::constant(std::vector<Index>{4, 3}, 1.0)), std::invalid_argument);
    SolveOptions bad;
    bad.eps = 0;
    EXPECT_THROW(amen_solve(a, TTTensor::constant(std::vector<Index>{3, 4}, 1.0), bad), std::invalid_argument);
}

TEST(Amen, SingularLocalSystemReported)
{
    std::vector<Index> shape{3, 3};
    auto a = TTMatrix::diagonal(TTTensor::zeros(shape));
    auto res = amen_solve(a, TTTensor::constant(shape, 1.0));
    EXPECT_FALSE(res.report.converged);
    EXPECT_TRUE(res.report.singular);
}

TEST(Amen, LogHasOneLinePerSweep)
{
    std::mt19937 rng(5);
    auto a = spd_system({4, 4, 4}, rng);
    auto res = amen_solve(a, TTTensor::constant(std::vector<Index>{4, 4, 4}, 1.0));
    const auto log = res.report.to_log();
    EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), res.report.sweeps + 2);
}

TEST(Als, IdentityFromZeroIsExact)
{
    std::vector<Index> shape{4, 5, 3};
    auto b = TTTensor::rank_one({Vector::LinSpaced(4, 1, 2), Vector::LinSpaced(5, -1, 1), Vector::LinSpaced(3, 2, 3)});
    auto x = als_sweep(TTMatrix::identity(shape), b, TTTensor::zeros(shape));
    EXPECT_LT(rel_diff(flat(x), flat(b)), 1e-12);
}

TEST(Als, RankOneSolvableSystem)
{
    std::mt19937 rng(6);
    std::vector<Matrix> f{random_spd(4, 1, 2, rng), random_spd(5, 1, 2, rng), random_spd(3, 1, 2, rng)};
    auto a = TTMatrix::kronecker(f);
    auto xs = TTTensor::rank_one({Vector::Random(4), Vector::Random(5), Vector::Random(3)});
    auto b = ttm_apply(a, xs);
    auto x = als_sweep(a, b, TTTensor::constant(xs.shape(), 1.0), 2);
    EXPECT_LT(rel_diff(flat(x), flat(xs)), 1e-10);
}

TEST(Als, ResidualNonIncreasing)
{
    std::mt19937 rng(7);
    auto a = spd_system({6, 5, 6}, rng);
    auto b = random_tt({6, 5, 6}, {3, 3}, rng);
    auto x = random_tt({6, 5, 6}, {2, 2}, rng);
    double prev = residual_norm(a, x, b);
    for (int s = 0; s < 6; ++s) {
        x = als_sweep(a, b, x, 1);
        const double r = residual_norm(a, x, b);
        EXPECT_LE(r, prev * (1 + 1e-10));
        prev = r;
    }
}

TEST(Reciprocal, OnesAndConstant)
{
    std::vector<Index> shape{3, 4, 5};
    auto r1 = tt_reciprocal(TTTensor::constant(shape, 1.0), 1e-10);
    EXPECT_TRUE(flat(r1).isApproxToConstant(1.0, 1e-12));
    auto r4 = tt_reciprocal(TTTensor::constant(shape, 4.0), 1e-10);
    EXPECT_TRUE(flat(r4).isApproxToConstant(0.25, 1e-12));
}

TEST(Reciprocal, RandomPositiveTensor)
{
    // Smooth positive tensor in [1, 2], built as a low-rank TT.
    std::vector<Index> shape{8, 9, 10};
    std::vector<Vector> f;
    for (Index n : shape) f.push_back((Vector::LinSpaced(n, 0, 1).array() * 2.1).sin().matrix());
    auto g = TTTensor::rank_one(f);
    std::vector<Vector> h;
    for (Index n : shape) h.push_back((Vector::LinSpaced(n, 0, 1).array() * 1.3).cos().matrix());
    auto o = tt_round(tt_add(TTTensor::constant(shape, 1.5), tt_add(tt_scale(g, 0.3), tt_scale(TTTensor::rank_one(h), 0.2))), 1e-14);
    const Vector ov = flat(o);
    ASSERT_GE(ov.minCoeff(), 1.0);
    ASSERT_LE(ov.maxCoeff(), 2.0);
    auto r = tt_reciprocal(o, 1e-8);
    const Vector rv = flat(r);
    EXPECT_LE((rv.cwiseProduct(ov) - Vector::Ones(ov.size())).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Reciprocal, ZeroEntryFails)
{
    auto o = TTTensor::rank_one({Vector::LinSpaced(5, -0.5, 1.5), Vector::Ones(5)});
    EXPECT_THROW(tt_reciprocal(o, 1e-8), std::runtime_error);
}
