#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support/random_tt.hpp"
#include "ttiga/qtt.hpp"
#include "ttiga/tt_io.hpp"
#include "ttiga/tt_tensor.hpp"

using namespace ttiga;
using namespace ttiga::testing;

namespace {

std::vector<Index> interior(const std::vector<Index>& r) { return {r.begin() + 1, r.end() - 1}; }

// Dense matricization of an operator by probing unit vectors through entry().
Matrix dense_by_entries(const TTMatrix& a)
{
    const auto rs = a.row_shape(), cs = a.col_shape();
    DenseTensor rt(rs), ct(cs);
    Matrix m(rt.size(), ct.size());
    for (Index i = 0; i < rt.size(); ++i)
        for (Index j = 0; j < ct.size(); ++j) m(i, j) = a.entry(rt.multi_index(i), ct.multi_index(j));
    return m;
}

}  // namespace

TEST(TTSVD, SeparableTensorHasRankOne)
{
    Vector a = Vector::LinSpaced(4, 1, 2), b = Vector::LinSpaced(5, -1, 3), c = Vector::LinSpaced(3, 0.5, 0.7);
    DenseTensor x({4, 5, 3});
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 5; ++j)
            for (Index k = 0; k < 3; ++k) x.at(std::vector<Index>{i, j, k}) = a[i] * b[j] * c[k];
    auto t = tt_from_dense(x, 1e-12);
    EXPECT_EQ(t.ranks(), (std::vector<Index>{1, 1, 1, 1}));
    EXPECT_LT(rel_diff(flat(t), flat(x)), 1e-13);
}

TEST(TTSVD, ZeroTensor)
{
    DenseTensor x({4, 5, 6});
    auto t = tt_from_dense(x, 0.1);
    EXPECT_EQ(t.ranks(), (std::vector<Index>{1, 1, 1, 1}));
    EXPECT_EQ(flat(t).norm(), 0.0);
}

TEST(TTSVD, RandomReconstruction)
{
    std::mt19937 rng(1);
    auto x = random_dense({8, 8, 8}, rng);
    EXPECT_LT(rel_diff(flat(tt_from_dense(x, 1e-14)), flat(x)), 1e-12);
    EXPECT_LT(rel_diff(flat(tt_from_dense(x, 0.0)), flat(x)), 1e-12);
}

TEST(TTSVD, ToleranceContractAndMaxRank)
{
    std::mt19937 rng(2);
    auto x = random_dense({6, 7, 5, 4}, rng);
    for (double eps : {0.5, 0.2, 0.05}) {
        auto t = tt_from_dense(x, eps);
        EXPECT_LE(rel_diff(flat(t), flat(x)), eps * (1 + 1e-12));
    }
    EXPECT_LE(tt_from_dense(x, 0.0, 3).max_rank(), 3);
}

TEST(TTSVD, RejectsNegativeTolerance)
{
    DenseTensor x({2, 2});
    EXPECT_THROW(tt_from_dense(x, -1.0), std::invalid_argument);
}

TEST(TTFull, OnesAndSingleMode)
{
    std::vector<Index> shape{2, 3, 2};
    auto ones = flat(TTTensor::constant(shape, 1.0));
    EXPECT_TRUE(ones.isApproxToConstant(1.0));

    Core3 c(1, 4, 1, Vector::LinSpaced(4, 1, 4));
    auto full = tt_full(TTTensor({c}));
    ASSERT_EQ(full.size(), 4);
    for (Index i = 0; i < 4; ++i) EXPECT_EQ(full[i], double(i + 1));
}

TEST(TTFull, MatchesEntrywiseChainProduct)
{
    std::mt19937 rng(3);
    auto t = random_tt({3, 4, 2, 3}, {2, 3, 2}, rng);
    auto full = tt_full(t);
    for (Index lin = 0; lin < full.size(); ++lin) {
        auto idx = full.multi_index(lin);
        Matrix p = Matrix::Identity(1, 1);
        for (Index k = 0; k < t.order(); ++k) p = p * t.core(k).slice(idx[static_cast<std::size_t>(k)]);
        EXPECT_NEAR(full[lin], p(0, 0), 1e-13);
    }
}

TEST(TTFull, BudgetEnforced)
{
    auto t = TTTensor::constant(std::vector<Index>{100, 100, 100}, 1.0);
    EXPECT_THROW(tt_full(t, 1000), std::length_error);
}

TEST(TTRound, AdditionRanksRecover)
{
    std::mt19937 rng(4);
    auto t = random_tt({5, 6, 4, 5}, {3, 4, 2}, rng);
    auto s = tt_add(t, t);
    EXPECT_EQ(interior(s.ranks()), (std::vector<Index>{6, 8, 4}));
    auto r = tt_round(s, 1e-12);
    EXPECT_EQ(r.ranks(), t.ranks());
    EXPECT_LT(rel_diff(flat(r), 2 * flat(t)), 1e-12);
}

TEST(TTRound, ZeroToleranceKeepsEntries)
{
    std::mt19937 rng(5);
    auto t = random_tt({4, 4, 4}, {3, 3}, rng);
    EXPECT_LT(rel_diff(flat(tt_round(t, 0.0)), flat(t)), 1e-13);
}

TEST(TTRound, ToleranceContract)
{
    std::mt19937 rng(6);
    auto t = random_tt({10, 10, 10, 10}, {12, 12, 12}, rng);
    const Vector ref = flat(t);
    for (double eps : {1e-2, 1e-3, 1e-6, 1e-10}) {
        auto r = tt_round(t, eps);
        EXPECT_LE(rel_diff(flat(r), ref), eps * (1 + 1e-9)) << "eps=" << eps;
        for (std::size_t k = 0; k < r.ranks().size(); ++k) EXPECT_LE(r.ranks()[k], t.ranks()[k]);
    }
}

TEST(TTRound, OperatorRounding)
{
    std::mt19937 rng(7);
    auto a = random_ttm({3, 4, 3}, {3, 4, 3}, {2, 3}, rng);
    auto r = tt_round(tt_add(a, a), 1e-12);
    EXPECT_EQ(r.ranks(), a.ranks());
    EXPECT_LT((tt_full(r) - 2 * tt_full(a)).norm() / tt_full(a).norm(), 1e-12);
}

TEST(TTArithmetic, AddHadamardScaleMatchDense)
{
    std::mt19937 rng(8);
    auto a = random_tt({4, 3, 5}, {3, 3}, rng);
    auto b = random_tt({4, 3, 5}, {3, 3}, rng);
    const Vector fa = flat(a), fb = flat(b);
    auto s = tt_add(a, b);
    auto h = tt_hadamard(a, b);
    EXPECT_EQ(interior(s.ranks()), (std::vector<Index>{6, 6}));
    EXPECT_EQ(interior(h.ranks()), (std::vector<Index>{9, 9}));
    EXPECT_LT(rel_diff(flat(s), fa + fb), 1e-12);
    EXPECT_LT(rel_diff(flat(h), fa.cwiseProduct(fb)), 1e-12);
    EXPECT_LT(rel_diff(flat(tt_scale(a, -2.5)), -2.5 * fa), 1e-14);
    EXPECT_LT(rel_diff(flat(tt_axpy(a, 0.5, b)), fa + 0.5 * fb), 1e-12);
}

TEST(TTArithmetic, SelfCancellation)
{
    std::mt19937 rng(9);
    auto a = random_tt({4, 3, 5}, {2, 2}, rng);
    auto z = tt_round(tt_add(a, tt_scale(a, -1.0)), 1e-12);
    EXPECT_LT(flat(z).norm(), 1e-12 * flat(a).norm());
}

TEST(TTArithmetic, HadamardWithOnes)
{
    std::mt19937 rng(10);
    auto b = random_tt({3, 3, 3}, {2, 2}, rng);
    auto h = tt_hadamard(TTTensor::constant(b.shape(), 1.0), b);
    EXPECT_LT(rel_diff(flat(h), flat(b)), 1e-14);
}

TEST(TTArithmetic, ShapeMismatchThrows)
{
    auto a = TTTensor::constant(std::vector<Index>{2, 3}, 1.0);
    auto b = TTTensor::constant(std::vector<Index>{3, 2}, 1.0);
    EXPECT_THROW(tt_add(a, b), std::invalid_argument);
    EXPECT_THROW(tt_hadamard(a, b), std::invalid_argument);
    EXPECT_THROW(tt_dot(a, b), std::invalid_argument);
}

TEST(TTDot, ValuesAndNorm)
{
    std::vector<Index> s{2, 2};
    EXPECT_DOUBLE_EQ(tt_dot(TTTensor::constant(s, 1.0), TTTensor::constant(s, 1.0)), 4.0);
    EXPECT_EQ(tt_dot(TTTensor::constant(s, 3.0), TTTensor::zeros(s)), 0.0);

    std::mt19937 rng(11);
    auto a = random_tt({5, 4, 6}, {3, 2}, rng);
    auto b = random_tt({5, 4, 6}, {2, 4}, rng);
    const double ref = flat(a).dot(flat(b));
    EXPECT_NEAR(tt_dot(a, b), ref, 1e-12 * std::abs(ref));
    EXPECT_GE(tt_dot(a, a), 0.0);
    EXPECT_NEAR(tt_norm(a), flat(a).norm(), 1e-12 * flat(a).norm());
    EXPECT_NEAR(tt_sum(a), flat(a).sum(), 1e-12 * flat(a).cwiseAbs().sum());
}

TEST(TTDot, WeightedTripleProduct)
{
    std::mt19937 rng(21);
    auto a = random_tt({4, 5, 3}, {2, 3}, rng);
    auto w = random_tt({4, 5, 3}, {3, 2}, rng);
    auto b = random_tt({4, 5, 3}, {2, 2}, rng);
    const double ref = flat(a).cwiseProduct(flat(w)).dot(flat(b));
    EXPECT_NEAR(tt_dot3(a, w, b), ref, 1e-12 * flat(a).cwiseAbs().cwiseProduct(flat(w).cwiseAbs()).dot(flat(b).cwiseAbs()));
    EXPECT_NEAR(tt_dot3(a, w, b), tt_dot(tt_hadamard(a, w), b), 1e-12 * std::abs(ref) + 1e-12);
}

TEST(TTMatVec, IdentityAndDiagonalOnes)
{
    std::mt19937 rng(12);
    auto x = random_tt({3, 4, 2}, {2, 2}, rng);
    EXPECT_LT(rel_diff(flat(ttm_apply(TTMatrix::identity(x.shape()), x)), flat(x)), 1e-15);
    auto d = TTMatrix::diagonal(TTTensor::constant(x.shape(), 1.0));
    EXPECT_LT(rel_diff(flat(ttm_apply(d, x)), flat(x)), 1e-15);
}

TEST(TTMatVec, MatchesDenseMatricization)
{
    std::mt19937 rng(13);
    auto a = random_ttm({3, 2, 4}, {4, 3, 2}, {2, 3}, rng);
    auto x = random_tt({4, 3, 2}, {2, 2}, rng);
    const Matrix ad = dense_by_entries(a);
    EXPECT_LT((tt_full(a) - ad).norm() / ad.norm(), 1e-14);
    auto y = ttm_apply(a, x);
    EXPECT_EQ(interior(y.ranks()), (std::vector<Index>{4, 6}));
    EXPECT_LT(rel_diff(flat(y), ad * flat(x)), 1e-12);
}

TEST(TTMatVec, Linearity)
{
    std::mt19937 rng(14);
    auto a = random_ttm({3, 3, 3}, {3, 3, 3}, {2, 2}, rng);
    auto x = random_tt({3, 3, 3}, {2, 2}, rng);
    auto y = random_tt({3, 3, 3}, {2, 2}, rng);
    const double al = 0.7, be = -1.3;
    auto lhs = ttm_apply(a, tt_round(tt_add(tt_scale(x, al), tt_scale(y, be)), 1e-13));
    auto rhs = tt_round(tt_add(tt_scale(ttm_apply(a, x), al), tt_scale(ttm_apply(a, y), be)), 1e-13);
    EXPECT_LT(rel_diff(flat(lhs), flat(rhs)), 1e-12);
}

TEST(TTMatVec, ComposeTransposeKronecker)
{
    std::mt19937 rng(15);
    auto a = random_ttm({3, 2, 4}, {2, 3, 3}, {2, 2}, rng);
    auto b = random_ttm({2, 3, 3}, {3, 2, 2}, {3, 2}, rng);
    const Matrix ad = tt_full(a), bd = tt_full(b);
    EXPECT_LT((tt_full(ttm_compose(a, b)) - ad * bd).norm() / (ad * bd).norm(), 1e-12);
    EXPECT_LT((tt_full(a.transposed()) - ad.transpose()).norm(), 1e-13 * ad.norm());

    std::vector<Matrix> f{Matrix::Random(2, 3), Matrix::Random(3, 2)};
    Matrix kr(6, 6);
    for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j) kr(i, j) = f[0](i / 3, j / 2) * f[1](i % 3, j % 2);
    EXPECT_LT((tt_full(TTMatrix::kronecker(f)) - kr).norm(), 1e-14);
}

TEST(TTMatVec, DiagonalPartAndReversal)
{
    std::mt19937 rng(16);
    auto a = random_ttm({3, 4, 2}, {3, 4, 2}, {2, 3}, rng);
    const Matrix ad = tt_full(a);
    EXPECT_LT(rel_diff(flat(a.diagonal_part()), ad.diagonal()), 1e-13);

    auto x = random_tt({3, 4, 2}, {2, 2}, rng);
    auto xr = x.reversed();
    EXPECT_EQ(xr.shape(), (std::vector<Index>{2, 4, 3}));
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 4; ++j)
            for (Index k = 0; k < 2; ++k)
                EXPECT_NEAR(xr.entry(std::vector<Index>{k, j, i}), x.entry(std::vector<Index>{i, j, k}), 1e-13);
    auto ar = a.reversed();
    EXPECT_LT(rel_diff(flat(ttm_apply(ar, xr).reversed()), flat(ttm_apply(a, x))), 1e-12);
}

TEST(TTMatVec, ModeProduct)
{
    std::mt19937 rng(17);
    auto x = random_tt({3, 4, 2}, {2, 2}, rng);
    Matrix m = Matrix::Random(5, 4);
    auto y = tt_mode_product(x, 1, m);
    std::vector<Matrix> f{Matrix::Identity(3, 3), m, Matrix::Identity(2, 2)};
    EXPECT_LT(rel_diff(flat(y), flat(ttm_apply(TTMatrix::kronecker(f), x))), 1e-13);
}

TEST(Orthogonalization, NormsAndOrthonormality)
{
    std::mt19937 rng(18);
    auto x = random_tt({4, 5, 3, 4}, {3, 4, 3}, rng);
    const Vector ref = flat(x);
    auto l = x;
    EXPECT_NEAR(left_orthogonalize(l), ref.norm(), 1e-12 * ref.norm());
    EXPECT_LT(rel_diff(flat(l), ref), 1e-13);
    for (Index k = 0; k + 1 < l.order(); ++k) {
        const Matrix u = l.core(k).left_unfolding();
        EXPECT_LT((u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).norm(), 1e-13);
    }
    auto r = x;
    EXPECT_NEAR(right_orthogonalize(r), ref.norm(), 1e-12 * ref.norm());
    for (Index k = 1; k < r.order(); ++k) {
        const Matrix v = r.core(k).right_unfolding();
        EXPECT_LT((v * v.transpose() - Matrix::Identity(v.rows(), v.rows())).norm(), 1e-13);
    }
}

TEST(QTT, PowerOfTwoRoundTrip)
{
    Core3 c(1, 8, 1, Vector::LinSpaced(8, 0, 7));
    TTTensor t({c});
    QttFactorization f{{{2, 2, 2}}};
    auto q = qtt_reshape(t, f);
    ASSERT_EQ(q.order(), 3);
    for (Index a = 0; a < 2; ++a)
        for (Index b = 0; b < 2; ++b)
            for (Index d = 0; d < 2; ++d)
                EXPECT_NEAR(q.entry(std::vector<Index>{a, b, d}), double(4 * a + 2 * b + d), 1e-13);
    EXPECT_LT(rel_diff(flat(qtt_unreshape(q, f)), flat(t)), 1e-14);
}

TEST(QTT, MixedPrimeFactors)
{
    EXPECT_EQ(prime_factors(12), (std::vector<Index>{2, 2, 3}));
    EXPECT_EQ(prime_factors(13), (std::vector<Index>{13}));
    std::mt19937 rng(19);
    auto t = random_tt({12}, {}, rng);
    QttFactorization f{{{3, 2, 2}}};
    auto q = qtt_reshape(t, f);
    EXPECT_EQ(q.shape(), (std::vector<Index>{3, 2, 2}));
    for (Index n = 0; n < 12; ++n)
        EXPECT_NEAR(q.entry(std::vector<Index>{n / 4, (n / 2) % 2, n % 2}), t.entry(std::vector<Index>{n}), 1e-12);
}

TEST(QTT, InconsistentFactorizationThrows)
{
    auto t = TTTensor::constant(std::vector<Index>{12}, 1.0);
    EXPECT_THROW(qtt_reshape(t, QttFactorization{{{2, 2, 2}}}), std::invalid_argument);
    EXPECT_THROW(qtt_reshape(t, QttFactorization{{{12, 1}}}), std::invalid_argument);
}

TEST(QTT, ExhaustiveBijection)
{
    std::mt19937 rng(20);
    auto t = random_tt({16, 12, 8}, {4, 5}, rng);
    auto f = QttFactorization::primes(t.shape());
    auto q = qtt_reshape(t, f);
    EXPECT_EQ(q.shape(), f.reshaped_shape());
    const auto full = tt_full(t), qfull = tt_full(q);
    // Digits of every mode are most-significant first, so the row-major
    // linearizations coincide.
    EXPECT_LT(rel_diff(flat(qfull), flat(full)), 1e-12);
    EXPECT_LT(rel_diff(flat(tt_round(qtt_unreshape(q, f), 1e-13)), flat(full)), 1e-12);
}

TEST(QTT, DenseRandomRoundTrip)
{
    std::mt19937 rng(21);
    auto x = random_dense({16, 16}, rng);
    auto t = tt_from_dense(x, 0.0);
    auto f = QttFactorization::primes(t.shape());
    EXPECT_LT(rel_diff(flat(qtt_unreshape(qtt_reshape(t, f), f)), flat(x)), 1e-12);
}

TEST(QTT, OperatorReshapeKeepsAction)
{
    std::mt19937 rng(22);
    auto a = random_ttm({4, 6}, {4, 6}, {3}, rng);
    auto x = random_tt({4, 6}, {2}, rng);
    auto f = QttFactorization::primes(x.shape());
    auto aq = qtt_reshape(a, f);
    auto xq = qtt_reshape(x, f);
    auto y = qtt_unreshape(ttm_apply(aq, xq), f);
    EXPECT_LT(rel_diff(flat(y), flat(ttm_apply(a, x))), 1e-12);
    EXPECT_LT((tt_full(qtt_unreshape(aq, f)) - tt_full(a)).norm() / tt_full(a).norm(), 1e-12);
}

TEST(TTIO, RoundTripTensorAndMatrix)
{
    std::mt19937 rng(23);
    auto t = random_tt({3, 4, 5}, {2, 3}, rng);
    auto a = random_ttm({2, 3}, {4, 2}, {3}, rng);
    std::stringstream s1, s2;
    write_tt(s1, t);
    write_tt(s2, a);
    const std::string bytes = s1.str();
    EXPECT_EQ(bytes.substr(0, 4), "TTK1");
    EXPECT_EQ(bytes.size(), 4 + 8 * (2 + 3 + 4) + 8 * static_cast<std::size_t>(t.storage()));

    auto t2 = std::get<TTTensor>(read_tt(s1));
    auto a2 = std::get<TTMatrix>(read_tt(s2));
    EXPECT_EQ(rel_diff(flat(t2), flat(t)), 0.0);
    EXPECT_EQ((tt_full(a2) - tt_full(a)).norm(), 0.0);
    EXPECT_NE(describe(a2).find("kind: matrix"), std::string::npos);
}

TEST(TTIO, CorruptInputRejected)
{
    std::stringstream bad("XXXX");
    EXPECT_THROW(read_tt(bad), std::runtime_error);
    std::mt19937 rng(24);
    std::stringstream s;
    write_tt(s, random_tt({3, 3}, {2}, rng));
    std::string trunc = s.str().substr(0, s.str().size() - 5);
    std::stringstream t(trunc);
    EXPECT_THROW(read_tt(t), std::runtime_error);
}
