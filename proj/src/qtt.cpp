#include "ttiga/qtt.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "ttiga/detail/linalg.hpp"

namespace ttiga {

std::vector<Index> prime_factors(Index n)
{
    if (n < 1) throw std::invalid_argument("prime_factors: n must be positive");
    std::vector<Index> out;
    for (Index p = 2; p * p <= n; ++p)
        while (n % p == 0) {
            out.push_back(p);
            n /= p;
        }
    if (n > 1) out.push_back(n);
    return out;
}

QttFactorization QttFactorization::primes(std::span<const Index> shape)
{
    QttFactorization f;
    for (Index n : shape) f.factors.push_back(prime_factors(n));
    return f;
}

void QttFactorization::validate(std::span<const Index> shape) const
{
    if (factors.size() != shape.size())
        throw std::invalid_argument("QttFactorization: expected " + std::to_string(shape.size()) + " modes, got " +
                                    std::to_string(factors.size()));
    for (std::size_t k = 0; k < shape.size(); ++k) {
        Index p = 1;
        for (Index f : factors[k]) {
            if (f < 2) throw std::invalid_argument("QttFactorization: factors must be >= 2");
            p *= f;
        }
        if (p != shape[k])
            throw std::invalid_argument("QttFactorization: factors of mode " + std::to_string(k) +
                                        " multiply to " + std::to_string(p) + ", expected " +
                                        std::to_string(shape[k]));
    }
}

std::vector<Index> QttFactorization::reshaped_shape() const
{
    std::vector<Index> out;
    for (const auto& fs : factors) {
        if (fs.empty()) out.push_back(1);
        for (Index f : fs) out.push_back(f);
    }
    return out;
}

namespace {

// Splits an order-3 core whose mode is described by `digit_sizes` (most
// significant first). `index_of` maps a digit vector to the original mode index.
std::vector<Core3> split_core(const Core3& c, const std::vector<Index>& digit_sizes,
                              const std::function<Index(const std::vector<Index>&)>& index_of, double eps)
{
    const Index m = static_cast<Index>(digit_sizes.size());
    if (m <= 1) return {c};
    const Index r0 = c.left_rank(), r1 = c.right_rank();
    // Buffer ordered (a, d1, d2, ..., dm, b) with a fastest.
    Vector buf(c.size());
    std::vector<Index> digits(static_cast<std::size_t>(m), 0);
    Index total = 1;
    for (Index f : digit_sizes) total *= f;
    for (Index lin = 0; lin < total; ++lin) {
        Index rem = lin;
        for (Index k = 0; k < m; ++k) {
            digits[static_cast<std::size_t>(k)] = rem % digit_sizes[static_cast<std::size_t>(k)];
            rem /= digit_sizes[static_cast<std::size_t>(k)];
        }
        const Index i = index_of(digits);
        for (Index b = 0; b < r1; ++b)
            for (Index a = 0; a < r0; ++a) buf[a + r0 * (lin + total * b)] = c(a, i, b);
    }
    const double delta = eps * c.values().norm() / std::sqrt(static_cast<double>(m - 1));
    std::vector<Core3> out;
    Index s_prev = r0;
    Index rest = total * r1 / digit_sizes[0];
    Matrix cur = Eigen::Map<const Matrix>(buf.data(), r0 * digit_sizes[0], rest);
    for (Index k = 0; k + 1 < m; ++k) {
        const Index f = digit_sizes[static_cast<std::size_t>(k)];
        auto svd = detail::thin_svd(cur);
        const Index r = detail::truncation_rank(svd.s, delta);
        Matrix u = svd.u.leftCols(r);
        out.emplace_back(s_prev, f, r, Eigen::Map<const Vector>(u.data(), u.size()));
        Matrix next = svd.s.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
        const Index fn = digit_sizes[static_cast<std::size_t>(k + 1)];
        rest /= fn;
        cur = Eigen::Map<const Matrix>(next.data(), r * fn, rest);
        s_prev = r;
    }
    out.emplace_back(s_prev, digit_sizes.back(), r1, Eigen::Map<const Vector>(cur.data(), cur.size()));
    return out;
}

// Contracts consecutive cores into one; `index_of` as in split_core.
Core3 merge_cores(std::span<const Core3> cores, const std::function<Index(const std::vector<Index>&)>& index_of,
                  Index merged_size)
{
    if (cores.size() == 1) return cores[0];
    const Index r0 = cores.front().left_rank(), r1 = cores.back().right_rank();
    const Index m = static_cast<Index>(cores.size());
    std::vector<Index> sizes;
    Index total = 1;
    for (const auto& c : cores) {
        sizes.push_back(c.mode_size());
        total *= c.mode_size();
    }
    if (total != merged_size) throw std::invalid_argument("qtt_unreshape: factor sizes do not match mode");
    Core3 out(r0, merged_size, r1);
    std::vector<Index> digits(static_cast<std::size_t>(m), 0);
    for (Index lin = 0; lin < total; ++lin) {
        Index rem = lin;
        for (Index k = m - 1; k >= 0; --k) {
            digits[static_cast<std::size_t>(k)] = rem % sizes[static_cast<std::size_t>(k)];
            rem /= sizes[static_cast<std::size_t>(k)];
        }
        Matrix p = cores[0].slice(digits[0]);
        for (Index k = 1; k < m; ++k) p = p * cores[static_cast<std::size_t>(k)].slice(digits[static_cast<std::size_t>(k)]);
        out.slice(index_of(digits)) = p;
    }
    return out;
}

Index digits_to_index(const std::vector<Index>& digits, const std::vector<Index>& sizes)
{
    Index i = 0;
    for (std::size_t k = 0; k < digits.size(); ++k) i = i * sizes[k] + digits[k];
    return i;
}

}  // namespace

TTTensor qtt_reshape(const TTTensor& t, const QttFactorization& f, double eps)
{
    const auto shape = t.shape();
    f.validate(shape);
    std::vector<Core3> out;
    for (Index k = 0; k < t.order(); ++k) {
        const auto& fs = f.factors[static_cast<std::size_t>(k)];
        if (fs.size() <= 1) {
            out.push_back(t.core(k));
            continue;
        }
        auto parts = split_core(
            t.core(k), fs, [&](const std::vector<Index>& d) { return digits_to_index(d, fs); }, eps);
        for (auto& p : parts) out.push_back(std::move(p));
    }
    return TTTensor(std::move(out));
}

TTTensor qtt_unreshape(const TTTensor& t, const QttFactorization& f)
{
    std::vector<Core3> out;
    std::size_t pos = 0;
    for (const auto& fs : f.factors) {
        const std::size_t cnt = std::max<std::size_t>(fs.size(), 1);
        if (pos + cnt > static_cast<std::size_t>(t.order()))
            throw std::invalid_argument("qtt_unreshape: factorization does not match tensor order");
        Index n = 1;
        for (Index x : fs) n *= x;
        std::span<const Core3> group(t.cores().data() + pos, cnt);
        out.push_back(merge_cores(
            group, [&](const std::vector<Index>& d) { return fs.empty() ? d[0] : digits_to_index(d, fs); }, n));
        pos += cnt;
    }
    if (pos != static_cast<std::size_t>(t.order()))
        throw std::invalid_argument("qtt_unreshape: factorization does not match tensor order");
    return TTTensor(std::move(out));
}

TTMatrix qtt_reshape(const TTMatrix& a, const QttFactorization& f, double eps)
{
    const auto rows = a.row_shape();
    if (rows != a.col_shape()) throw std::invalid_argument("qtt_reshape: operator must be square");
    f.validate(rows);
    std::vector<Core4> out;
    for (Index k = 0; k < a.order(); ++k) {
        const auto& fs = f.factors[static_cast<std::size_t>(k)];
        const Index n = rows[static_cast<std::size_t>(k)];
        if (fs.size() <= 1) {
            out.push_back(a.core(k));
            continue;
        }
        // merged digit e = row digit + f * col digit
        std::vector<Index> sq;
        for (Index x : fs) sq.push_back(x * x);
        auto index_of = [&](const std::vector<Index>& e) {
            Index i = 0, j = 0;
            for (std::size_t q = 0; q < e.size(); ++q) {
                i = i * fs[q] + e[q] % fs[q];
                j = j * fs[q] + e[q] / fs[q];
            }
            return i + n * j;
        };
        auto parts = split_core(a.core(k).as_core3(), sq, index_of, eps);
        for (std::size_t q = 0; q < parts.size(); ++q) out.push_back(Core4::from_core3(parts[q], fs[q], fs[q]));
    }
    return TTMatrix(std::move(out));
}

TTMatrix qtt_unreshape(const TTMatrix& a, const QttFactorization& f)
{
    std::vector<Core4> out;
    std::size_t pos = 0;
    for (const auto& fs : f.factors) {
        const std::size_t cnt = std::max<std::size_t>(fs.size(), 1);
        if (pos + cnt > static_cast<std::size_t>(a.order()))
            throw std::invalid_argument("qtt_unreshape: factorization does not match operator order");
        Index n = 1;
        for (Index x : fs) n *= x;
        if (fs.size() <= 1) {
            out.push_back(a.core(static_cast<Index>(pos)));
            pos += cnt;
            continue;
        }
        std::vector<Core3> group;
        for (std::size_t q = 0; q < cnt; ++q) group.push_back(a.core(static_cast<Index>(pos + q)).as_core3());
        auto index_of = [&](const std::vector<Index>& e) {
            Index i = 0, j = 0;
            for (std::size_t q = 0; q < e.size(); ++q) {
                i = i * fs[q] + e[q] % fs[q];
                j = j * fs[q] + e[q] / fs[q];
            }
            return i + n * j;
        };
        out.push_back(Core4::from_core3(merge_cores(group, index_of, n * n), n, n));
        pos += cnt;
    }
    if (pos != static_cast<std::size_t>(a.order()))
        throw std::invalid_argument("qtt_unreshape: factorization does not match operator order");
    return TTMatrix(std::move(out));
}

}  // namespace ttiga
