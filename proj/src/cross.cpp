#include "ttiga/cross.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "ttiga/detail/linalg.hpp"

namespace ttiga {

void CrossOptions::validate() const
{
    if (!(tol > 0)) throw std::invalid_argument("CrossOptions: tolerance must be positive");
    if (max_rank < 1) throw std::invalid_argument("CrossOptions: max_rank must be >= 1");
    if (max_sweeps < 1) throw std::invalid_argument("CrossOptions: max_sweeps must be >= 1");
    if (validation_size < 1) throw std::invalid_argument("CrossOptions: validation_size must be >= 1");
}

std::vector<Index> maxvol(const Matrix& m, double delta, int max_iters)
{
    const Index n = m.rows(), r = m.cols();
    if (r == 0) return {};
    if (n < r) throw std::invalid_argument("maxvol: matrix must have at least as many rows as columns");
    // Initial rows: pivots of Gaussian elimination with partial pivoting.
    Matrix a = m;
    std::vector<Index> rows;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    const double scale = m.cwiseAbs().maxCoeff();
    for (Index c = 0; c < r; ++c) {
        Index best = -1;
        double bv = -1;
        for (Index i = 0; i < n; ++i)
            if (!used[static_cast<std::size_t>(i)] && std::abs(a(i, c)) > bv) {
                bv = std::abs(a(i, c));
                best = i;
            }
        if (!(bv > 1e-13 * scale) || scale == 0.0) throw std::invalid_argument("maxvol: matrix is rank deficient");
        used[static_cast<std::size_t>(best)] = true;
        rows.push_back(best);
        const Eigen::RowVectorXd prow = a.row(best) / a(best, c);
        for (Index i = 0; i < n; ++i)
            if (!used[static_cast<std::size_t>(i)]) a.row(i) -= a(i, c) * prow;
    }
    Matrix sub(r, r);
    for (Index k = 0; k < r; ++k) sub.row(k) = m.row(rows[static_cast<std::size_t>(k)]);
    Matrix b = sub.transpose().partialPivLu().solve(m.transpose()).transpose();  // m * sub^{-1}
    const int limit = max_iters > 0 ? max_iters : static_cast<int>(100 * r + 100);
    for (int it = 0; it < limit; ++it) {
        Index i, j;
        const double v = b.cwiseAbs().maxCoeff(&i, &j);
        if (v <= 1.0 + delta) break;
        // Swap row j of the submatrix for row i; rank-one update of b.
        const Vector bj = b.col(j);
        Eigen::RowVectorXd bi = b.row(i);
        bi[j] -= 1.0;
        b.noalias() -= bj * bi / b(i, j);
        rows[static_cast<std::size_t>(j)] = i;
    }
    return rows;
}

namespace {

class CountingOracle {
public:
    explicit CountingOracle(const BlackBoxTensor& f) : f_(f) {}
    Vector operator()(const IndexMatrix& idx)
    {
        count_ += idx.rows();
        Vector v = f_.oracle(idx);
        if (v.size() != idx.rows()) throw std::runtime_error("cross: oracle returned a batch of the wrong size");
        return v;
    }
    std::int64_t count() const { return count_; }

private:
    const BlackBoxTensor& f_;
    std::int64_t count_ = 0;
};

// Index sets: left[k] has k columns (positions 0..k-1), right[k] has d-k
// columns (positions k..d-1). Bond k sits between cores k-1 and k.
struct IndexSets {
    std::vector<IndexMatrix> left, right;
};

// Fiber (left[k], i_k, right[k+1]) in core layout a + r0 (i + n b).
Vector eval_fiber(CountingOracle& f, const IndexSets& s, Index k, Index d, Index n)
{
    const IndexMatrix& l = s.left[static_cast<std::size_t>(k)];
    const IndexMatrix& r = s.right[static_cast<std::size_t>(k + 1)];
    const Index r0 = l.rows(), r1 = r.rows();
    IndexMatrix idx(r0 * n * r1, d);
    for (Index b = 0; b < r1; ++b)
        for (Index i = 0; i < n; ++i)
            for (Index a = 0; a < r0; ++a) {
                const Index row = a + r0 * (i + n * b);
                if (k > 0) idx.row(row).head(k) = l.row(a);
                idx(row, k) = i;
                if (k + 1 < d) idx.row(row).tail(d - k - 1) = r.row(b);
            }
    return f(idx);
}

}  // namespace

TTTensor cross_interpolate(const BlackBoxTensor& f, const CrossOptions& opts, CrossReport* report)
{
    opts.validate();
    const auto& shape = f.shape;
    const Index d = static_cast<Index>(shape.size());
    if (d == 0) throw std::invalid_argument("cross_interpolate: empty shape");
    for (Index n : shape)
        if (n < 1) throw std::invalid_argument("cross_interpolate: mode sizes must be positive");
    if (!f.oracle) throw std::invalid_argument("cross_interpolate: missing oracle");

    CountingOracle oracle(f);
    std::mt19937_64 rng(opts.seed);
    auto rand_index = [&](Index k) { return std::uniform_int_distribution<Index>(0, shape[static_cast<std::size_t>(k)] - 1)(rng); };

    IndexSets s;
    s.left.resize(static_cast<std::size_t>(d + 1));
    s.right.resize(static_cast<std::size_t>(d + 1));
    s.left[0] = IndexMatrix(1, 0);
    s.right[static_cast<std::size_t>(d)] = IndexMatrix(1, 0);
    // Nested random rank-1 right sets.
    for (Index k = d - 1; k >= 1; --k) {
        const auto& prev = s.right[static_cast<std::size_t>(k + 1)];
        IndexMatrix r(1, d - k);
        r(0, 0) = rand_index(k);
        if (d - k > 1) r.row(0).tail(d - k - 1) = prev.row(0);
        s.right[static_cast<std::size_t>(k)] = r;
    }

    // Validation set, fixed for the whole run.
    const Index nval = opts.validation_size;
    IndexMatrix val(nval, d);
    for (Index t = 0; t < nval; ++t)
        for (Index k = 0; k < d; ++k) val(t, k) = rand_index(k);
    Vector fval;
    bool have_fval = false;

    CrossReport rep;
    TTTensor result;
    Index target_rank = 1;
    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        rep.sweeps = sweep;
        // Left-to-right: build cores and nested left sets.
        std::vector<Core3> cores;
        double fmax = 0.0;
        for (Index k = 0; k < d; ++k) {
            const Index n = shape[static_cast<std::size_t>(k)];
            const Index r0 = s.left[static_cast<std::size_t>(k)].rows();
            const Index r1 = s.right[static_cast<std::size_t>(k + 1)].rows();
            Vector fib = eval_fiber(oracle, s, k, d, n);
            fmax = std::max(fmax, fib.cwiseAbs().maxCoeff());
            if (k == d - 1) {
                cores.emplace_back(r0, n, r1, std::move(fib));
                break;
            }
            ConstMatrixMap fm(fib.data(), r0 * n, r1);
            auto qr = detail::thin_qr(Matrix(fm));
            const Matrix& q = qr.q;
            const auto rows = maxvol(q);
            Matrix sub(q.cols(), q.cols());
            for (Index t = 0; t < q.cols(); ++t) sub.row(t) = q.row(rows[static_cast<std::size_t>(t)]);
            // Q Q[rows]^{-1}; the next fiber is sampled on the selected rows.
            const Matrix core = sub.transpose().partialPivLu().solve(q.transpose()).transpose();
            cores.emplace_back(r0, n, q.cols(), Eigen::Map<const Vector>(core.data(), core.size()));
            IndexMatrix nl(q.cols(), k + 1);
            for (Index t = 0; t < q.cols(); ++t) {
                const Index row = rows[static_cast<std::size_t>(t)];
                const Index a = row % r0, i = row / r0;
                if (k > 0) nl.row(t).head(k) = s.left[static_cast<std::size_t>(k)].row(a);
                nl(t, k) = i;
            }
            s.left[static_cast<std::size_t>(k + 1)] = nl;
        }
        result = TTTensor(std::move(cores));

        if (!have_fval) {
            fval = oracle(val);
            have_fval = true;
        }
        double err = 0.0;
        const double ref = std::max(fmax, fval.cwiseAbs().maxCoeff());
        for (Index t = 0; t < nval; ++t) {
            std::vector<Index> idx(val.row(t).data(), val.row(t).data() + d);
            err = std::max(err, std::abs(result.entry(idx) - fval[t]));
        }
        rep.error = ref > 0 ? err / ref : err;
        if (rep.error <= opts.tol) {
            rep.converged = true;
            break;
        }
        if (sweep == opts.max_sweeps) break;

        // Grow the left sets by one random multi-index each, then rebuild the
        // right sets right-to-left with maxvol on row-orthonormal unfoldings.
        target_rank = std::min(target_rank + 1, opts.max_rank);
        for (Index k = 1; k < d; ++k) {
            auto& l = s.left[static_cast<std::size_t>(k)];
            Index cap = 1;
            for (Index t = 0; t < k && cap < target_rank; ++t) cap *= shape[static_cast<std::size_t>(t)];
            const Index want = std::min(target_rank, cap);
            std::set<std::vector<Index>> seen;
            for (Index t = 0; t < l.rows(); ++t) seen.insert(std::vector<Index>(l.row(t).data(), l.row(t).data() + k));
            std::vector<std::vector<Index>> extra;
            for (int tries = 0; static_cast<Index>(seen.size()) < want && tries < 100; ++tries) {
                std::vector<Index> cand(static_cast<std::size_t>(k));
                for (Index t = 0; t < k; ++t) cand[static_cast<std::size_t>(t)] = rand_index(t);
                if (seen.insert(cand).second) extra.push_back(cand);
            }
            if (!extra.empty()) {
                IndexMatrix nl(l.rows() + static_cast<Index>(extra.size()), k);
                nl.topRows(l.rows()) = l;
                for (std::size_t e = 0; e < extra.size(); ++e)
                    for (Index t = 0; t < k; ++t) nl(l.rows() + static_cast<Index>(e), t) = extra[e][static_cast<std::size_t>(t)];
                l = nl;
            }
        }
        for (Index k = d - 1; k >= 1; --k) {
            const Index n = shape[static_cast<std::size_t>(k)];
            const Index r0 = s.left[static_cast<std::size_t>(k)].rows();
            const Index r1 = s.right[static_cast<std::size_t>(k + 1)].rows();
            Vector fib = eval_fiber(oracle, s, k, d, n);
            ConstMatrixMap fm(fib.data(), r0, n * r1);
            auto qr = detail::thin_qr(Matrix(fm.transpose()));  // (n r1) x r'
            const auto cols = maxvol(qr.q);
            const Index rn = qr.q.cols();
            IndexMatrix nr(rn, d - k);
            for (Index t = 0; t < rn; ++t) {
                const Index c = cols[static_cast<std::size_t>(t)];
                const Index i = c % n, b = c / n;
                nr(t, 0) = i;
                if (d - k > 1) nr.row(t).tail(d - k - 1) = s.right[static_cast<std::size_t>(k + 1)].row(b);
            }
            s.right[static_cast<std::size_t>(k)] = nr;
        }
    }
    rep.evaluations = oracle.count();
    rep.left = std::move(s.left);
    rep.right = std::move(s.right);
    if (report) *report = rep;
    return result;
}

}  // namespace ttiga
