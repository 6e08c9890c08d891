#include "ttiga/tt_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ttiga/detail/linalg.hpp"

namespace ttiga {

namespace {

std::string shape_string(const std::vector<Index>& s)
{
    std::string out = "(";
    for (std::size_t k = 0; k < s.size(); ++k) out += (k ? "," : "") + std::to_string(s[k]);
    return out + ")";
}

void require_same_shape(const std::vector<Index>& a, const std::vector<Index>& b, const char* what)
{
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                                    shape_string(b));
}

// Row-major dense data -> first-index-fastest order.
std::vector<double> to_column_major(const DenseTensor& x)
{
    const auto& shape = x.shape();
    const std::size_t d = shape.size();
    std::vector<Index> colstride(d);
    Index s = 1;
    for (std::size_t k = 0; k < d; ++k) {
        colstride[k] = s;
        s *= shape[k];
    }
    std::vector<double> out(static_cast<std::size_t>(x.size()));
    std::vector<Index> idx(d, 0);
    Index cpos = 0;
    for (Index lin = 0; lin < x.size(); ++lin) {
        out[static_cast<std::size_t>(cpos)] = x[lin];
        for (std::size_t k = d; k-- > 0;) {
            if (++idx[k] < shape[k]) {
                cpos += colstride[k];
                break;
            }
            cpos -= colstride[k] * (shape[k] - 1);
            idx[k] = 0;
        }
    }
    return out;
}

}  // namespace

// ------------------------------------------------------------------ Core3

Core3::Core3(Index r0, Index n, Index r1) : r0_(r0), n_(n), r1_(r1), data_(Vector::Zero(r0 * n * r1))
{
    if (r0 <= 0 || n <= 0 || r1 <= 0) throw std::invalid_argument("Core3: dimensions must be positive");
}

Core3::Core3(Index r0, Index n, Index r1, Vector data) : r0_(r0), n_(n), r1_(r1), data_(std::move(data))
{
    if (r0 <= 0 || n <= 0 || r1 <= 0) throw std::invalid_argument("Core3: dimensions must be positive");
    if (data_.size() != r0 * n * r1) throw std::invalid_argument("Core3: data size mismatch");
}

Core3 Core3::transposed() const
{
    Core3 out(r1_, n_, r0_);
    for (Index b = 0; b < r1_; ++b)
        for (Index i = 0; i < n_; ++i)
            for (Index a = 0; a < r0_; ++a) out(b, i, a) = (*this)(a, i, b);
    return out;
}

// ------------------------------------------------------------------ Core4

Core4::Core4(Index r0, Index m, Index n, Index r1)
    : r0_(r0), m_(m), n_(n), r1_(r1), data_(Vector::Zero(r0 * m * n * r1))
{
    if (r0 <= 0 || m <= 0 || n <= 0 || r1 <= 0) throw std::invalid_argument("Core4: dimensions must be positive");
}

Core3 Core4::as_core3() const { return Core3(r0_, m_ * n_, r1_, data_); }

Core4 Core4::from_core3(const Core3& c, Index m, Index n)
{
    if (c.mode_size() != m * n) throw std::invalid_argument("Core4::from_core3: mode size mismatch");
    Core4 out(c.left_rank(), m, n, c.right_rank());
    out.data_ = c.values();
    return out;
}

Core4 Core4::transposed_ranks() const
{
    Core4 out(r1_, m_, n_, r0_);
    for (Index b = 0; b < r1_; ++b)
        for (Index j = 0; j < n_; ++j)
            for (Index i = 0; i < m_; ++i)
                for (Index a = 0; a < r0_; ++a) out(b, i, j, a) = (*this)(a, i, j, b);
    return out;
}

Core4 Core4::transposed_modes() const
{
    Core4 out(r0_, n_, m_, r1_);
    for (Index b = 0; b < r1_; ++b)
        for (Index j = 0; j < n_; ++j)
            for (Index i = 0; i < m_; ++i)
                for (Index a = 0; a < r0_; ++a) out(a, j, i, b) = (*this)(a, i, j, b);
    return out;
}

// ------------------------------------------------------------------ TTTensor

TTTensor::TTTensor(std::vector<Core3> cores) : cores_(std::move(cores)) { validate(); }

void TTTensor::validate() const
{
    if (cores_.empty()) throw std::invalid_argument("TTTensor: no cores");
    if (cores_.front().left_rank() != 1 || cores_.back().right_rank() != 1)
        throw std::invalid_argument("TTTensor: boundary ranks must be 1");
    for (std::size_t k = 0; k + 1 < cores_.size(); ++k)
        if (cores_[k].right_rank() != cores_[k + 1].left_rank())
            throw std::invalid_argument("TTTensor: rank mismatch between cores " + std::to_string(k) + " and " +
                                        std::to_string(k + 1));
}

TTTensor TTTensor::constant(std::span<const Index> shape, double value)
{
    if (shape.empty()) throw std::invalid_argument("TTTensor::constant: empty shape");
    std::vector<Core3> cores;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        Core3 c(1, shape[k], 1);
        c.values().setConstant(k == 0 ? value : 1.0);
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

TTTensor TTTensor::zeros(std::span<const Index> shape) { return constant(shape, 0.0); }

TTTensor TTTensor::rank_one(const std::vector<Vector>& factors)
{
    std::vector<Core3> cores;
    for (const auto& f : factors) cores.emplace_back(1, f.size(), 1, f);
    return TTTensor(std::move(cores));
}

std::vector<Index> TTTensor::shape() const
{
    std::vector<Index> s;
    for (const auto& c : cores_) s.push_back(c.mode_size());
    return s;
}

std::vector<Index> TTTensor::ranks() const
{
    std::vector<Index> r{1};
    for (const auto& c : cores_) r.push_back(c.right_rank());
    return r;
}

Index TTTensor::max_rank() const
{
    auto r = ranks();
    return *std::max_element(r.begin(), r.end());
}

double TTTensor::mean_rank() const
{
    auto r = ranks();
    return static_cast<double>(std::accumulate(r.begin(), r.end(), Index{0})) / static_cast<double>(r.size());
}

Index TTTensor::storage() const
{
    Index s = 0;
    for (const auto& c : cores_) s += c.size();
    return s;
}

double TTTensor::entry(std::span<const Index> index) const
{
    if (static_cast<Index>(index.size()) != order()) throw std::invalid_argument("TTTensor::entry: order mismatch");
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (std::size_t k = 0; k < cores_.size(); ++k) {
        if (index[k] < 0 || index[k] >= cores_[k].mode_size())
            throw std::out_of_range("TTTensor::entry: index out of range");
        v = v * cores_[k].slice(index[k]);
    }
    return v(0);
}

TTTensor TTTensor::reversed() const
{
    std::vector<Core3> out;
    for (auto it = cores_.rbegin(); it != cores_.rend(); ++it) out.push_back(it->transposed());
    return TTTensor(std::move(out));
}

// ------------------------------------------------------------------ TTMatrix

TTMatrix::TTMatrix(std::vector<Core4> cores) : cores_(std::move(cores)) { validate(); }

void TTMatrix::validate() const
{
    if (cores_.empty()) throw std::invalid_argument("TTMatrix: no cores");
    if (cores_.front().left_rank() != 1 || cores_.back().right_rank() != 1)
        throw std::invalid_argument("TTMatrix: boundary ranks must be 1");
    for (std::size_t k = 0; k + 1 < cores_.size(); ++k)
        if (cores_[k].right_rank() != cores_[k + 1].left_rank())
            throw std::invalid_argument("TTMatrix: rank mismatch between cores");
}

TTMatrix TTMatrix::identity(std::span<const Index> shape)
{
    std::vector<Matrix> f;
    for (Index n : shape) f.push_back(Matrix::Identity(n, n));
    return kronecker(f);
}

TTMatrix TTMatrix::kronecker(const std::vector<Matrix>& factors)
{
    std::vector<Core4> cores;
    for (const auto& m : factors) {
        Core4 c(1, m.rows(), m.cols(), 1);
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i) c(0, i, j, 0) = m(i, j);
        cores.push_back(std::move(c));
    }
    return TTMatrix(std::move(cores));
}

TTMatrix TTMatrix::diagonal(const TTTensor& t)
{
    std::vector<Core4> cores;
    for (const auto& c : t.cores()) {
        Core4 d(c.left_rank(), c.mode_size(), c.mode_size(), c.right_rank());
        for (Index b = 0; b < c.right_rank(); ++b)
            for (Index i = 0; i < c.mode_size(); ++i)
                for (Index a = 0; a < c.left_rank(); ++a) d(a, i, i, b) = c(a, i, b);
        cores.push_back(std::move(d));
    }
    return TTMatrix(std::move(cores));
}

std::vector<Index> TTMatrix::row_shape() const
{
    std::vector<Index> s;
    for (const auto& c : cores_) s.push_back(c.row_size());
    return s;
}

std::vector<Index> TTMatrix::col_shape() const
{
    std::vector<Index> s;
    for (const auto& c : cores_) s.push_back(c.col_size());
    return s;
}

std::vector<Index> TTMatrix::ranks() const
{
    std::vector<Index> r{1};
    for (const auto& c : cores_) r.push_back(c.right_rank());
    return r;
}

Index TTMatrix::max_rank() const
{
    auto r = ranks();
    return *std::max_element(r.begin(), r.end());
}

double TTMatrix::mean_rank() const
{
    auto r = ranks();
    return static_cast<double>(std::accumulate(r.begin(), r.end(), Index{0})) / static_cast<double>(r.size());
}

Index TTMatrix::storage() const
{
    Index s = 0;
    for (const auto& c : cores_) s += c.size();
    return s;
}

double TTMatrix::entry(std::span<const Index> row, std::span<const Index> col) const
{
    if (static_cast<Index>(row.size()) != order() || static_cast<Index>(col.size()) != order())
        throw std::invalid_argument("TTMatrix::entry: order mismatch");
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (std::size_t k = 0; k < cores_.size(); ++k) {
        const auto& c = cores_[k];
        Matrix s(c.left_rank(), c.right_rank());
        for (Index b = 0; b < c.right_rank(); ++b)
            for (Index a = 0; a < c.left_rank(); ++a) s(a, b) = c(a, row[k], col[k], b);
        v = v * s;
    }
    return v(0);
}

TTMatrix TTMatrix::reversed() const
{
    std::vector<Core4> out;
    for (auto it = cores_.rbegin(); it != cores_.rend(); ++it) out.push_back(it->transposed_ranks());
    return TTMatrix(std::move(out));
}

TTMatrix TTMatrix::transposed() const
{
    std::vector<Core4> out;
    for (const auto& c : cores_) out.push_back(c.transposed_modes());
    return TTMatrix(std::move(out));
}

TTTensor TTMatrix::as_tensor() const
{
    std::vector<Core3> out;
    for (const auto& c : cores_) out.push_back(c.as_core3());
    return TTTensor(std::move(out));
}

TTMatrix TTMatrix::from_tensor(const TTTensor& t, std::span<const Index> rows, std::span<const Index> cols)
{
    if (static_cast<Index>(rows.size()) != t.order() || static_cast<Index>(cols.size()) != t.order())
        throw std::invalid_argument("TTMatrix::from_tensor: order mismatch");
    std::vector<Core4> out;
    for (Index k = 0; k < t.order(); ++k) out.push_back(Core4::from_core3(t.core(k), rows[k], cols[k]));
    return TTMatrix(std::move(out));
}

TTTensor TTMatrix::diagonal_part() const
{
    if (row_shape() != col_shape()) throw std::invalid_argument("TTMatrix::diagonal_part: operator not square");
    std::vector<Core3> out;
    for (const auto& c : cores_) {
        Core3 d(c.left_rank(), c.row_size(), c.right_rank());
        for (Index b = 0; b < c.right_rank(); ++b)
            for (Index i = 0; i < c.row_size(); ++i)
                for (Index a = 0; a < c.left_rank(); ++a) d(a, i, b) = c(a, i, i, b);
        out.push_back(std::move(d));
    }
    return TTTensor(std::move(out));
}

// ------------------------------------------------------------------ decomposition

TTTensor tt_from_dense(const DenseTensor& x, double eps, Index max_rank)
{
    if (eps < 0) throw std::invalid_argument("tt_from_dense: tolerance must be non-negative");
    const auto& shape = x.shape();
    if (shape.empty()) throw std::invalid_argument("tt_from_dense: empty shape");
    const Index d = static_cast<Index>(shape.size());
    std::vector<double> col = to_column_major(x);
    if (d == 1) {
        Vector v = Eigen::Map<const Vector>(col.data(), x.size());
        return TTTensor({Core3(1, shape[0], 1, v)});
    }
    const double delta = eps / std::sqrt(static_cast<double>(d - 1)) * x.frobenius_norm();

    std::vector<Core3> cores;
    Matrix c = Eigen::Map<const Matrix>(col.data(), shape[0], x.size() / shape[0]);
    Index r_prev = 1;
    Index rest = x.size() / shape[0];
    for (Index k = 0; k + 1 < d; ++k) {
        // c is (r_prev * n_k) x rest
        auto svd = detail::thin_svd(c);
        const Index r = detail::truncation_rank(svd.s, delta, max_rank);
        Vector core = Eigen::Map<const Vector>(svd.u.data(), c.rows() * r);
        cores.emplace_back(r_prev, shape[k], r, std::move(core));
        Matrix next = svd.s.head(r).asDiagonal() * svd.v.leftCols(r).transpose();  // r x rest
        rest /= shape[k + 1];
        c = Eigen::Map<const Matrix>(next.data(), r * shape[k + 1], rest);
        r_prev = r;
    }
    Vector last = Eigen::Map<const Vector>(c.data(), c.size());
    cores.emplace_back(r_prev, shape[d - 1], 1, std::move(last));
    return TTTensor(std::move(cores));
}

DenseTensor tt_full(const TTTensor& t, Index budget)
{
    const auto shape = t.shape();
    long double total = 1;
    for (Index n : shape) total *= n;
    if (total > static_cast<long double>(budget))
        throw std::length_error("tt_full: tensor with " + std::to_string(static_cast<double>(total)) +
                                " entries exceeds the materialization budget");
    const Index d = t.order();
    // r x Q matrix, columns ordered row-major over trailing modes
    Matrix r = t.core(d - 1).right_unfolding();
    for (Index k = d - 2; k >= 0; --k) {
        const auto& c = t.core(k);
        const Index q = r.cols();
        Matrix next(c.left_rank(), c.mode_size() * q);
        for (Index i = 0; i < c.mode_size(); ++i) next.middleCols(i * q, q).noalias() = c.slice(i) * r;
        r = std::move(next);
    }
    std::vector<double> data(r.data(), r.data() + r.size());
    return DenseTensor(shape, std::move(data));
}

Matrix tt_full(const TTMatrix& a, Index budget)
{
    const auto rows = a.row_shape();
    const auto cols = a.col_shape();
    const DenseTensor merged = tt_full(a.as_tensor(), budget);
    Index nrows = 1, ncols = 1;
    for (Index n : rows) nrows *= n;
    for (Index n : cols) ncols *= n;
    Matrix out(nrows, ncols);
    const std::size_t d = rows.size();
    std::vector<Index> idx(d, 0);
    for (Index lin = 0; lin < merged.size(); ++lin) {
        Index r = 0, c = 0;
        for (std::size_t k = 0; k < d; ++k) {
            r = r * rows[k] + idx[k] % rows[k];
            c = c * cols[k] + idx[k] / rows[k];
        }
        out(r, c) = merged[lin];
        for (std::size_t k = d; k-- > 0;) {
            if (++idx[k] < rows[k] * cols[k]) break;
            idx[k] = 0;
        }
    }
    return out;
}

// ------------------------------------------------------------------ orthogonalization / rounding

double right_orthogonalize(TTTensor& t)
{
    const Index d = t.order();
    for (Index k = d - 1; k >= 1; --k) {
        Core3& c = t.core(k);
        Matrix mt = c.right_unfolding().transpose();  // (n r1) x r0
        auto qr = detail::thin_qr(mt);
        const Index rn = qr.q.cols();
        Matrix qt = qr.q.transpose();  // rn x (n r1)
        Core3 nc(rn, c.mode_size(), c.right_rank(), Eigen::Map<const Vector>(qt.data(), qt.size()));
        Core3& p = t.core(k - 1);
        Matrix pl = p.left_unfolding() * qr.r.transpose();  // (r0 n) x rn
        Core3 np(p.left_rank(), p.mode_size(), rn, Eigen::Map<const Vector>(pl.data(), pl.size()));
        c = std::move(nc);
        p = std::move(np);
    }
    return t.core(0).values().norm();
}

double left_orthogonalize(TTTensor& t)
{
    const Index d = t.order();
    for (Index k = 0; k + 1 < d; ++k) {
        Core3& c = t.core(k);
        auto qr = detail::thin_qr(Matrix(c.left_unfolding()));
        const Index rn = qr.q.cols();
        Core3 nc(c.left_rank(), c.mode_size(), rn, Eigen::Map<const Vector>(qr.q.data(), qr.q.size()));
        Core3& nx = t.core(k + 1);
        Matrix nr = qr.r * nx.right_unfolding();
        Core3 nn(rn, nx.mode_size(), nx.right_rank(), Eigen::Map<const Vector>(nr.data(), nr.size()));
        c = std::move(nc);
        nx = std::move(nn);
    }
    return t.core(d - 1).values().norm();
}

TTTensor tt_round(const TTTensor& t, double eps, Index max_rank)
{
    if (eps < 0) throw std::invalid_argument("tt_round: tolerance must be non-negative");
    TTTensor out = t;
    const Index d = out.order();
    const double nrm = right_orthogonalize(out);
    if (d == 1) return out;
    const double delta = eps / std::sqrt(static_cast<double>(d - 1)) * nrm;
    for (Index k = 0; k + 1 < d; ++k) {
        Core3& c = out.core(k);
        auto svd = detail::thin_svd(Matrix(c.left_unfolding()));
        const Index r = detail::truncation_rank(svd.s, delta, max_rank);
        Matrix u = svd.u.leftCols(r);
        Core3 nc(c.left_rank(), c.mode_size(), r, Eigen::Map<const Vector>(u.data(), u.size()));
        Matrix sv = svd.s.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
        Core3& nx = out.core(k + 1);
        Matrix nr = sv * nx.right_unfolding();
        Core3 nn(r, nx.mode_size(), nx.right_rank(), Eigen::Map<const Vector>(nr.data(), nr.size()));
        c = std::move(nc);
        nx = std::move(nn);
    }
    return out;
}

TTMatrix tt_round(const TTMatrix& a, double eps, Index max_rank)
{
    auto rows = a.row_shape();
    auto cols = a.col_shape();
    return TTMatrix::from_tensor(tt_round(a.as_tensor(), eps, max_rank), rows, cols);
}

// ------------------------------------------------------------------ arithmetic

TTTensor tt_add(const TTTensor& a, const TTTensor& b)
{
    require_same_shape(a.shape(), b.shape(), "tt_add");
    const Index d = a.order();
    if (d == 1) {
        Core3 c = a.core(0);
        c.values() += b.core(0).values();
        return TTTensor({c});
    }
    std::vector<Core3> cores;
    for (Index k = 0; k < d; ++k) {
        const Core3& ca = a.core(k);
        const Core3& cb = b.core(k);
        const bool first = k == 0, last = k == d - 1;
        const Index r0 = first ? 1 : ca.left_rank() + cb.left_rank();
        const Index r1 = last ? 1 : ca.right_rank() + cb.right_rank();
        const Index oa0 = 0, ob0 = first ? 0 : ca.left_rank();
        const Index oa1 = 0, ob1 = last ? 0 : ca.right_rank();
        Core3 c(r0, ca.mode_size(), r1);
        for (Index i = 0; i < ca.mode_size(); ++i) {
            c.slice(i).block(oa0, oa1, ca.left_rank(), ca.right_rank()) = ca.slice(i);
            c.slice(i).block(ob0, ob1, cb.left_rank(), cb.right_rank()) += cb.slice(i);
        }
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

TTMatrix tt_add(const TTMatrix& a, const TTMatrix& b)
{
    if (a.row_shape() != b.row_shape() || a.col_shape() != b.col_shape())
        throw std::invalid_argument("tt_add: operator shape mismatch");
    auto rows = a.row_shape();
    auto cols = a.col_shape();
    return TTMatrix::from_tensor(tt_add(a.as_tensor(), b.as_tensor()), rows, cols);
}

TTTensor tt_scale(const TTTensor& a, double s)
{
    TTTensor out = a;
    out.core(0).values() *= s;
    return out;
}

TTMatrix tt_scale(const TTMatrix& a, double s)
{
    TTMatrix out = a;
    out.core(0).values() *= s;
    return out;
}

TTTensor tt_axpy(const TTTensor& a, double s, const TTTensor& b) { return tt_add(a, tt_scale(b, s)); }

TTTensor tt_hadamard(const TTTensor& a, const TTTensor& b)
{
    require_same_shape(a.shape(), b.shape(), "tt_hadamard");
    std::vector<Core3> cores;
    for (Index k = 0; k < a.order(); ++k) {
        const Core3& ca = a.core(k);
        const Core3& cb = b.core(k);
        const Index ra0 = ca.left_rank(), ra1 = ca.right_rank();
        const Index rb0 = cb.left_rank(), rb1 = cb.right_rank();
        Core3 c(ra0 * rb0, ca.mode_size(), ra1 * rb1);
        for (Index i = 0; i < ca.mode_size(); ++i) {
            auto sa = ca.slice(i);
            auto sb = cb.slice(i);
            auto sc = c.slice(i);
            for (Index b1 = 0; b1 < rb1; ++b1)
                for (Index b0 = 0; b0 < rb0; ++b0) sc.block(b0 * ra0, b1 * ra1, ra0, ra1) = sb(b0, b1) * sa;
        }
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

double tt_dot(const TTTensor& a, const TTTensor& b)
{
    require_same_shape(a.shape(), b.shape(), "tt_dot");
    Matrix w = Matrix::Ones(1, 1);
    for (Index k = 0; k < a.order(); ++k) {
        const Core3& ca = a.core(k);
        const Core3& cb = b.core(k);
        Matrix next = Matrix::Zero(ca.right_rank(), cb.right_rank());
        for (Index i = 0; i < ca.mode_size(); ++i) next.noalias() += ca.slice(i).transpose() * (w * cb.slice(i));
        w = std::move(next);
    }
    return w(0, 0);
}

double tt_dot3(const TTTensor& a, const TTTensor& w, const TTTensor& b)
{
    require_same_shape(a.shape(), b.shape(), "tt_dot3");
    require_same_shape(a.shape(), w.shape(), "tt_dot3");
    // One (ra x rb) interface matrix per rank index of w.
    std::vector<Matrix> phi{Matrix::Ones(1, 1)};
    for (Index k = 0; k < a.order(); ++k) {
        const Core3& ca = a.core(k);
        const Core3& cw = w.core(k);
        const Core3& cb = b.core(k);
        std::vector<Matrix> next(static_cast<std::size_t>(cw.right_rank()), Matrix::Zero(ca.right_rank(), cb.right_rank()));
        for (Index i = 0; i < ca.mode_size(); ++i) {
            const Matrix as = ca.slice(i).transpose();
            const Matrix bs = cb.slice(i);
            for (Index q = 0; q < cw.left_rank(); ++q) {
                const Matrix t = as * (phi[static_cast<std::size_t>(q)] * bs);
                for (Index q1 = 0; q1 < cw.right_rank(); ++q1) {
                    const double c = cw(q, i, q1);
                    if (c != 0.0) next[static_cast<std::size_t>(q1)].noalias() += c * t;
                }
            }
        }
        phi = std::move(next);
    }
    return phi[0](0, 0);
}

double tt_norm(const TTTensor& t)
{
    TTTensor tmp = t;
    return right_orthogonalize(tmp);
}

double tt_sum(const TTTensor& t)
{
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (const auto& c : t.cores()) {
        Matrix s = Matrix::Zero(c.left_rank(), c.right_rank());
        for (Index i = 0; i < c.mode_size(); ++i) s += c.slice(i);
        v = v * s;
    }
    return v(0);
}

TTTensor ttm_apply(const TTMatrix& a, const TTTensor& x)
{
    require_same_shape(a.col_shape(), x.shape(), "ttm_apply");
    std::vector<Core3> cores;
    for (Index k = 0; k < a.order(); ++k) {
        const Core4& ca = a.core(k);
        const Core3& cx = x.core(k);
        const Index ra0 = ca.left_rank(), ra1 = ca.right_rank(), m = ca.row_size(), n = ca.col_size();
        const Index rx0 = cx.left_rank(), rx1 = cx.right_rank();
        // x permuted to n x (rx0 rx1)
        Matrix xp(n, rx0 * rx1);
        for (Index b = 0; b < rx1; ++b)
            for (Index j = 0; j < n; ++j)
                for (Index a0 = 0; a0 < rx0; ++a0) xp(j, a0 + rx0 * b) = cx(a0, j, b);
        Core3 c(ra0 * rx0, m, ra1 * rx1);
        for (Index beta = 0; beta < ra1; ++beta) {
            ConstMatrixMap ab(ca.values().data() + beta * ra0 * m * n, ra0 * m, n);
            Matrix t = ab * xp;  // (alpha, m) x (a, b)
            for (Index b = 0; b < rx1; ++b)
                for (Index a0 = 0; a0 < rx0; ++a0)
                    for (Index i = 0; i < m; ++i)
                        for (Index alpha = 0; alpha < ra0; ++alpha)
                            c(alpha + ra0 * a0, i, beta + ra1 * b) = t(alpha + ra0 * i, a0 + rx0 * b);
        }
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

TTMatrix ttm_compose(const TTMatrix& a, const TTMatrix& b)
{
    require_same_shape(a.col_shape(), b.row_shape(), "ttm_compose");
    std::vector<Core4> cores;
    for (Index k = 0; k < a.order(); ++k) {
        const Core4& ca = a.core(k);
        const Core4& cb = b.core(k);
        const Index ra0 = ca.left_rank(), ra1 = ca.right_rank(), rb0 = cb.left_rank(), rb1 = cb.right_rank();
        const Index m = ca.row_size(), n = ca.col_size(), p = cb.col_size();
        Core4 c(ra0 * rb0, m, p, ra1 * rb1);
        Matrix am(m, n), bm(n, p);
        for (Index beta = 0; beta < ra1; ++beta)
            for (Index alpha = 0; alpha < ra0; ++alpha) {
                for (Index j = 0; j < n; ++j)
                    for (Index i = 0; i < m; ++i) am(i, j) = ca(alpha, i, j, beta);
                for (Index beta2 = 0; beta2 < rb1; ++beta2)
                    for (Index alpha2 = 0; alpha2 < rb0; ++alpha2) {
                        for (Index l = 0; l < p; ++l)
                            for (Index j = 0; j < n; ++j) bm(j, l) = cb(alpha2, j, l, beta2);
                        Matrix prod = am * bm;
                        for (Index l = 0; l < p; ++l)
                            for (Index i = 0; i < m; ++i)
                                c(alpha + ra0 * alpha2, i, l, beta + ra1 * beta2) = prod(i, l);
                    }
            }
        cores.push_back(std::move(c));
    }
    return TTMatrix(std::move(cores));
}

TTTensor tt_mode_product(const TTTensor& t, Index mode, const Matrix& m)
{
    if (mode < 0 || mode >= t.order()) throw std::out_of_range("tt_mode_product: bad mode");
    const Core3& c = t.core(mode);
    if (m.cols() != c.mode_size()) throw std::invalid_argument("tt_mode_product: matrix size mismatch");
    const Index r0 = c.left_rank(), r1 = c.right_rank(), n = c.mode_size(), nn = m.rows();
    Core3 out(r0, nn, r1);
    for (Index b = 0; b < r1; ++b) {
        ConstMatrixMap blk(c.values().data() + b * r0 * n, r0, n);
        MatrixMap dst(out.values().data() + b * r0 * nn, r0, nn);
        dst.noalias() = blk * m.transpose();
    }
    TTTensor res = t;
    res.core(mode) = std::move(out);
    return res;
}

}  // namespace ttiga
