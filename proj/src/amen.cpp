#include "ttiga/amen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "ttiga/detail/linalg.hpp"

namespace ttiga {

void SolveOptions::validate() const
{
    if (!(eps > 0)) throw std::invalid_argument("SolveOptions: eps must be positive");
    if (max_sweeps < 1) throw std::invalid_argument("SolveOptions: max_sweeps must be >= 1");
    if (kickrank < 0) throw std::invalid_argument("SolveOptions: kickrank must be >= 0");
    if (max_rank < 0) throw std::invalid_argument("SolveOptions: max_rank must be >= 0");
    if (gmres_restart < 1 || gmres_max_iters < 1) throw std::invalid_argument("SolveOptions: bad GMRES limits");
}

std::string SolveReport::to_log() const
{
    std::ostringstream os;
    os << "# sweep local_residual max_rank\n";
    for (std::size_t s = 0; s < local_residuals.size(); ++s)
        os << s + 1 << ' ' << local_residuals[s] << ' ' << (s < rank_history.size() ? rank_history[s] : 0) << '\n';
    os << "# residual " << residual << " sweeps " << sweeps << " converged " << (converged ? 1 : 0) << " time "
       << seconds << '\n';
    if (!message.empty()) os << "# " << message << '\n';
    return os.str();
}

namespace {

// Contraction of a test train Y, the operator and a trial train X over the
// cores on one side of a bond. Entry (y, a, x) at y + ry * (a + ra * x).
struct Iface3 {
    Index ry = 1, ra = 1, rx = 1;
    Vector v = Vector::Ones(1);
};

struct OpBlock {
    Index i, j;
    Matrix a;  // ra0 x ra1
};

// Operator core split into its nonzero (row, column) blocks.
struct OpCore {
    Index ra0 = 1, m = 1, n = 1, ra1 = 1;
    std::vector<OpBlock> blocks;
};

OpCore make_op_core(const Core4& c)
{
    OpCore o{c.left_rank(), c.row_size(), c.col_size(), c.right_rank(), {}};
    const double amax = c.size() ? c.values().cwiseAbs().maxCoeff() : 0.0;
    // Rounding leaves fill-in at the level of machine precision in blocks
    // that are zero mathematically; dropping it keeps banded cores sparse.
    const double thr = 1e-14 * amax;
    for (Index j = 0; j < o.n; ++j)
        for (Index i = 0; i < o.m; ++i) {
            Matrix blk(o.ra0, o.ra1);
            for (Index b = 0; b < o.ra1; ++b)
                for (Index a = 0; a < o.ra0; ++a) blk(a, b) = c(a, i, j, b);
            if (blk.cwiseAbs().maxCoeff() > thr) o.blocks.push_back({i, j, std::move(blk)});
        }
    return o;
}

std::vector<OpCore> make_op_cores(const TTMatrix& a)
{
    std::vector<OpCore> out;
    for (const auto& c : a.cores()) out.push_back(make_op_core(c));
    return out;
}

// Z((y0 + ry0 i), (a1 + ra1 x1)) = sum L(y0, a0, x0) A(a0, i, j, a1) X(x0, j, x1)
Matrix contract_open(const Iface3& l, const OpCore& a, const Core3& x)
{
    const Index ry0 = l.ry, ra0 = l.ra, rx0 = l.rx, n = a.n, m = a.m, rx1 = x.right_rank(), ra1 = a.ra1;
    ConstMatrixMap lm(l.v.data(), ry0 * ra0, rx0);
    const Matrix t1 = lm * x.right_unfolding();  // (y0 + ry0 a0) x (j + n x1)
    Matrix w(ry0 * rx1, ra0 * n);                 // W_j((y0 + ry0 x1), a0)
    for (Index x1 = 0; x1 < rx1; ++x1)
        for (Index j = 0; j < n; ++j)
            for (Index a0 = 0; a0 < ra0; ++a0)
                w.col(j * ra0 + a0).segment(ry0 * x1, ry0) = t1.col(j + n * x1).segment(ry0 * a0, ry0);
    Matrix v = Matrix::Zero(ry0 * rx1, ra1 * m);  // V_i((y0 + ry0 x1), a1)
    for (const auto& b : a.blocks) v.middleCols(b.i * ra1, ra1).noalias() += w.middleCols(b.j * ra0, ra0) * b.a;
    Matrix z(ry0 * m, ra1 * rx1);
    for (Index x1 = 0; x1 < rx1; ++x1)
        for (Index a1 = 0; a1 < ra1; ++a1)
            for (Index i = 0; i < m; ++i)
                z.col(a1 + ra1 * x1).segment(ry0 * i, ry0) = v.col(i * ra1 + a1).segment(ry0 * x1, ry0);
    return z;
}

Iface3 update_iface(const Iface3& l, const OpCore& a, const Core3& y, const Core3& x)
{
    const Matrix z = contract_open(l, a, x);
    const Matrix out = y.left_unfolding().transpose() * z;  // ry1 x (ra1 rx1)
    Iface3 f;
    f.ry = y.right_rank();
    f.ra = a.ra1;
    f.rx = x.right_rank();
    f.v = Eigen::Map<const Vector>(out.data(), out.size());
    return f;
}

// psi(y1, t) = sum psi(y0, s) Y(y0, i, y1) b(s, i, t)
Matrix update_iface_b(const Matrix& l, const Core3& b, const Core3& y)
{
    const Matrix t = l * b.right_unfolding();  // ry0 x (n rb1)
    ConstMatrixMap tl(t.data(), y.left_rank() * b.mode_size(), b.right_rank());
    return y.left_unfolding().transpose() * tl;
}

// f(y0, i, y1) = sum psi_l(y0, s) b(s, i, t) psi_r(y1, t)
Vector local_rhs(const Matrix& l, const Core3& b, const Matrix& r)
{
    const Matrix t = l * b.right_unfolding();
    ConstMatrixMap tl(t.data(), l.rows() * b.mode_size(), b.right_rank());
    const Matrix out = tl * r.transpose();
    return Eigen::Map<const Vector>(out.data(), out.size());
}

// Local operator (y0, i, y1) <- (x0, j, x1) assembled from interfaces.
class LocalOp {
public:
    LocalOp(const Iface3& l, const OpCore& a, const Iface3& r) : a_(&a), l_(&l), r_(&r)
    {
        ry0_ = l.ry;
        rx0_ = l.rx;
        ry1_ = r.ry;
        rx1_ = r.rx;
        ra0_ = a.ra0;
        ra1_ = a.ra1;
        lp_.resize(ry0_, rx0_ * ra0_);
        for (Index x0 = 0; x0 < rx0_; ++x0)
            for (Index a0 = 0; a0 < ra0_; ++a0)
                lp_.col(x0 + rx0_ * a0) = l.v.segment(ry0_ * (a0 + ra0_ * x0), ry0_);
        w_.resize(rx0_ * ry1_, ra1_ * a.n);
        v_.resize(rx0_ * ry1_, ra0_ * a.m);
        z_.resize(rx0_ * ra0_, a.m * ry1_);
    }

    Index rows() const { return ry0_ * a_->m * ry1_; }
    Index cols() const { return rx0_ * a_->n * rx1_; }

    Vector apply(const Vector& x) const
    {
        const Index n = a_->n, m = a_->m;
        ConstMatrixMap xl(x.data(), rx0_ * n, rx1_);
        ConstMatrixMap r2(r_->v.data(), ry1_ * ra1_, rx1_);
        const Matrix t1 = xl * r2.transpose();  // (x0 + rx0 j) x (y1 + ry1 a1)
        for (Index a1 = 0; a1 < ra1_; ++a1)
            for (Index y1 = 0; y1 < ry1_; ++y1)
                for (Index j = 0; j < n; ++j)
                    w_.col(j * ra1_ + a1).segment(rx0_ * y1, rx0_) = t1.col(y1 + ry1_ * a1).segment(rx0_ * j, rx0_);
        v_.setZero();
        for (const auto& b : a_->blocks)
            v_.middleCols(b.i * ra0_, ra0_).noalias() += w_.middleCols(b.j * ra1_, ra1_) * b.a.transpose();
        for (Index y1 = 0; y1 < ry1_; ++y1)
            for (Index i = 0; i < m; ++i)
                for (Index a0 = 0; a0 < ra0_; ++a0)
                    z_.col(i + m * y1).segment(rx0_ * a0, rx0_) = v_.col(i * ra0_ + a0).segment(rx0_ * y1, rx0_);
        const Matrix y = lp_ * z_;  // ry0 x (m ry1)
        return Eigen::Map<const Vector>(y.data(), y.size());
    }

    Matrix dense() const
    {
        Matrix b(rows(), cols());
        Vector e = Vector::Zero(cols());
        for (Index c = 0; c < cols(); ++c) {
            e[c] = 1.0;
            b.col(c) = apply(e);
            e[c] = 0.0;
        }
        return b;
    }

    // P(i, j) block for rank pair (alpha, beta): diagonal of the interfaces.
    // Returns for each operator block the r0 x r1 matrix dL^T A_ij dR.
    std::vector<Matrix> rank_diagonal_blocks() const
    {
        Matrix dl(ra0_, rx0_), dr(ra1_, rx1_);
        for (Index a = 0; a < rx0_; ++a)
            for (Index a0 = 0; a0 < ra0_; ++a0) dl(a0, a) = l_->v[a + ry0_ * (a0 + ra0_ * a)];
        for (Index b = 0; b < rx1_; ++b)
            for (Index a1 = 0; a1 < ra1_; ++a1) dr(a1, b) = r_->v[b + ry1_ * (a1 + ra1_ * b)];
        std::vector<Matrix> out;
        for (const auto& blk : a_->blocks) out.push_back(dl.transpose() * blk.a * dr);
        return out;
    }

    const OpCore& op() const { return *a_; }
    Index r0() const { return rx0_; }
    Index r1() const { return rx1_; }

private:
    const OpCore* a_;
    const Iface3* l_;
    const Iface3* r_;
    Index ry0_, rx0_, ry1_, rx1_, ra0_, ra1_;
    Matrix lp_;
    mutable Matrix w_, v_, z_;
};

class LocalPrec {
public:
    LocalPrec(const LocalOp& op, LocalPreconditioner kind) : kind_(kind), r0_(op.r0()), r1_(op.r1()), n_(op.op().n)
    {
        if (kind_ == LocalPreconditioner::none) return;
        const auto diag_blocks = op.rank_diagonal_blocks();
        const auto& blocks = op.op().blocks;
        if (kind_ == LocalPreconditioner::jacobi) {
            inv_diag_ = Vector::Ones(r0_ * n_ * r1_);
            Vector d = Vector::Zero(r0_ * n_ * r1_);
            for (std::size_t q = 0; q < blocks.size(); ++q) {
                if (blocks[q].i != blocks[q].j) continue;
                const Index i = blocks[q].i;
                for (Index b = 0; b < r1_; ++b)
                    for (Index a = 0; a < r0_; ++a) d[a + r0_ * (i + n_ * b)] += diag_blocks[q](a, b);
            }
            for (Index t = 0; t < d.size(); ++t)
                if (d[t] != 0.0) inv_diag_[t] = 1.0 / d[t];
            return;
        }
        std::vector<Matrix> mats(static_cast<std::size_t>(r0_ * r1_), Matrix::Zero(n_, n_));
        for (std::size_t q = 0; q < blocks.size(); ++q)
            for (Index b = 0; b < r1_; ++b)
                for (Index a = 0; a < r0_; ++a)
                    mats[static_cast<std::size_t>(a + r0_ * b)](blocks[q].i, blocks[q].j) += diag_blocks[q](a, b);
        lu_.reserve(mats.size());
        ok_.reserve(mats.size());
        for (auto& m : mats) {
            lu_.emplace_back(m);
            ok_.push_back(m.cwiseAbs().maxCoeff() > 0 && lu_.back().rcond() > 1e-13);
        }
    }

    Vector apply(const Vector& v) const
    {
        switch (kind_) {
        case LocalPreconditioner::none: return v;
        case LocalPreconditioner::jacobi: return v.cwiseProduct(inv_diag_);
        case LocalPreconditioner::block_jacobi: break;
        }
        Vector out = v;
        Vector g(n_);
        for (Index b = 0; b < r1_; ++b)
            for (Index a = 0; a < r0_; ++a) {
                const auto idx = static_cast<std::size_t>(a + r0_ * b);
                if (!ok_[idx]) continue;
                for (Index i = 0; i < n_; ++i) g[i] = v[a + r0_ * (i + n_ * b)];
                const Vector s = lu_[idx].solve(g);
                for (Index i = 0; i < n_; ++i) out[a + r0_ * (i + n_ * b)] = s[i];
            }
        return out;
    }

private:
    LocalPreconditioner kind_;
    Index r0_, r1_, n_;
    Vector inv_diag_;
    std::vector<Eigen::PartialPivLU<Matrix>> lu_;
    std::vector<bool> ok_;
};

struct GmresResult {
    Vector x;
    double rel_res = 0.0;
    int iters = 0;
};

// Restarted GMRES with right preconditioning.
GmresResult gmres(const LocalOp& op, const LocalPrec& prec, const Vector& b, Vector x, double tol, int restart,
                  int max_iters)
{
    GmresResult res;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.x = Vector::Zero(b.size());
        return res;
    }
    Vector r = b - op.apply(x);
    double beta = r.norm();
    const Index nn = b.size();
    const int m = static_cast<int>(std::min<Index>(restart, nn));
    while (beta > tol * bnorm && res.iters < max_iters) {
        Matrix v(nn, m + 1);
        Matrix h = Matrix::Zero(m + 1, m);
        Vector cs(m), sn(m), g = Vector::Zero(m + 1);
        v.col(0) = r / beta;
        g[0] = beta;
        int k = 0;
        for (; k < m && res.iters < max_iters; ++k) {
            ++res.iters;
            Vector w = op.apply(prec.apply(v.col(k)));
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= k; ++i) {
                    const double hij = v.col(i).dot(w);
                    h(i, k) += hij;
                    w -= hij * v.col(i);
                }
            h(k + 1, k) = w.norm();
            const bool breakdown = h(k + 1, k) <= 1e-14 * h.col(k).head(k + 1).norm();
            if (!breakdown) v.col(k + 1) = w / h(k + 1, k);
            for (int i = 0; i < k; ++i) {
                const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
                h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
                h(i, k) = t;
            }
            const double den = std::hypot(h(k, k), h(k + 1, k));
            cs[k] = den == 0 ? 1.0 : h(k, k) / den;
            sn[k] = den == 0 ? 0.0 : h(k + 1, k) / den;
            h(k, k) = den;
            h(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            if (std::abs(g[k + 1]) <= tol * bnorm || breakdown) {
                ++k;
                break;
            }
        }
        const Vector y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        x += prec.apply(v.leftCols(k) * y);
        r = b - op.apply(x);
        beta = r.norm();
        if (k == 0) break;
    }
    res.x = std::move(x);
    res.rel_res = beta / bnorm;
    return res;
}

TTTensor random_tt(const std::vector<Index>& shape, Index rank, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    std::vector<Core3> cores;
    const auto d = shape.size();
    for (std::size_t k = 0; k < d; ++k) {
        const Index r0 = k == 0 ? 1 : rank, r1 = k + 1 == d ? 1 : rank;
        Core3 c(r0, shape[k], r1);
        for (Index t = 0; t < c.size(); ++t) c.values()[t] = nd(rng);
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

Vector flat(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

enum class SweepMode { amen, fixed_rank };

class Engine {
public:
    Engine(const TTMatrix& a, const TTTensor& b, TTTensor x, const SolveOptions& opts, SweepMode mode)
        : opts_(opts), mode_(mode), d_(a.order())
    {
        ops_ = make_op_cores(a);
        ops_rev_ = make_op_cores(a.reversed());
        b_ = b;
        x_ = std::move(x);
        if (mode_ == SweepMode::amen && opts_.kickrank > 0) {
            std::mt19937_64 rng(opts_.seed + 1);
            z_ = random_tt(b.shape(), opts_.kickrank, rng);
        }
    }

    // One pass over all cores; returns the largest local residual seen
    // before each core update.
    double half_sweep(double tol_local)
    {
        const bool use_z = z_.order() > 0;
        right_orthogonalize(x_);
        if (use_z) right_orthogonalize(z_);
        compute_right_interfaces(use_z);

        Iface3 lx, lz;
        Matrix lxb = Matrix::Ones(1, 1), lzb = Matrix::Ones(1, 1);
        double max_res = 0.0;
        for (Index k = 0; k < d_; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const OpCore& op = ops_[ku];
            const Core3& bk = b_.core(k);
            const Index rx0 = x_.core(k).left_rank(), n = x_.core(k).mode_size(), rx1 = x_.core(k).right_rank();

            LocalOp loc(lx, op, rx_[ku + 1]);
            const Vector f = local_rhs(lxb, bk, rxb_[ku + 1]);
            const double nf = f.norm();
            const Vector xk = x_.core(k).values();
            const double scale = nf > 0 ? nf : 1.0;
            const double res_prev = (loc.apply(xk) - f).norm() / scale;
            max_res = std::max(max_res, res_prev);

            Vector sol = xk;
            double res_sol = res_prev;
            const double solve_tol = mode_ == SweepMode::fixed_rank ? 1e-13 : 0.5 * tol_local;
            if (nf == 0.0) {
                sol.setZero();
                res_sol = 0.0;
            } else if (res_prev > solve_tol) {
                if (loc.cols() <= opts_.dense_threshold) {
                    Eigen::PartialPivLU<Matrix> lu(loc.dense());
                    if (!(lu.rcond() > 1e-15)) {
                        singular_ = true;
                        return max_res;
                    }
                    sol = lu.solve(f);
                } else {
                    LocalPrec prec(loc, opts_.preconditioner);
                    auto g = gmres(loc, prec, f, xk, solve_tol, opts_.gmres_restart, opts_.gmres_max_iters);
                    sol = std::move(g.x);
                    gmres_iters_ += g.iters;
                }
                res_sol = (loc.apply(sol) - f).norm() / scale;
                if (!std::isfinite(res_sol)) {
                    singular_ = true;
                    return max_res;
                }
            }

            if (k == d_ - 1) {
                x_.core(k) = Core3(rx0, n, rx1, sol);
                if (use_z) {
                    LocalOp lzop(lz, op, rz_[ku + 1]);
                    Vector crz = local_rhs(lzb, bk, rzb_[ku + 1]) - lzop.apply(sol);
                    const double nz = crz.norm();
                    if (nz > 0) z_.core(k) = Core3(lz.ry, n, 1, crz / nz);
                    else z_.core(k) = Core3(lz.ry, n, 1, Vector::Ones(lz.ry * n) / std::sqrt(double(lz.ry * n)));
                }
                break;
            }

            ConstMatrixMap sl(sol.data(), rx0 * n, rx1);
            Matrix u, v;  // sol ~ u * v, v is r x rx1
            if (mode_ == SweepMode::fixed_rank) {
                auto qr = detail::thin_qr(Matrix(sl));
                u = std::move(qr.q);
                v = std::move(qr.r);
            } else {
                auto svd = detail::thin_svd(Matrix(sl));
                const Index q = svd.s.size();
                auto res_r = [&](Index r) {
                    const Matrix xr = svd.u.leftCols(r) * svd.s.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
                    return (loc.apply(flat(xr)) - f).norm() / scale;
                };
                const double thresh = std::max(tol_local, 1.05 * res_sol);
                Index lo = 1, hi = q;
                // zero singular values never help
                while (hi > 1 && svd.s[hi - 1] <= detail::kZeroSingularValue) --hi;
                while (lo < hi) {
                    const Index mid = (lo + hi) / 2;
                    if (res_r(mid) <= thresh) hi = mid;
                    else lo = mid + 1;
                }
                Index r = lo;
                if (opts_.max_rank > 0) r = std::min(r, opts_.max_rank);
                u = svd.u.leftCols(r);
                v = svd.s.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
            }

            if (use_z) {
                const Vector xt = flat(Matrix(u * v));
                LocalOp lzop(lz, op, rz_[ku + 1]);
                const Vector crz = local_rhs(lzb, bk, rzb_[ku + 1]) - lzop.apply(xt);
                LocalOp lsop(lx, op, rz_[ku + 1]);
                const Vector crs = local_rhs(lxb, bk, rzb_[ku + 1]) - lsop.apply(xt);
                const Index rz1 = rz_[ku + 1].ry;
                auto zq = detail::thin_qr(Matrix(ConstMatrixMap(crz.data(), lz.ry * n, rz1)));
                z_.core(k) = Core3(lz.ry, n, zq.q.cols(), flat(zq.q));

                Matrix aug(rx0 * n, u.cols() + rz1);
                aug << u, ConstMatrixMap(crs.data(), rx0 * n, rz1);
                auto qr = detail::thin_qr(aug);
                v = qr.r.leftCols(u.cols()) * v;
                u = std::move(qr.q);
            }

            const Index r = u.cols();
            x_.core(k) = Core3(rx0, n, r, flat(u));
            Core3& next = x_.core(k + 1);
            const Matrix nr = v * next.right_unfolding();
            next = Core3(r, next.mode_size(), next.right_rank(), flat(nr));

            lx = update_iface(lx, op, x_.core(k), x_.core(k));
            lxb = update_iface_b(lxb, bk, x_.core(k));
            if (use_z) {
                lz = update_iface(lz, op, z_.core(k), x_.core(k));
                lzb = update_iface_b(lzb, bk, z_.core(k));
            }
        }
        reverse();
        return max_res;
    }

    TTTensor solution() const { return reversed_ ? x_.reversed() : x_; }
    bool singular() const { return singular_; }
    Index max_rank() const { return x_.max_rank(); }
    long gmres_iters() const { return gmres_iters_; }

private:
    void reverse()
    {
        std::swap(ops_, ops_rev_);
        b_ = b_.reversed();
        x_ = x_.reversed();
        if (z_.order() > 0) z_ = z_.reversed();
        reversed_ = !reversed_;
    }

    // Right interfaces at every bond, computed as left interfaces of the
    // reversed trains.
    void compute_right_interfaces(bool use_z)
    {
        const auto d = static_cast<std::size_t>(d_);
        rx_.assign(d + 1, Iface3{});
        rxb_.assign(d + 1, Matrix::Ones(1, 1));
        rz_.assign(d + 1, Iface3{});
        rzb_.assign(d + 1, Matrix::Ones(1, 1));
        for (Index k = d_ - 1; k >= 1; --k) {
            const auto ku = static_cast<std::size_t>(k);
            const Core3 xr = x_.core(k).transposed();
            const Core3 br = b_.core(k).transposed();
            const OpCore& opr = ops_rev_[d - 1 - ku];
            rx_[ku] = update_iface(rx_[ku + 1], opr, xr, xr);
            rxb_[ku] = update_iface_b(rxb_[ku + 1], br, xr);
            if (use_z) {
                const Core3 zr = z_.core(k).transposed();
                rz_[ku] = update_iface(rz_[ku + 1], opr, zr, xr);
                rzb_[ku] = update_iface_b(rzb_[ku + 1], br, zr);
            }
        }
    }

    SolveOptions opts_;
    SweepMode mode_;
    Index d_;
    std::vector<OpCore> ops_, ops_rev_;
    TTTensor b_, x_, z_;
    std::vector<Iface3> rx_, rz_;
    std::vector<Matrix> rxb_, rzb_;
    bool reversed_ = false;
    bool singular_ = false;
    long gmres_iters_ = 0;
};

void check_system(const TTMatrix& a, const TTTensor& b)
{
    if (a.row_shape() != a.col_shape()) throw std::invalid_argument("amen_solve: operator must be square");
    if (a.col_shape() != b.shape()) throw std::invalid_argument("amen_solve: operator and right-hand side shapes differ");
}

// R factor of the left part of Ax - b (sign applied to b) up to bond s.
Matrix residual_left_factor(const std::vector<OpCore>& ops, const TTTensor& x, const TTTensor& b, Index s, double sign)
{
    Matrix r(1, 2);
    r << 1.0, sign;
    for (Index k = 0; k < s; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const Core3& xc = x.core(k);
        const Core3& bc = b.core(k);
        const Index q = r.rows(), ra0 = ops[ku].ra0, rx0 = xc.left_rank();
        Iface3 l;
        l.ry = q;
        l.ra = ra0;
        l.rx = rx0;
        const Matrix ra = r.leftCols(ra0 * rx0);
        l.v = flat(ra);
        const Matrix ca = contract_open(l, ops[ku], xc);
        const Matrix tb = r.rightCols(bc.left_rank()) * bc.right_unfolding();
        const Index n = xc.mode_size();
        Matrix c(q * n, ca.cols() + bc.right_rank());
        c << ca, ConstMatrixMap(tb.data(), q * n, bc.right_rank());
        Eigen::HouseholderQR<Matrix> qr(c);
        const Index rows = std::min(c.rows(), c.cols());
        r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
    }
    return r;
}

}  // namespace

double residual_norm(const TTMatrix& a, const TTTensor& x, const TTTensor& b)
{
    check_system(a, b);
    if (x.shape() != b.shape()) throw std::invalid_argument("residual_norm: solution shape mismatch");
    const Index d = a.order();
    const auto ar = a.ranks(), xr = x.ranks(), br = b.ranks();
    const auto shape = b.shape();
    // Bond s splits the train; pick the one with the cheapest two-sided QR.
    Index best = d;
    double best_cost = -1;
    for (Index s = 1; s <= d; ++s) {
        double cost = 0, q = 1;
        for (Index k = 0; k < s; ++k) {
            const double rows = q * double(shape[static_cast<std::size_t>(k)]);
            const auto ku = static_cast<std::size_t>(k + 1);
            const double cols = double(ar[ku] * xr[ku] + br[ku]);
            cost += rows * cols * std::min(rows, cols);
            q = std::min(rows, cols);
        }
        q = 1;
        for (Index k = d - 1; k >= s; --k) {
            const double rows = q * double(shape[static_cast<std::size_t>(k)]);
            const auto ku = static_cast<std::size_t>(k);
            const double cols = double(ar[ku] * xr[ku] + br[ku]);
            cost += rows * cols * std::min(rows, cols);
            q = std::min(rows, cols);
        }
        if (best_cost < 0 || cost < best_cost) {
            best_cost = cost;
            best = s;
        }
    }
    const Matrix rl = residual_left_factor(make_op_cores(a), x, b, best, -1.0);
    Matrix rr(1, 2);
    rr << 1.0, 1.0;
    if (best < d) rr = residual_left_factor(make_op_cores(a.reversed()), x.reversed(), b.reversed(), d - best, 1.0);
    return (rl * rr.transpose()).norm();
}

SolveResult amen_solve(const TTMatrix& a, const TTTensor& b, const SolveOptions& opts, const std::optional<TTTensor>& x0)
{
    opts.validate();
    check_system(a, b);
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult out;
    auto& rep = out.report;
    const double bnorm = tt_norm(b);
    if (bnorm == 0.0) {
        out.x = TTTensor::zeros(b.shape());
        rep.converged = true;
        rep.message = "zero right-hand side";
        return out;
    }
    TTTensor x;
    if (x0) {
        if (x0->shape() != b.shape()) throw std::invalid_argument("amen_solve: initial guess shape mismatch");
        x = *x0;
        if (tt_norm(x) == 0.0) {
            std::mt19937_64 rng(opts.seed);
            x = random_tt(b.shape(), std::max<Index>(1, x.max_rank()), rng);
        }
    } else {
        x = tt_round(b, opts.eps);
    }

    Engine eng(a, b, std::move(x), opts, SweepMode::amen);
    const double sqrt_d = std::sqrt(static_cast<double>(a.order()));
    double tol_local = opts.eps / sqrt_d;
    for (int s = 1; s <= opts.max_sweeps; ++s) {
        const double r = eng.half_sweep(tol_local);
        rep.sweeps = s;
        rep.local_residuals.push_back(r);
        rep.rank_history.push_back(eng.max_rank());
        if (opts.verbose)
            std::cerr << "amen sweep " << s << " local residual " << r << " max rank " << eng.max_rank() << '\n';
        if (eng.singular()) {
            rep.singular = true;
            rep.message = "local system singular to working precision";
            break;
        }
        if (r > tol_local) continue;
        // Local residuals are small; certify with the true residual.
        const double true_res = residual_norm(a, eng.solution(), b) / bnorm;
        rep.residual = true_res;
        if (true_res <= opts.eps) {
            rep.converged = true;
            break;
        }
        tol_local *= std::clamp(0.5 * opts.eps / true_res, 0.01, 0.5);
    }
    out.x = eng.solution();
    if (!rep.converged && !rep.singular) {
        rep.residual = residual_norm(a, out.x, b) / bnorm;
        rep.converged = rep.residual <= opts.eps;
        if (!rep.converged) rep.message = "maximum number of sweeps reached";
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

TTTensor als_sweep(const TTMatrix& a, const TTTensor& b, const TTTensor& x, int sweeps)
{
    check_system(a, b);
    if (x.shape() != b.shape()) throw std::invalid_argument("als_sweep: initial guess shape mismatch");
    if (sweeps < 1) throw std::invalid_argument("als_sweep: need at least one sweep");
    const TTMatrix at = a.transposed();
    const TTMatrix ata = ttm_compose(at, a);
    const TTTensor atb = ttm_apply(at, b);
    TTTensor x0 = x;
    if (tt_norm(x0) == 0.0) {
        std::mt19937_64 rng(7);
        std::vector<Core3> cores;
        std::normal_distribution<double> nd;
        for (const auto& c : x.cores()) {
            Core3 r(c.left_rank(), c.mode_size(), c.right_rank());
            for (Index t = 0; t < r.size(); ++t) r.values()[t] = nd(rng);
            cores.push_back(std::move(r));
        }
        x0 = TTTensor(std::move(cores));
    }
    SolveOptions opts;
    opts.kickrank = 0;
    opts.dense_threshold = 4096;
    opts.preconditioner = LocalPreconditioner::none;
    opts.gmres_max_iters = 2000;
    Engine eng(ata, atb, std::move(x0), opts, SweepMode::fixed_rank);
    for (int s = 0; s < sweeps; ++s) {
        eng.half_sweep(0.0);
        if (eng.singular()) throw std::runtime_error("als_sweep: local system singular to working precision");
    }
    return eng.solution();
}

TTTensor tt_reciprocal(const TTTensor& o, double eps, SolveReport* report)
{
    SolveOptions opts;
    opts.eps = eps;
    opts.preconditioner = LocalPreconditioner::jacobi;
    const auto shape = o.shape();
    const TTTensor ones = TTTensor::constant(shape, 1.0);
    // Start from the reciprocal of the mean, which is exact for constant o.
    const double mean = tt_sum(o) / static_cast<double>(shape_volume(shape));
    if (!(mean != 0.0) || !std::isfinite(mean)) throw std::runtime_error("tt_reciprocal: tensor has zero mean");
    auto res = amen_solve(TTMatrix::diagonal(o), ones, opts, TTTensor::constant(shape, 1.0 / mean));
    if (report) *report = res.report;
    if (!res.report.converged)
        throw std::runtime_error("tt_reciprocal: elementwise inversion did not converge (residual " +
                                 std::to_string(res.report.residual) + "); the tensor may be close to singular");
    return res.x;
}

}  // namespace ttiga
