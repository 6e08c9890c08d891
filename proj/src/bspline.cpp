#include "ttiga/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ttiga {

KnotVector::KnotVector(std::vector<double> knots, int degree) : knots_(std::move(knots)), p_(degree)
{
    if (p_ < 0) throw std::invalid_argument("KnotVector: degree must be non-negative");
    const auto m = static_cast<Index>(knots_.size());
    if (m < 2 * (p_ + 1)) throw std::invalid_argument("KnotVector: too few knots for degree " + std::to_string(p_));
    for (Index i = 0; i + 1 < m; ++i)
        if (knots_[static_cast<std::size_t>(i)] > knots_[static_cast<std::size_t>(i + 1)])
            throw std::invalid_argument("KnotVector: knots must be nondecreasing");
    for (int i = 0; i <= p_; ++i) {
        if (knots_[static_cast<std::size_t>(i)] != 0.0 || knots_[static_cast<std::size_t>(m - 1 - i)] != 1.0)
            throw std::invalid_argument("KnotVector: knot vector must be clamped on [0, 1]");
    }
    const auto mult = multiplicities();
    for (std::size_t i = 1; i + 1 < mult.size(); ++i)
        if (mult[i] > p_) throw std::invalid_argument("KnotVector: interior multiplicity exceeds degree");
}

std::vector<double> KnotVector::breakpoints() const
{
    std::vector<double> b;
    for (double z : knots_)
        if (b.empty() || z != b.back()) b.push_back(z);
    return b;
}

std::vector<int> KnotVector::multiplicities() const
{
    std::vector<int> m;
    double last = -1;
    for (double z : knots_) {
        if (m.empty() || z != last) m.push_back(0);
        ++m.back();
        last = z;
    }
    return m;
}

BSplineBasis::BSplineBasis(KnotVector kv) : kv_(std::move(kv)) {}

void BSplineBasis::check_point(double x) const
{
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("B-spline evaluation outside [0, 1]: " + std::to_string(x));
}

Index BSplineBasis::find_span(double x) const
{
    check_point(x);
    const int p = degree();
    const Index n = size();
    if (x >= kv_[n]) return n - 1;
    // binary search in [p, n)
    Index lo = p, hi = n;
    while (hi - lo > 1) {
        const Index mid = (lo + hi) / 2;
        if (x < kv_[mid])
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

Vector BSplineBasis::basis_funs(Index span, double x) const
{
    const int p = degree();
    Vector n(p + 1), left(p + 1), right(p + 1);
    n[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - kv_[span + 1 - j];
        right[j] = kv_[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        n[j] = saved;
    }
    return n;
}

Matrix BSplineBasis::ders_basis_funs(Index span, double x, int nder) const
{
    const int p = degree();
    Matrix ndu(p + 1, p + 1);
    Vector left(p + 1), right(p + 1);
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - kv_[span + 1 - j];
        right[j] = kv_[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu(j, r) = right[r + 1] + left[j - r];
            const double tmp = ndu(r, j - 1) / ndu(j, r);
            ndu(r, j) = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        ndu(j, j) = saved;
    }
    Matrix ders = Matrix::Zero(nder + 1, p + 1);
    for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);
    Matrix a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a(0, 0) = 1.0;
        for (int k = 1; k <= std::min(nder, p); ++k) {
            double d = 0.0;
            const int rk = r - k, pk = p - k;
            if (r >= k) {
                a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                d = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                d += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
                d += a(s2, k) * ndu(r, pk);
            }
            ders(k, r) = d;
            std::swap(s1, s2);
        }
    }
    int fac = p;
    for (int k = 1; k <= std::min(nder, p); ++k) {
        ders.row(k) *= fac;
        fac *= p - k;
    }
    return ders;
}

Vector BSplineBasis::eval_all(double x) const
{
    const Index span = find_span(x);
    Vector out = Vector::Zero(size());
    out.segment(span - degree(), degree() + 1) = basis_funs(span, x);
    return out;
}

Vector BSplineBasis::eval_all_deriv(double x) const
{
    const Index span = find_span(x);
    Vector out = Vector::Zero(size());
    out.segment(span - degree(), degree() + 1) = ders_basis_funs(span, x, 1).row(1).transpose();
    return out;
}

Vector BSplineBasis::greville() const
{
    const int p = degree();
    const Index n = size();
    Vector g(n);
    if (p == 0) {
        for (Index m = 0; m < n; ++m) g[m] = 0.5 * (kv_[m] + kv_[m + 1]);
        return g;
    }
    for (Index m = 0; m < n; ++m) {
        double s = 0.0;
        for (int j = 1; j <= p; ++j) s += kv_[m + j];
        g[m] = s / p;
    }
    return g;
}

QuadratureGrid BSplineBasis::quadrature(int points_per_span) const
{
    const int q = points_per_span > 0 ? points_per_span : degree() + 1;
    const auto bp = kv_.breakpoints();
    QuadratureGrid g;
    const Index spans = static_cast<Index>(bp.size()) - 1;
    g.points.resize(spans * q);
    g.weights.resize(spans * q);
    for (Index s = 0; s < spans; ++s) {
        auto [x, w] = gauss_legendre(q, bp[static_cast<std::size_t>(s)], bp[static_cast<std::size_t>(s + 1)]);
        g.points.segment(s * q, q) = x;
        g.weights.segment(s * q, q) = w;
        g.span_offsets.push_back(s * q);
    }
    g.span_offsets.push_back(spans * q);
    return g;
}

Matrix BSplineBasis::collocation_matrix(const Vector& points, int deriv) const
{
    if (deriv < 0 || deriv > 1) throw std::invalid_argument("collocation_matrix: derivative order must be 0 or 1");
    const int p = degree();
    Matrix b = Matrix::Zero(points.size(), size());
    for (Index m = 0; m < points.size(); ++m) {
        const Index span = find_span(points[m]);
        if (deriv == 0)
            b.row(m).segment(span - p, p + 1) = basis_funs(span, points[m]).transpose();
        else
            b.row(m).segment(span - p, p + 1) = ders_basis_funs(span, points[m], 1).row(1);
    }
    return b;
}

BSplineBasis make_basis(Index n, int degree, const std::vector<std::pair<double, int>>& breakpoints)
{
    if (degree < 0) throw std::invalid_argument("make_basis: degree must be non-negative");
    if (n < degree + 1) throw std::invalid_argument("make_basis: need n >= p + 1");
    auto bps = breakpoints;
    std::sort(bps.begin(), bps.end());
    Index fixed = 0;
    for (std::size_t i = 0; i < bps.size(); ++i) {
        const auto& [z, m] = bps[i];
        if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("make_basis: breakpoints must lie in (0, 1)");
        if (m < 1 || m > degree) throw std::invalid_argument("make_basis: multiplicity must be in [1, p]");
        if (i > 0 && bps[i - 1].first == z) throw std::invalid_argument("make_basis: duplicate breakpoint");
        fixed += m;
    }
    const Index free = n - degree - 1 - fixed;
    if (free < 0)
        throw std::invalid_argument("make_basis: n = " + std::to_string(n) + " too small for the requested knots");

    // segments between 0, breakpoints, 1
    std::vector<double> edges{0.0};
    for (const auto& b : bps) edges.push_back(b.first);
    edges.push_back(1.0);
    const std::size_t nseg = edges.size() - 1;
    // Largest-remainder apportionment of the free knots by segment length.
    std::vector<Index> count(nseg, 0);
    std::vector<std::pair<double, std::size_t>> rem;
    Index assigned = 0;
    for (std::size_t s = 0; s < nseg; ++s) {
        const double share = static_cast<double>(free) * (edges[s + 1] - edges[s]);
        count[s] = static_cast<Index>(std::floor(share + 1e-12));
        assigned += count[s];
        rem.emplace_back(share - static_cast<double>(count[s]), s);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < free; ++i, ++assigned) ++count[rem[i % nseg].second];

    std::vector<double> knots(static_cast<std::size_t>(degree + 1), 0.0);
    for (std::size_t s = 0; s < nseg; ++s) {
        const double a = edges[s], b = edges[s + 1];
        for (Index j = 1; j <= count[s]; ++j)
            knots.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(count[s] + 1));
        if (s + 1 < nseg)
            for (int m = 0; m < bps[s].second; ++m) knots.push_back(bps[s].first);
    }
    for (int i = 0; i <= degree; ++i) knots.push_back(1.0);
    return BSplineBasis(KnotVector(std::move(knots), degree));
}

std::pair<Vector, Vector> gauss_legendre(int q)
{
    if (q < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
    Vector x(q), w(q);
    for (int i = 0; i < (q + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= q; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = q * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0, p1 = 0.0;
        for (int j = 1; j <= q; ++j) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        dp = q * (z * p0 - p1) / (z * z - 1.0);
        x[i] = -z;
        x[q - 1 - i] = z;
        w[i] = w[q - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    if (q % 2 == 1) x[q / 2] = 0.0;
    return {x, w};
}

std::pair<Vector, Vector> gauss_legendre(int q, double a, double b)
{
    auto [x, w] = gauss_legendre(q);
    const double h = 0.5 * (b - a);
    return {(x.array() * h + 0.5 * (a + b)).matrix(), w * h};
}

}  // namespace ttiga
