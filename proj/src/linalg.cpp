#include "ttiga/detail/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace ttiga::detail {

ThinQR thin_qr(const Eigen::MatrixXd& a)
{
    const Index m = a.rows(), n = a.cols();
    const Index k = std::min(m, n);
    ThinQR out;
    if (k == 0) {
        out.q = Eigen::MatrixXd::Zero(m, 0);
        out.r = Eigen::MatrixXd::Zero(0, n);
        return out;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    out.q = qr.householderQ() * Eigen::MatrixXd::Identity(m, k);
    out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return out;
}

ThinSVD thin_svd(const Eigen::MatrixXd& a)
{
    ThinSVD out;
    // Tall or wide matrices are first compressed by QR so the SVD acts on a square factor.
    if (a.rows() > 2 * a.cols()) {
        auto qr = thin_qr(a);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(qr.r, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.u = qr.q * svd.matrixU();
        out.s = svd.singularValues();
        out.v = svd.matrixV();
    } else if (a.cols() > 2 * a.rows()) {
        Eigen::MatrixXd at = a.transpose();
        auto qr = thin_qr(at);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(qr.r, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.u = svd.matrixV();
        out.s = svd.singularValues();
        out.v = qr.q * svd.matrixU();
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.u = svd.matrixU();
        out.s = svd.singularValues();
        out.v = svd.matrixV();
    }
    return out;
}

Index truncation_rank(const Eigen::VectorXd& s, double delta, Index max_rank)
{
    const Index n = s.size();
    if (n == 0) return 1;
    Index r = n;
    while (r > 1 && s[r - 1] < kZeroSingularValue) --r;
    double tail = 0.0;
    const double d2 = delta * delta;
    while (r > 1) {
        const double next = tail + s[r - 1] * s[r - 1];
        if (next > d2) break;
        tail = next;
        --r;
    }
    if (max_rank > 0) r = std::min(r, max_rank);
    return std::max<Index>(r, 1);
}

}  // namespace ttiga::detail
