#include "gpident/lstsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpident {

LstsqResult lstsq_svd(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double rcond) {
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    if (b.size() != m)
        throw std::invalid_argument("lstsq: right-hand side length mismatch");
    LstsqResult out;
    if (n == 0) {
        out.x.resize(0);
        return out;
    }
    // Tall systems: reduce to the triangular factor first, the SVD then works on n x n.
    if (m > 2 * n) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
        const Eigen::MatrixXd R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        const Eigen::VectorXd qtb = (qr.householderQ().transpose() * b).head(n);
        return lstsq_svd(R, qtb, rcond);
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(rcond);
    out.x = svd.solve(b);
    out.rank = static_cast<int>(svd.rank());
    out.rank_deficient = out.rank < n;
    return out;
}

double triangular_condition_estimate(const Eigen::Ref<const Eigen::MatrixXd>& R) {
    const Eigen::Index n = R.cols();
    if (n == 0) return 1.0;
    const auto U = R.topLeftCorner(n, n).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(R(i, i) != 0.0) || !std::isfinite(R(i, i))) return std::numeric_limits<double>::infinity();

    Eigen::VectorXd start(n);
    for (Eigen::Index i = 0; i < n; ++i) start[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
    start.normalize();

    constexpr int iters = 10;
    Eigen::VectorXd v = start;
    double big = 0.0;
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd w = U.transpose() * (U * v);
        big = w.norm();
        if (!(big > 0.0)) return std::numeric_limits<double>::infinity();
        v = w / big;
    }
    v = start;
    double small_inv = 0.0;
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd w = U.transpose().solve(v);
        w = U.solve(w);
        small_inv = w.norm();
        if (!std::isfinite(small_inv)) return std::numeric_limits<double>::infinity();
        v = w / small_inv;
    }
    return std::sqrt(big * small_inv);
}

LstsqResult lstsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double rcond) {
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    if (b.size() != m)
        throw std::invalid_argument("lstsq: right-hand side length mismatch");
    if (n == 0 || m < n) return lstsq_svd(A, b, rcond);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    const auto R = qr.matrixQR().topRows(n);
    const Eigen::VectorXd qtb = qr.householderQ().transpose() * b;
    // The estimate can undershoot by a modest factor; keep well clear of the cutoff.
    if (!(triangular_condition_estimate(R) < 1e-3 / rcond)) {
        const Eigen::MatrixXd Rn = R.triangularView<Eigen::Upper>();
        return lstsq_svd(Rn, qtb.head(n), rcond);
    }

    LstsqResult out;
    out.x = R.triangularView<Eigen::Upper>().solve(qtb.head(n));
    out.rank = static_cast<int>(n);
    return out;
}

Eigen::VectorXd lstsq_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double rcond) {
    if (A.cols() == 0) return b;
    return b - A * lstsq_svd(A, b, rcond).x;
}

void ReducedSystem::prepare() {
    gram = Eigen::MatrixXd::Zero(R.cols(), R.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(R.transpose());
    gram = gram.selfadjointView<Eigen::Lower>();
    rtz = R.transpose() * z;

    // Left singular vectors of each block above 1e-10 * s_max.
    bases.resize(static_cast<std::size_t>(groups));
    for (int g = 0; g < groups; ++g) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(group_block(g), Eigen::ComputeThinU);
        const auto& sv = svd.singularValues();
        Eigen::Index r = 0;
        const double cut = sv.size() > 0 ? 1e-10 * sv[0] : 0.0;
        while (r < sv.size() && sv[r] > cut && sv[r] > 0.0) ++r;
        bases[static_cast<std::size_t>(g)] = svd.matrixU().leftCols(r);
    }
}

Eigen::MatrixXd ReducedSystem::columns(const std::vector<int>& support) const {
    Eigen::MatrixXd out(R.rows(), static_cast<Eigen::Index>(support.size()) * M);
    for (std::size_t i = 0; i < support.size(); ++i)
        out.middleCols(static_cast<Eigen::Index>(i) * M, M) = group_block(support[i]);
    return out;
}

namespace {

ReducedSystem compress_householder(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    ReducedSystem rs;
    rs.method = CompressionMethod::Householder;
    if (m <= n) {
        rs.R = A;
        rs.z = y;
        return rs;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    const Eigen::VectorXd qty = qr.householderQ().transpose() * y;
    rs.R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    rs.z = qty.head(n);
    rs.tail_sq = qty.tail(m - n).squaredNorm();
    return rs;
}

void check_layout(Eigen::Index cols, int groups, int M) {
    if (static_cast<Eigen::Index>(groups) * M != cols)
        throw std::invalid_argument("compress: group layout does not match the column count");
}

}  // namespace

ReducedSystem compress_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& aty, double y_sq, int groups,
                            int M) {
    const Eigen::Index n = gram.rows();
    if (gram.cols() != n || aty.size() != n)
        throw std::invalid_argument("compress_gram: shape mismatch");
    check_layout(n, groups, M);

    // Pivoted Cholesky, largest remaining diagonal first, stopping once every
    // remaining pivot is below n * eps * max(diag): G[p, p] = R^T R on the
    // leading rank rows.
    Eigen::MatrixXd W = gram;
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    Eigen::MatrixXd Rp = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd diag = W.diagonal();
    const double tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                       (n > 0 ? std::max(0.0, diag.maxCoeff()) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index j = 0;
        const double best = diag.tail(n - k).maxCoeff(&j);
        j += k;
        if (!(best > tol)) break;
        if (j != k) {
            W.row(k).swap(W.row(j));
            W.col(k).swap(W.col(j));
            Rp.col(k).head(k).swap(Rp.col(j).head(k));
            std::swap(diag[k], diag[j]);
            std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(j)]);
        }
        const double rkk = std::sqrt(best);
        Rp(k, k) = rkk;
        const Eigen::Index rest = n - k - 1;
        if (rest > 0) {
            Eigen::VectorXd row = W.col(k).tail(rest);
            if (k > 0) row.noalias() -= Rp.block(0, k + 1, k, rest).transpose() * Rp.col(k).head(k);
            Rp.row(k).tail(rest) = row.transpose() / rkk;
            diag.tail(rest) -= Rp.row(k).tail(rest).transpose().cwiseAbs2();
        }
        rank = k + 1;
    }

    ReducedSystem rs;
    rs.method = CompressionMethod::Gram;
    rs.R.resize(rank, n);  // G = R^T R in the original column order
    for (Eigen::Index c = 0; c < n; ++c) rs.R.col(perm[static_cast<std::size_t>(c)]) = Rp.col(c).head(rank);
    Eigen::VectorXd pb(rank);
    for (Eigen::Index c = 0; c < rank; ++c) pb[c] = aty[perm[static_cast<std::size_t>(c)]];
    rs.z = Rp.topLeftCorner(rank, rank).triangularView<Eigen::Upper>().transpose().solve(pb);
    rs.tail_sq = std::max(0.0, y_sq - rs.z.squaredNorm());
    rs.y_sq = y_sq;
    rs.groups = groups;
    rs.M = M;
    rs.prepare();
    return rs;
}

ReducedSystem compress(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, int groups, int M,
                       CompressionMethod method) {
    if (y.size() != A.rows())
        throw std::invalid_argument("compress: response length mismatch");
    check_layout(A.cols(), groups, M);
    if (method == CompressionMethod::Auto) method = choose_compression(A.rows(), A.cols());
    if (method == CompressionMethod::Gram) {
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(A.cols(), A.cols());
        G.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
        G = G.selfadjointView<Eigen::Lower>();
        return compress_gram(G, A.transpose() * y, y.squaredNorm(), groups, M);
    }
    ReducedSystem rs = compress_householder(A, y);
    rs.y_sq = y.squaredNorm();
    rs.groups = groups;
    rs.M = M;
    rs.prepare();
    return rs;
}

CompressionMethod choose_compression(Eigen::Index rows, Eigen::Index cols) {
    const double flops = 2.0 * static_cast<double>(rows) * static_cast<double>(cols) * static_cast<double>(cols);
    return (rows >= cols && flops > kGramFlopThreshold) ? CompressionMethod::Gram : CompressionMethod::Householder;
}

}  // namespace gpident
