#pragma once

#include <Eigen/Dense>

#include <vector>

namespace gpident {

/// Minimum-norm least-squares solution of min ||A x - b||.
struct LstsqResult {
    Eigen::VectorXd x;
    int rank = 0;
    bool rank_deficient = false;
};

/// Rank-revealing solve (SVD); singular values below rcond * sigma_max are
/// treated as zero.
LstsqResult lstsq_svd(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double rcond = 1e-10);

/// Unpivoted QR when A has full column rank and is well conditioned,
/// otherwise falls back to lstsq_svd with the same cutoff.
LstsqResult lstsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double rcond = 1e-10);

/// Estimate of sigma_max / sigma_min for the upper triangle of the leading
/// square block of R, by power and inverse iteration. Infinite when singular.
double triangular_condition_estimate(const Eigen::Ref<const Eigen::MatrixXd>& R);

/// Residual b - A A^+ b.
Eigen::VectorXd lstsq_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double rcond = 1e-10);

enum class CompressionMethod { Auto, Householder, Gram };

/// A grouped system (A, y) replaced by an equivalent small one: A = Q R with
/// orthonormal Q, z = Q^T y and tail_sq = ||y - Q z||^2. For every x,
/// ||A x - y||^2 = ||R x - z||^2 + tail_sq, and A^T v = R^T (Q^T v) for v in
/// range(A). Column order and group layout are those of A.
struct ReducedSystem {
    Eigen::MatrixXd R;
    Eigen::VectorXd z;
    double tail_sq = 0.0;
    double y_sq = 0.0;
    int groups = 0;
    int M = 0;
    CompressionMethod method = CompressionMethod::Householder;
    Eigen::MatrixXd gram;                // R^T R
    Eigen::VectorXd rtz;                 // R^T z
    std::vector<Eigen::MatrixXd> bases;  // orthonormal basis of each group's columns

    /// Fills gram, rtz and bases from R, z and the group layout. compress
    /// calls it; hand-built systems are prepared on first use by the solvers.
    void prepare();

    auto group_block(int g) const { return R.middleCols(static_cast<Eigen::Index>(g) * M, M); }

    /// Column blocks of the listed groups, side by side in the listed order.
    Eigen::MatrixXd columns(const std::vector<int>& support) const;
};

/// Householder route: QR of A; exact to working precision.
/// Gram route: A^T A by a symmetric rank-k update, then pivoted LDL^T.
/// About twice as fast, with the singular-value resolution reduced to roughly
/// sqrt(n * eps) * sigma_max. Auto picks Gram for large systems.
ReducedSystem compress(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, int groups, int M,
                       CompressionMethod method = CompressionMethod::Auto);

/// Gram route from a precomputed G = A^T A, A^T y and ||y||^2.
ReducedSystem compress_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& aty, double y_sq, int groups,
                            int M);

/// Flop count above which Auto switches to the Gram route.
inline constexpr double kGramFlopThreshold = 2.0e10;

CompressionMethod choose_compression(Eigen::Index rows, Eigen::Index cols);

}  // namespace gpident
