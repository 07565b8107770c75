#pragma once

#include <Eigen/Dense>

#include <vector>

namespace gpident {

/// Uniform knots z_j = start + j*spacing, j = 0..intervals.
struct KnotSequence {
    double start = 0.0;
    double end = 1.0;
    int intervals = 1;

    KnotSequence() = default;
    KnotSequence(double start, double end, int intervals);

    double spacing() const { return (end - start) / intervals; }
    double knot(int j) const { return start + j * spacing(); }
};

enum class BoundaryMode { Periodic, Neumann, Constant };

/// Cardinal B-spline of degree `order` on integer knots 0, 1, ..., order+1,
/// evaluated through the Cox-de Boor recursion. Support is [0, order+1).
double cardinal_bspline(int order, double s);

/// One-dimensional B-spline family on a uniform knot sequence.
///
/// Periodic: the l functions b_n, n = -p..l-p-1, with the p leftmost ones wrapped
/// across the period. Index j = n + p, so supports run left to right.
///
/// Neumann: index 0 is the left supplement b_L (sum of the p phantom splines left
/// of the domain, restricted to [0, p dz)), indices 1..l-p are the interior splines
/// b_0..b_{l-p-1}, and the last index is the right supplement b_R.
///
/// Constant: the single function 1; used when a coefficient does not vary along
/// this direction.
class BSplineBasis1D {
public:
    static BSplineBasis1D periodic(double start, double end, int intervals, int order);
    static BSplineBasis1D neumann(double start, double end, int intervals, int order);
    static BSplineBasis1D constant(double start, double end);

    /// Builds a basis with `count` functions, inverting the count formulas
    /// (periodic: l = count; Neumann: l = count + p - 2). count == 1 yields Constant.
    static BSplineBasis1D periodic_with_count(double start, double end, int count, int order);
    static BSplineBasis1D neumann_with_count(double start, double end, int count, int order);

    int count() const { return count_; }
    int order() const { return order_; }
    BoundaryMode boundary() const { return mode_; }
    const KnotSequence& knots() const { return knots_; }

    /// Value of basis function `index` at z. Neumann rejects z outside [start, end];
    /// Periodic wraps z into [start, end).
    double eval(int index, double z) const;

    /// All basis values at z, length count().
    Eigen::VectorXd eval_all(double z) const;

    /// Matrix with entry (i, j) = b_j(points[i]).
    Eigen::MatrixXd collocation(const std::vector<double>& points) const;

private:
    BSplineBasis1D(KnotSequence knots, int order, BoundaryMode mode, int count);

    double interior(int n, double s) const;

    KnotSequence knots_;
    int order_ = 0;
    BoundaryMode mode_ = BoundaryMode::Constant;
    int count_ = 1;
};

/// Tensor-product basis B_m(x, t) = b_{m1}(x) b_{m2}(t) with m = m2*M1 + m1 (0-based).
class BasisSet {
public:
    BasisSet(BSplineBasis1D space, BSplineBasis1D time);

    int M() const { return space_.count() * time_.count(); }
    int M1() const { return space_.count(); }
    int M2() const { return time_.count(); }
    const BSplineBasis1D& space() const { return space_; }
    const BSplineBasis1D& time() const { return time_; }

    int index(int m1, int m2) const { return m2 * M1() + m1; }

    double eval(int m, double x, double t) const;

private:
    BSplineBasis1D space_;
    BSplineBasis1D time_;
};

}  // namespace gpident
