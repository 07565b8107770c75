#include "gpident/bspline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gpident {

KnotSequence::KnotSequence(double start_, double end_, int intervals_)
    : start(start_), end(end_), intervals(intervals_) {
    if (!(end > start))
        throw std::invalid_argument("KnotSequence: end must exceed start");
    if (intervals < 1)
        throw std::invalid_argument("KnotSequence: need at least one interval");
}

double cardinal_bspline(int order, double s) {
    if (order < 0)
        throw std::invalid_argument("cardinal_bspline: negative order");
    if (!(s >= 0.0) || s >= order + 1)
        return 0.0;
    // vals[j] holds N_q(s - j); start from the indicator functions (q = 0).
    std::array<double, 32> vals{};
    if (order >= static_cast<int>(vals.size()))
        throw std::invalid_argument("cardinal_bspline: order too large");
    for (int j = 0; j <= order; ++j)
        vals[j] = (s - j >= 0.0 && s - j < 1.0) ? 1.0 : 0.0;
    for (int q = 1; q <= order; ++q) {
        for (int j = 0; j + q <= order; ++j) {
            const double r = s - j;
            vals[j] = r / q * vals[j] + (q + 1 - r) / q * vals[j + 1];
        }
    }
    return vals[0];
}

BSplineBasis1D::BSplineBasis1D(KnotSequence knots, int order, BoundaryMode mode, int count)
    : knots_(knots), order_(order), mode_(mode), count_(count) {}

BSplineBasis1D BSplineBasis1D::periodic(double start, double end, int intervals, int order) {
    if (order < 0)
        throw std::invalid_argument("periodic basis: negative order");
    if (intervals <= order)
        throw std::invalid_argument("periodic basis: need more than " + std::to_string(order) +
                                    " knot intervals, got " + std::to_string(intervals));
    return {KnotSequence(start, end, intervals), order, BoundaryMode::Periodic, intervals};
}

BSplineBasis1D BSplineBasis1D::neumann(double start, double end, int intervals, int order) {
    if (order < 1)
        throw std::invalid_argument("Neumann basis: order must be at least 1");
    if (intervals < 2 * order)
        throw std::invalid_argument("Neumann basis: need at least " + std::to_string(2 * order) +
                                    " knot intervals, got " + std::to_string(intervals));
    return {KnotSequence(start, end, intervals), order, BoundaryMode::Neumann,
            intervals - order + 2};
}

BSplineBasis1D BSplineBasis1D::constant(double start, double end) {
    return {KnotSequence(start, end, 1), 0, BoundaryMode::Constant, 1};
}

BSplineBasis1D BSplineBasis1D::periodic_with_count(double start, double end, int count, int order) {
    if (count < 1)
        throw std::invalid_argument("basis count must be positive");
    if (count == 1)
        return constant(start, end);
    return periodic(start, end, count, order);
}

BSplineBasis1D BSplineBasis1D::neumann_with_count(double start, double end, int count, int order) {
    if (count < 1)
        throw std::invalid_argument("basis count must be positive");
    if (count == 1)
        return constant(start, end);
    return neumann(start, end, count + order - 2, order);
}

double BSplineBasis1D::interior(int n, double s) const {
    return cardinal_bspline(order_, s - n);
}

double BSplineBasis1D::eval(int index, double z) const {
    if (index < 0 || index >= count_)
        throw std::out_of_range("B-spline index " + std::to_string(index) + " out of range");
    const double dz = knots_.spacing();
    const int l = knots_.intervals;
    const int p = order_;

    switch (mode_) {
    case BoundaryMode::Constant:
        return 1.0;

    case BoundaryMode::Periodic: {
        double s = std::fmod((z - knots_.start) / dz, static_cast<double>(l));
        if (s < 0.0) s += l;
        if (s >= l) s -= l;
        const int n = index - p;
        double v = 0.0;
        for (int k = -1; k <= 1; ++k)
            v += cardinal_bspline(p, s - n + k * l);
        return v;
    }

    case BoundaryMode::Neumann: {
        const double tol = 1e-12 * (knots_.end - knots_.start);
        if (z < knots_.start - tol || z > knots_.end + tol)
            throw std::domain_error("Neumann B-spline evaluated outside its domain");
        double s = (z - knots_.start) / dz;
        s = std::clamp(s, 0.0, static_cast<double>(l));
        if (index == 0) {
            if (s >= p) return 0.0;
            double v = 0.0;
            for (int n = -p; n <= -1; ++n) v += interior(n, s);
            return v;
        }
        if (index == count_ - 1) {
            if (s < l - p) return 0.0;
            double v = 0.0;
            for (int n = l - p; n <= l - 1; ++n) v += interior(n, s);
            return v;
        }
        return interior(index - 1, s);
    }
    }
    return 0.0;
}

Eigen::VectorXd BSplineBasis1D::eval_all(double z) const {
    Eigen::VectorXd v(count_);
    for (int j = 0; j < count_; ++j) v[j] = eval(j, z);
    return v;
}

Eigen::MatrixXd BSplineBasis1D::collocation(const std::vector<double>& points) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), count_);
    for (std::size_t i = 0; i < points.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = eval_all(points[i]).transpose();
    return out;
}

BasisSet::BasisSet(BSplineBasis1D space, BSplineBasis1D time)
    : space_(std::move(space)), time_(std::move(time)) {}

double BasisSet::eval(int m, double x, double t) const {
    if (m < 0 || m >= M())
        throw std::out_of_range("tensor basis index " + std::to_string(m) + " out of range");
    return space_.eval(m % M1(), x) * time_.eval(m / M1(), t);
}

}  // namespace gpident
