#include "gpident/sdd.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace gpident {

SavGolFilter savgol_weights(int window, int degree) {
    if (window < 3 || window % 2 == 0)
        throw std::invalid_argument("savgol_weights: window must be odd and >= 3, got " +
                                    std::to_string(window));
    if (degree < 0 || degree >= window)
        throw std::invalid_argument("savgol_weights: need 0 <= degree < window");

    const int half = (window - 1) / 2;
    // Vandermonde in the offset l; the smoothed centre value is the constant
    // coefficient of the fit, i.e. row 0 of the pseudo-inverse.
    Eigen::MatrixXd V(window, degree + 1);
    for (int r = 0; r < window; ++r) {
        const double l = r - half;
        double pw = 1.0;
        for (int c = 0; c <= degree; ++c) {
            V(r, c) = pw;
            pw *= l;
        }
    }
    const Eigen::MatrixXd pinv =
        V.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));

    SavGolFilter f;
    f.window = window;
    f.degree = degree;
    f.weights = pinv.row(0).transpose();
    // Exact symmetry holds analytically; enforce it against rounding.
    for (int j = 0; j < half; ++j) {
        const double avg = 0.5 * (f.weights[j] + f.weights[window - 1 - j]);
        f.weights[j] = f.weights[window - 1 - j] = avg;
    }
    return f;
}

namespace {

inline int mirror_index(int k, int n) {
    // Reflect about 0 and n-1 until inside; valid for any k when n >= 2.
    const int period = 2 * (n - 1);
    k %= period;
    if (k < 0) k += period;
    return k < n ? k : period - k;
}

inline int wrap_index(int k, int n) {
    k %= n;
    return k < 0 ? k + n : k;
}

}  // namespace

Eigen::MatrixXd smooth(const Eigen::MatrixXd& field, Axis axis, const SavGolFilter& filter) {
    const int rows = static_cast<int>(field.rows());
    const int cols = static_cast<int>(field.cols());
    const int len = axis == Axis::Space ? rows : cols;
    if (filter.window > len)
        throw std::invalid_argument("smooth: window " + std::to_string(filter.window) +
                                    " larger than axis length " + std::to_string(len));
    const int half = filter.half_width();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);

    if (axis == Axis::Space) {
        for (int l = -half; l <= half; ++l) {
            const double w = filter.weight(l);
            for (int i = 0; i < rows; ++i)
                out.row(i) += w * field.row(wrap_index(i + l, rows));
        }
    } else {
        for (int l = -half; l <= half; ++l) {
            const double w = filter.weight(l);
            for (int n = 0; n < cols; ++n)
                out.col(n) += w * field.col(mirror_index(n + l, cols));
        }
    }
    return out;
}

Eigen::MatrixXd central_diff_5pt(const Eigen::MatrixXd& field, Axis axis, double step) {
    if (!(step > 0.0))
        throw std::invalid_argument("central_diff_5pt: step must be positive");
    const int rows = static_cast<int>(field.rows());
    const int cols = static_cast<int>(field.cols());
    const int len = axis == Axis::Space ? rows : cols;
    if (len < 5)
        throw std::invalid_argument("central_diff_5pt: axis needs at least 5 samples");
    const double s = 1.0 / (12.0 * step);
    Eigen::MatrixXd out(rows, cols);

    if (axis == Axis::Space) {
        for (int i = 0; i < rows; ++i) {
            out.row(i) = s * (-field.row(wrap_index(i + 2, rows)) + 8.0 * field.row(wrap_index(i + 1, rows)) -
                              8.0 * field.row(wrap_index(i - 1, rows)) + field.row(wrap_index(i - 2, rows)));
        }
        return out;
    }

    for (int n = 2; n < cols - 2; ++n)
        out.col(n) = s * (-field.col(n + 2) + 8.0 * field.col(n + 1) - 8.0 * field.col(n - 1) + field.col(n - 2));
    const double h = 1.0 / step;
    const int last = cols - 1;
    out.col(0) = h * (-1.5 * field.col(0) + 2.0 * field.col(1) - 0.5 * field.col(2));
    out.col(1) = 0.5 * h * (field.col(2) - field.col(0));
    out.col(last - 1) = 0.5 * h * (field.col(last) - field.col(last - 2));
    out.col(last) = h * (1.5 * field.col(last) - 2.0 * field.col(last - 1) + 0.5 * field.col(last - 2));
    return out;
}

DerivativeField sdd_derivative(const Trajectory& traj, int space_order, int time_order,
                               const std::optional<SavGolFilter>& filter) {
    if (space_order < 0 || time_order < 0)
        throw std::invalid_argument("sdd_derivative: derivative orders must be non-negative");

    const Grid& g = traj.grid;
    DerivativeField d;
    d.grid = g;
    d.space_order = space_order;
    d.time_order = time_order;

    Eigen::MatrixXd v = traj.values;
    int margin = 0;
    if (filter) {
        v = smooth(smooth(v, Axis::Time, *filter), Axis::Space, *filter);
        margin += filter->half_width();
    }
    for (int m = 0; m < time_order; ++m) {
        v = central_diff_5pt(v, Axis::Time, g.dt());
        margin += 2;
        if (filter && m + 1 < time_order) {
            v = smooth(v, Axis::Time, *filter);
            margin += filter->half_width();
        }
    }
    for (int n = 0; n < space_order; ++n) {
        v = central_diff_5pt(v, Axis::Space, g.dx());
        if (filter) v = smooth(v, Axis::Space, *filter);
    }
    d.values = std::move(v);
    d.time_margin = std::min(margin, g.N / 2);
    return d;
}

int interior_time_trim(const std::optional<SavGolFilter>& filter) {
    return filter ? std::max(filter->window, 2) : 2;
}

}  // namespace gpident
