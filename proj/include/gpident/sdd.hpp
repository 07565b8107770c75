#pragma once

#include "gpident/trajdata.hpp"

#include <Eigen/Dense>

#include <optional>

namespace gpident {

/// Savitzky-Golay smoothing weights W_l, l = -(w-1)/2 .. (w-1)/2.
struct SavGolFilter {
    int window = 3;
    int degree = 2;
    Eigen::VectorXd weights;  // weights[j] = W_{j - half}

    int half_width() const { return (window - 1) / 2; }
    double weight(int offset) const { return weights[offset + half_width()]; }
};

/// Least-squares degree-`degree` polynomial fit on `window` equispaced points,
/// evaluated at the window centre.
SavGolFilter savgol_weights(int window, int degree);

enum class Axis { Space, Time };

/// Convolves each row (Space) or column (Time) of `field` with the filter.
/// Space wraps periodically. Time mirrors about the two end samples
/// (u[-k] = u[k], u[N-1+k] = u[N-1-k]).
Eigen::MatrixXd smooth(const Eigen::MatrixXd& field, Axis axis, const SavGolFilter& filter);

/// Fourth-order central difference (-u[+2] + 8u[+1] - 8u[-1] + u[-2]) / (12 step).
/// Space wraps periodically. In time the first and last two samples use
/// second-order one-sided or centred stencils.
Eigen::MatrixXd central_diff_5pt(const Eigen::MatrixXd& field, Axis axis, double step);

/// Denoised derivative with the unreliable time band recorded.
struct DerivativeField {
    Grid grid;
    Eigen::MatrixXd values;
    int space_order = 0;
    int time_order = 0;
    int space_margin = 0;
    int time_margin = 0;
};

/// Approximates d^n/dx^n d^m/dt^m u by (S_x D_x)^n (S_t D_t)^m S_x S_t U.
/// The last time derivative is not followed by a time smoothing. With no
/// filter the smoothing steps are skipped and plain differences remain.
DerivativeField sdd_derivative(const Trajectory& traj, int space_order, int time_order,
                               const std::optional<SavGolFilter>& filter);

/// Number of time samples dropped at each end before features are built.
int interior_time_trim(const std::optional<SavGolFilter>& filter);

}  // namespace gpident
