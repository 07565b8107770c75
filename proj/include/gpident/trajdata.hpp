#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

namespace gpident {

/// Uniform space-time sampling grid.
///
/// Space is periodic on [x_min, x_max): x_i = x_min + i*dx, dx = (x_max - x_min)/I.
/// Time is closed on [t_min, t_max]:    t_n = t_min + n*dt, dt = (t_max - t_min)/(N - 1).
struct Grid {
    double x_min = 0.0;
    double x_max = 1.0;
    double t_min = 0.0;
    double t_max = 1.0;
    int I = 0;
    int N = 0;

    Grid() = default;
    Grid(double x_min, double x_max, double t_min, double t_max, int I, int N);

    double dx() const { return (x_max - x_min) / I; }
    double dt() const { return (t_max - t_min) / (N - 1); }
    double x(int i) const { return x_min + i * dx(); }
    double t(int n) const { return t_min + n * dt(); }
    double x_length() const { return x_max - x_min; }
    double t_length() const { return t_max - t_min; }

    bool operator==(const Grid&) const = default;
};

/// Observed scalar field U(x_i, t_n). Column n of `values` is the time slice t_n.
struct Trajectory {
    Grid grid;
    Eigen::MatrixXd values;  // I x N
    bool is_noisy = false;
    double noise_percent = 0.0;
    std::uint64_t seed = 0;

    Trajectory() = default;
    Trajectory(Grid grid, Eigen::MatrixXd values);
};

/// A space-time coefficient C(x, t) with a display label.
struct CoefficientField {
    std::function<double(double, double)> evaluator;
    std::string label;
    /// Optional faster path filling out[i] = C(xs[i], t); must agree with evaluator.
    std::function<void(const std::vector<double>& xs, double t, Eigen::VectorXd& out)> column = {};

    /// Values at every xs for one t, through `column` when it is set.
    void sample_column(const std::vector<double>& xs, double t, Eigen::VectorXd& out) const;

    double operator()(double x, double t) const { return evaluator(x, t); }

    static CoefficientField constant(double value, std::string label = {});
};

/// Samples `field` on every grid point.
Eigen::MatrixXd sample(const CoefficientField& field, const Grid& grid);

/// Deterministic normal variates: 64-bit Mersenne Twister feeding a Box-Muller
/// transform, so the stream is identical on every platform for a given seed.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed);
    double next();

private:
    double uniform_open();

    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Population standard deviation over all entries.
double population_std(const Eigen::MatrixXd& values);

/// U = u + eps with eps ~ N(0, sigma^2), sigma = (percent/100) * std(u).
Trajectory add_noise(const Trajectory& clean, double percent, std::uint64_t seed);

/// Smooth switch 1/2 + 1/2 tanh(sign * rate * (t - breakpoint) / t_max); sign is +1 or -1.
double tau(double t, int sign, double rate, double breakpoint, double t_max);

/// Trajectory CSV container.
///
/// Header lines start with '#' and hold `key: value` pairs (format, x_min, x_max,
/// t_min, t_max, I, N, noise_percent, seed). They are followed by I rows of N
/// comma-separated values: row i is the spatial point x_i, column n the time t_n.
/// Values are printed with 17 significant digits so a write/read cycle is exact.
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory(const std::filesystem::path& path);

}  // namespace gpident
