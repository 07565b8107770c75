#include "gpident/trajdata.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gpident {

Grid::Grid(double x_min_, double x_max_, double t_min_, double t_max_, int I_, int N_)
    : x_min(x_min_), x_max(x_max_), t_min(t_min_), t_max(t_max_), I(I_), N(N_) {
    if (I < 8 || N < 8)
        throw std::invalid_argument("Grid: need at least 8 samples in space and time");
    if (!(x_max > x_min) || !(t_max > t_min))
        throw std::invalid_argument("Grid: empty space or time interval");
}

Trajectory::Trajectory(Grid g, Eigen::MatrixXd v) : grid(g), values(std::move(v)) {
    if (values.rows() != grid.I || values.cols() != grid.N)
        throw std::invalid_argument("Trajectory: values shape does not match the grid");
    if (!values.allFinite())
        throw std::invalid_argument("Trajectory: non-finite values");
}

CoefficientField CoefficientField::constant(double value, std::string label) {
    return {[value](double, double) { return value; }, std::move(label)};
}

void CoefficientField::sample_column(const std::vector<double>& xs, double t, Eigen::VectorXd& out) const {
    if (column) {
        column(xs, t, out);
        return;
    }
    out.resize(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) out[static_cast<Eigen::Index>(i)] = evaluator(xs[i], t);
}

Eigen::MatrixXd sample(const CoefficientField& field, const Grid& grid) {
    std::vector<double> xs(static_cast<std::size_t>(grid.I));
    for (int i = 0; i < grid.I; ++i) xs[static_cast<std::size_t>(i)] = grid.x(i);
    Eigen::MatrixXd out(grid.I, grid.N);
    Eigen::VectorXd col;
    for (int n = 0; n < grid.N; ++n) {
        field.sample_column(xs, grid.t(n), col);
        out.col(n) = col;
    }
    return out;
}

NormalStream::NormalStream(std::uint64_t seed) : engine_(seed) {}

// 53 random bits mapped into (0, 1).
double NormalStream::uniform_open() {
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double NormalStream::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double population_std(const Eigen::MatrixXd& values) {
    const double mean = values.mean();
    return std::sqrt((values.array() - mean).square().mean());
}

Trajectory add_noise(const Trajectory& clean, double percent, std::uint64_t seed) {
    if (!(percent >= 0.0))
        throw std::invalid_argument("add_noise: noise percent must be non-negative");
    if (clean.is_noisy)
        throw std::invalid_argument("add_noise: trajectory already carries noise");

    Trajectory out = clean;
    out.noise_percent = percent;
    out.seed = seed;
    const double sigma = percent / 100.0 * population_std(clean.values);
    if (sigma == 0.0)
        return out;

    out.is_noisy = true;
    NormalStream normal(seed);
    // Column-major sweep: time slice by time slice.
    for (Eigen::Index n = 0; n < out.values.cols(); ++n)
        for (Eigen::Index i = 0; i < out.values.rows(); ++i)
            out.values(i, n) += sigma * normal.next();
    return out;
}

double tau(double t, int sign, double rate, double breakpoint, double t_max) {
    if (!(t_max > 0.0))
        throw std::invalid_argument("tau: t_max must be positive");
    const double s = sign >= 0 ? 1.0 : -1.0;
    return 0.5 + 0.5 * std::tanh(s * rate * (t - breakpoint) / t_max);
}

void write_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    const Grid& g = traj.grid;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "# format: gpident-trajectory-v1\n";
    out << "# x_min: " << num(g.x_min) << "\n";
    out << "# x_max: " << num(g.x_max) << "\n";
    out << "# t_min: " << num(g.t_min) << "\n";
    out << "# t_max: " << num(g.t_max) << "\n";
    out << "# I: " << g.I << "\n";
    out << "# N: " << g.N << "\n";
    out << "# noise_percent: " << num(traj.noise_percent) << "\n";
    out << "# seed: " << traj.seed << "\n";
    out << "# is_noisy: " << (traj.is_noisy ? 1 : 0) << "\n";
    for (int i = 0; i < g.I; ++i) {
        for (int n = 0; n < g.N; ++n) {
            if (n) out << ',';
            out << num(traj.values(i, n));
        }
        out << '\n';
    }
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

Trajectory read_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open trajectory file " + path.string());

    std::map<std::string, std::string> header;
    std::string line;
    std::streampos body = in.tellg();
    while (std::getline(in, line)) {
        if (line.empty() || line[0] != '#') break;
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        header[trim(line.substr(1, colon - 1))] = trim(line.substr(colon + 1));
        body = in.tellg();
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = header.find(key);
        if (it == header.end())
            throw std::runtime_error(path.string() + ": missing header field '" + key + "'");
        return it->second;
    };
    if (need("format") != "gpident-trajectory-v1")
        throw std::runtime_error(path.string() + ": unsupported format " + need("format"));

    const Grid grid(std::stod(need("x_min")), std::stod(need("x_max")), std::stod(need("t_min")),
                    std::stod(need("t_max")), std::stoi(need("I")), std::stoi(need("N")));
    Eigen::MatrixXd values(grid.I, grid.N);

    in.clear();
    in.seekg(body);
    for (int i = 0; i < grid.I; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error(path.string() + ": expected " + std::to_string(grid.I) + " rows");
        const char* p = line.c_str();
        for (int n = 0; n < grid.N; ++n) {
            char* end = nullptr;
            values(i, n) = std::strtod(p, &end);
            if (end == p)
                throw std::runtime_error(path.string() + ": malformed row " + std::to_string(i));
            p = end;
            if (*p == ',') ++p;
        }
    }

    Trajectory traj(grid, std::move(values));
    traj.noise_percent = std::stod(need("noise_percent"));
    traj.seed = std::stoull(need("seed"));
    auto noisy = header.find("is_noisy");
    traj.is_noisy = noisy != header.end() ? noisy->second == "1" : traj.noise_percent > 0.0;
    return traj;
}

}  // namespace gpident
