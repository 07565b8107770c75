#include "gpident/sdd.hpp"
#include "gpident/simulate.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace gpident;

namespace {

// Weights from the normal equations of the local polynomial fit.
Eigen::VectorXd savgol_oracle(int w, int q) {
    const int h = (w - 1) / 2;
    Eigen::MatrixXd V(w, q + 1);
    for (int r = 0; r < w; ++r)
        for (int c = 0; c <= q; ++c) V(r, c) = std::pow(static_cast<double>(r - h), c);
    const Eigen::MatrixXd normal = V.transpose() * V;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    Eigen::VectorXd out(w);
    for (int j = 0; j < w; ++j) out[j] = lu.solve(V.row(j).transpose())[0];
    return out;
}

Eigen::MatrixXd along_time(int I, int N, const std::function<double(double)>& f, double dt) {
    Eigen::MatrixXd m(I, N);
    for (int n = 0; n < N; ++n) m.col(n).setConstant(f(n * dt));
    return m;
}

Eigen::MatrixXd along_space(int I, int N, const std::function<double(double)>& f, double dx) {
    Eigen::MatrixXd m(I, N);
    for (int i = 0; i < I; ++i) m.row(i).setConstant(f(i * dx));
    return m;
}

}  // namespace

TEST_CASE("Savitzky-Golay weights against the normal equations") {
    for (int w : {5, 7, 9, 15}) {
        for (int q : {2, 3}) {
            const SavGolFilter f = savgol_weights(w, q);
            const Eigen::VectorXd ref = savgol_oracle(w, q);
            CHECK((f.weights - ref).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(std::abs(f.weights.sum() - 1.0) < 1e-12);
            for (int l = 1; l <= f.half_width(); ++l) CHECK(f.weight(l) == f.weight(-l));
        }
    }
}

TEST_CASE("tabulated five point quadratic weights") {
    const SavGolFilter f = savgol_weights(5, 2);
    const double ref[5] = {-3.0 / 35, 12.0 / 35, 17.0 / 35, 12.0 / 35, -3.0 / 35};
    for (int j = 0; j < 5; ++j) CHECK(f.weights[j] == doctest::Approx(ref[j]).epsilon(1e-14));
    const SavGolFilter g = savgol_weights(3, 2);
    CHECK(g.weights[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(g.weights[1] == doctest::Approx(1.0));
}

TEST_CASE("invalid windows are rejected") {
    CHECK_THROWS_AS(savgol_weights(4, 2), std::invalid_argument);
    CHECK_THROWS_AS(savgol_weights(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(savgol_weights(5, 5), std::invalid_argument);
    const Eigen::MatrixXd small = Eigen::MatrixXd::Ones(8, 8);
    CHECK_THROWS_AS(smooth(small, Axis::Space, savgol_weights(9, 2)), std::invalid_argument);
    CHECK_THROWS_AS(central_diff_5pt(Eigen::MatrixXd::Ones(4, 8), Axis::Space, 0.1), std::invalid_argument);
}

TEST_CASE("smoothing reproduces quadratics at interior points") {
    const double h = 0.1;
    for (int w : {5, 7, 9, 15}) {
        for (int q : {2, 3}) {
            const SavGolFilter f = savgol_weights(w, q);
            const auto sq = [](double z) { return z * z - 0.3 * z + 1.0; };
            const Eigen::MatrixXd ft = along_time(3, 40, sq, h);
            const Eigen::MatrixXd st = smooth(ft, Axis::Time, f);
            for (int n = f.half_width(); n < 40 - f.half_width(); ++n) CHECK(st(1, n) == doctest::Approx(ft(1, n)));
            const Eigen::MatrixXd fx = along_space(40, 3, sq, h);
            const Eigen::MatrixXd sx = smooth(fx, Axis::Space, f);
            for (int i = f.half_width(); i < 40 - f.half_width(); ++i) CHECK(sx(i, 2) == doctest::Approx(fx(i, 2)));
        }
    }
}

TEST_CASE("constant fields pass through smoothing") {
    const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(32, 20, -2.5);
    const SavGolFilter f = savgol_weights(15, 2);
    CHECK((smooth(c, Axis::Space, f) - c).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((smooth(c, Axis::Time, f) - c).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("periodic smoothing and differencing commute with cyclic shifts") {
    Eigen::MatrixXd u(64, 12);
    for (int i = 0; i < 64; ++i)
        for (int n = 0; n < 12; ++n) u(i, n) = std::sin(0.37 * i * i + n) + 0.1 * i;
    const int shift = 5;
    Eigen::MatrixXd shifted(64, 12);
    for (int i = 0; i < 64; ++i) shifted.row((i + shift) % 64) = u.row(i);
    const SavGolFilter f = savgol_weights(9, 3);
    const Eigen::MatrixXd a = smooth(u, Axis::Space, f), b = smooth(shifted, Axis::Space, f);
    const Eigen::MatrixXd da = central_diff_5pt(u, Axis::Space, 0.2), db = central_diff_5pt(shifted, Axis::Space, 0.2);
    for (int i = 0; i < 64; ++i) {
        CHECK((a.row(i) - b.row((i + shift) % 64)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((da.row(i) - db.row((i + shift) % 64)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("smoothing reduces noise on a sine") {
    const int I = 256;
    const Grid g(0.0, 2.0 * std::numbers::pi, 0.0, 1.0, I, 8);
    Eigen::MatrixXd clean(I, 8);
    for (int i = 0; i < I; ++i) clean.row(i).setConstant(std::sin(g.x(i)));
    const Trajectory noisy = add_noise(Trajectory(g, clean), 10.0, 3);
    const Eigen::MatrixXd sm = smooth(noisy.values, Axis::Space, savgol_weights(15, 2));
    const double before = std::sqrt((noisy.values - clean).squaredNorm() / clean.size());
    const double after = std::sqrt((sm - clean).squaredNorm() / clean.size());
    CHECK(after * 2.0 < before);
}

TEST_CASE("five point stencil is exact on low degree polynomials") {
    const double h = 0.05;
    const auto lin = [](double z) { return 3.0 * z - 1.0; };
    const Eigen::MatrixXd dl = central_diff_5pt(along_time(2, 30, lin, h), Axis::Time, h);
    CHECK((dl.array() - 3.0).abs().maxCoeff() < 1e-10);

    const auto quartic = [](double z) { return z * z * z * z - 2.0 * z * z * z + z; };
    const auto dq = [](double z) { return 4.0 * z * z * z - 6.0 * z * z + 1.0; };
    const Eigen::MatrixXd t4 = central_diff_5pt(along_time(2, 30, quartic, h), Axis::Time, h);
    for (int n = 2; n < 28; ++n) CHECK(t4(0, n) == doctest::Approx(dq(n * h)).epsilon(1e-11));
    const Eigen::MatrixXd x4 = central_diff_5pt(along_space(30, 2, quartic, h), Axis::Space, h);
    for (int i = 2; i < 28; ++i) CHECK(x4(i, 1) == doctest::Approx(dq(i * h)).epsilon(1e-11));
}

TEST_CASE("repeated spatial differences are exact on quartics away from the wrap") {
    const double h = 0.1;
    const int I = 40;
    const auto quartic = [](double z) { return 0.5 * z * z * z * z - z * z * z + 2.0 * z - 4.0; };
    const auto exact = [](int n, double z) {
        switch (n) {
        case 1: return 2.0 * z * z * z - 3.0 * z * z + 2.0;
        case 2: return 6.0 * z * z - 6.0 * z;
        case 3: return 12.0 * z - 6.0;
        default: return 12.0;
        }
    };
    Eigen::MatrixXd v = along_space(I, 1, quartic, h);
    for (int n = 1; n <= 4; ++n) {
        v = central_diff_5pt(v, Axis::Space, h);
        for (int i = 2 * n; i < I - 2 * n; ++i) CHECK(v(i, 0) == doctest::Approx(exact(n, i * h)).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("five point stencil converges at fourth order") {
    auto max_err = [](int I) {
        const double L = 2.0 * std::numbers::pi, h = L / I;
        Eigen::MatrixXd u(I, 1);
        for (int i = 0; i < I; ++i) u(i, 0) = std::sin(i * h);
        const Eigen::MatrixXd d = central_diff_5pt(u, Axis::Space, h);
        double e = 0.0;
        for (int i = 0; i < I; ++i) e = std::max(e, std::abs(d(i, 0) - std::cos(i * h)));
        return e;
    };
    const double e1 = max_err(32), e2 = max_err(64);
    const double rate = std::log2(e1 / e2);
    CHECK(rate > 3.8);
    CHECK(rate < 4.2);
}

TEST_CASE("derivative of order zero without a filter is the identity") {
    const Grid g(0, 1, 0, 1, 16, 12);
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(16, 12);
    const Trajectory tr(g, v);
    CHECK(sdd_derivative(tr, 0, 0, std::nullopt).values == v);
}

TEST_CASE("second spatial derivative of a sine") {
    const int I = 256;
    const double L = 3.0;
    const Grid g(0.0, L, 0.0, 1.0, I, 10);
    Eigen::MatrixXd v(I, 10);
    for (int i = 0; i < I; ++i) v.row(i).setConstant(std::sin(2.0 * std::numbers::pi * g.x(i) / L));
    const DerivativeField d = sdd_derivative(Trajectory(g, v), 2, 0, std::nullopt);
    const double k2 = std::pow(2.0 * std::numbers::pi / L, 2);
    const Eigen::MatrixXd exact = -k2 * v;
    CHECK((d.values - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("time derivative skips the trailing smoothing") {
    const Grid g(0, 1, 0, 1, 32, 40);
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(32, 40);
    const Trajectory tr(g, v);
    const SavGolFilter f = savgol_weights(7, 2);
    const Eigen::MatrixXd pre = smooth(smooth(v, Axis::Time, f), Axis::Space, f);
    const Eigen::MatrixXd manual_t = central_diff_5pt(pre, Axis::Time, g.dt());
    CHECK((sdd_derivative(tr, 0, 1, f).values - manual_t).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::MatrixXd manual_xx =
        smooth(central_diff_5pt(smooth(central_diff_5pt(pre, Axis::Space, g.dx()), Axis::Space, f), Axis::Space, g.dx()),
               Axis::Space, f);
    CHECK((sdd_derivative(tr, 2, 0, f).values - manual_xx).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(interior_time_trim(f) == 7);
    CHECK(interior_time_trim(std::nullopt) == 2);
}

TEST_CASE("denoised derivatives are linear") {
    const Grid g(0, 1, 0, 1, 32, 24);
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(32, 24), b = Eigen::MatrixXd::Random(32, 24);
    const SavGolFilter f = savgol_weights(5, 2);
    for (auto [n, m] : {std::pair{1, 0}, std::pair{2, 0}, std::pair{0, 1}, std::pair{3, 0}}) {
        const Eigen::MatrixXd lhs = sdd_derivative(Trajectory(g, 2.0 * a - 3.0 * b), n, m, f).values;
        const Eigen::MatrixXd rhs =
            2.0 * sdd_derivative(Trajectory(g, a), n, m, f).values - 3.0 * sdd_derivative(Trajectory(g, b), n, m, f).values;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8 * rhs.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("denoising keeps derivatives of noisy advection-diffusion data bounded") {
    const Trajectory clean = solve(make_advection_diffusion());
    const Trajectory noisy = add_noise(clean, 10.0, 1);
    const SavGolFilter f = savgol_weights(15, 2);
    const int trim = interior_time_trim(f);
    const int n_int = clean.grid.N - 2 * trim;
    auto field = [&](const Trajectory& tr, int order, const std::optional<SavGolFilter>& flt) {
        return Eigen::MatrixXd(sdd_derivative(tr, order, 0, flt).values.middleCols(trim, n_int));
    };
    for (int order : {1, 2}) {
        const Eigen::MatrixXd ref = field(clean, order, std::nullopt);
        const Eigen::MatrixXd den = field(noisy, order, f);
        const Eigen::MatrixXd raw = field(noisy, order, std::nullopt);
        CHECK(den.cwiseAbs().maxCoeff() < 3.0 * ref.cwiseAbs().maxCoeff());
        // perturbation left by plain differences versus by SDD
        CHECK((raw - ref).cwiseAbs().maxCoeff() > 10.0 * (den - ref).cwiseAbs().maxCoeff());
    }
}
