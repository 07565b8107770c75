#include "gpident/metrics.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

using namespace gpident;

namespace {

constexpr double pi = std::numbers::pi;

// One identified group per label with a constant coefficient.
IdentifiedModel constant_model(const std::vector<std::string>& labels, const std::vector<double>& values,
                               const Grid& g) {
    const BasisSet basis(BSplineBasis1D::constant(g.x_min, g.x_max), BSplineBasis1D::constant(g.t_min, g.t_max));
    IdentifiedModel m{{}, labels, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(labels.size())),
                      static_cast<int>(labels.size()), basis, false};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        m.support.push_back(static_cast<int>(i));
        m.coeffs[static_cast<Eigen::Index>(i)] = values[i];
    }
    return m;
}

}  // namespace

TEST_CASE("relative L1 error") {
    const Grid g(0.0, 1.0, 0.0, 1.0, 16, 16);
    const CoefficientField truth{[](double x, double t) { return 1.0 + x + t; }, "c"};
    CHECK(rel_l1_error(truth, truth, g) == 0.0);
    const CoefficientField scaled{[](double x, double t) { return 1.1 * (1.0 + x + t); }, "c"};
    CHECK(rel_l1_error(scaled, truth, g) == doctest::Approx(10.0));
    CHECK(rel_l1_error(CoefficientField::constant(0.0), truth, g) == doctest::Approx(100.0));
    CHECK_THROWS_AS(rel_l1_error(truth, CoefficientField::constant(0.0), g), std::invalid_argument);

    // scaling both fields leaves the error alone
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd a(9, 7), b(9, 7);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a.data()[i] = nd(rng);
        b.data()[i] = nd(rng);
    }
    for (double s : {-3.0, 0.01, 250.0}) CHECK(rel_l1_error(s * a, s * b) == doctest::Approx(rel_l1_error(a, b)));
    CHECK_THROWS_AS(rel_l1_error(a, Eigen::MatrixXd(9, 6)), std::invalid_argument);
}

TEST_CASE("error over the interior window") {
    const Grid g(0.0, 1.0, 0.0, 1.0, 8, 10);
    const CoefficientField truth = CoefficientField::constant(2.0);
    // wrong only at the first and last time samples
    const CoefficientField est{[&](double, double t) { return (t == 0.0 || t == 1.0) ? 4.0 : 2.0; }, "e"};
    CHECK(rel_l1_error(est, truth, g) == doctest::Approx(100.0 * 2 * 8 * 2.0 / (80 * 2.0)));
    CHECK(rel_l1_error(est, truth, g, Region::interior(g, 1)) == 0.0);
    CHECK_THROWS_AS(Region::interior(g, 5), std::invalid_argument);
}

TEST_CASE("Jaccard index") {
    const std::set<std::string> truth{"u", "u_x", "u_xx"};
    CHECK(jaccard(truth, truth) == 1.0);
    CHECK(jaccard({"u^2", "u_xxx"}, truth) == 0.0);
    CHECK(jaccard({"u", "u_x"}, truth) == doctest::Approx(2.0 / 3.0));
    CHECK(jaccard({"u", "u^2"}, truth) == doctest::Approx(1.0 / 4.0));
    const std::vector<std::set<std::string>> sets{{"a"}, {"a", "b"}, {"b", "c", "d"}, {"a", "c"}, {"e"}};
    for (const auto& x : sets) {
        for (const auto& y : sets) {
            CHECK(jaccard(x, y) == jaccard(y, x));
            CHECK(jaccard(x, y) >= 0.0);
            CHECK(jaccard(x, y) <= 1.0);
            CHECK((jaccard(x, y) == 1.0) == (x == y));
        }
    }
}

TEST_CASE("simulating the exact model reproduces the reference") {
    const Grid g(0.0, 10.0, 0.0, 2.0, 128, 64);
    const PDEProblem p = make_problem(PDEKind::Custom, "adv-heat", g,
                                      [](double x) { return std::cos(2 * pi * x / 10.0) + 0.5; },
                                      {{"u_x", CoefficientField::constant(-0.5)},
                                       {"u_xx", CoefficientField::constant(0.1)}});
    const Trajectory ref = solve(p);
    const IdentifiedModel exact = constant_model({"u_x", "u_xx"}, {-0.5, 0.1}, g);
    const SimulationComparison cmp = simulate_identified(exact, p, ref);
    CHECK(cmp.error_percent < 1e-4);

    // a wrong coefficient shows up
    const IdentifiedModel off = constant_model({"u_x", "u_xx"}, {-0.5, 0.12}, g);
    CHECK(simulate_identified(off, p, ref).error_percent > 1e-2);

    // spurious fourth-order term with a negligible coefficient
    const IdentifiedModel spurious = constant_model({"u_x", "u_xx", "u_xxxx"}, {-0.5, 0.1, -1e-9}, g);
    const SimulationComparison s = simulate_identified(spurious, p, ref);
    CHECK(std::isfinite(s.error_percent));
    CHECK(s.error_percent < 1e-2);

    const Trajectory other(Grid(0.0, 10.0, 0.0, 2.0, 64, 64), Eigen::MatrixXd::Zero(64, 64));
    CHECK_THROWS_AS(simulate_identified(exact, p, other), std::invalid_argument);
}

TEST_CASE("ground-truth Burgers coefficients reproduce the preset trajectory") {
    const PDEProblem p = make_burgers();
    const Trajectory ref = solve(p);
    // the true coefficient fields passed straight back through the solver
    std::vector<std::pair<std::string, CoefficientField>> terms;
    for (const auto& label : p.true_support) terms.emplace_back(label, p.true_coeff_fields.at(label));
    const PDEProblem again = make_problem(PDEKind::Custom, "again", p.grid, p.initial, terms);
    CHECK(rel_l1_error(solve(again).values, ref.values) < 1e-10);
}

TEST_CASE("diverging identified model is reported") {
    const Grid g(0.0, 1.0, 0.0, 3.0, 16, 31);
    const PDEProblem p = make_problem(PDEKind::Custom, "flat", g, [](double) { return 1.0; },
                                      {{"u", CoefficientField::constant(0.0)}});
    const Trajectory ref = solve(p);
    const IdentifiedModel wild = constant_model({"u^2"}, {5.0}, g);
    CHECK_THROWS_AS(simulate_identified(wild, p, ref, {4, 0.25, true}), std::runtime_error);
}
