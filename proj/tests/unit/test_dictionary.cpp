#include "gpident/dictionary.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

using namespace gpident;

namespace {

// Every tuple of orders, sorted and deduplicated.
std::size_t brute_force_count(int D, int P) {
    std::set<std::vector<int>> seen{{}};
    for (int s = 1; s <= P; ++s) {
        std::vector<int> digits(static_cast<std::size_t>(s), 0);
        while (true) {
            std::vector<int> key = digits;
            std::sort(key.begin(), key.end());
            seen.insert(key);
            int k = 0;
            while (k < s && ++digits[static_cast<std::size_t>(k)] > D) digits[static_cast<std::size_t>(k++)] = 0;
            if (k == s) break;
        }
    }
    return seen.size();
}

Trajectory travelling_sine(int I, int N) {
    const Grid g(0.0, 2.0 * std::numbers::pi, 0.0, 0.5, I, N);
    Eigen::MatrixXd v(I, N);
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < I; ++i) v(i, n) = std::sin(g.x(i) - 0.7 * g.t(n)) + 0.2 * std::cos(2.0 * g.x(i));
    return Trajectory(g, v);
}

}  // namespace

TEST_CASE("dictionary sizes") {
    CHECK(enumerate_dictionary(3, 3).size() == 35);
    CHECK(enumerate_dictionary(4, 3).size() == 56);
    CHECK(enumerate_dictionary(6, 4).size() == 330);
    for (int D = 1; D <= 7; ++D)
        for (int P = 1; P <= 4; ++P) CHECK(enumerate_dictionary(D, P).size() == brute_force_count(D, P));
    CHECK_THROWS_AS(enumerate_dictionary(0, 3), std::invalid_argument);
}

TEST_CASE("dictionary order and labels") {
    const auto d = enumerate_dictionary(4, 3);
    CHECK(d[0].label() == "1");
    CHECK(d[1].label() == "u");
    CHECK(d[2].label() == "u_x");
    CHECK(d[5].label() == "u_xxxx");
    CHECK(d[6].label() == "u^2");
    CHECK(d[7].label() == "u*u_x");
    CHECK(d.back().label() == "u_xxxx^3");
    std::set<std::string> labels;
    for (const auto& f : d) {
        labels.insert(f.label());
        CHECK(FeatureSpec::from_label(f.label()) == f);
        CHECK(std::is_sorted(f.factors.begin(), f.factors.end()));
    }
    CHECK(labels.size() == d.size());
    CHECK(FeatureSpec::from_label("u_x*u") == FeatureSpec::from_label("u*u_x"));
    CHECK(FeatureSpec::from_label("u*u_xx^2").factors == std::vector<int>{0, 2, 2});
    CHECK_THROWS_AS(FeatureSpec::from_label("v_x"), std::invalid_argument);
    CHECK_THROWS_AS(FeatureSpec::from_label("u^0"), std::invalid_argument);
}

TEST_CASE("feature values") {
    const Trajectory tr = travelling_sine(256, 16);
    const std::vector<FeatureSpec> specs{FeatureSpec{}, FeatureSpec{{0, 0}}, FeatureSpec{{0, 1}}};
    const FeatureFields ff = eval_features(tr, specs, std::nullopt);
    const int trim = interior_time_trim(std::nullopt);
    REQUIRE(ff.values.size() == 3);
    CHECK(ff.t.size() == 16u - 2u * trim);
    CHECK(ff.x.size() == 256u);
    CHECK(ff.values[0].isConstant(1.0));
    const Eigen::MatrixXd u = tr.values.middleCols(trim, 16 - 2 * trim);
    CHECK((ff.values[1] - u.cwiseProduct(u)).cwiseAbs().maxCoeff() < 1e-14);

    Eigen::MatrixXd exact(256, ff.t.size());
    for (std::size_t n = 0; n < ff.t.size(); ++n) {
        for (int i = 0; i < 256; ++i) {
            const double x = ff.x[i], t = ff.t[n];
            const double uu = std::sin(x - 0.7 * t) + 0.2 * std::cos(2.0 * x);
            const double ux = std::cos(x - 0.7 * t) - 0.4 * std::sin(2.0 * x);
            exact(i, static_cast<Eigen::Index>(n)) = uu * ux;
        }
    }
    CHECK((ff.values[2] - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("constant feature with a constant basis gives equal unit entries") {
    const Trajectory tr = travelling_sine(32, 12);
    const FeatureFields ff = eval_features(tr, {FeatureSpec{}}, std::nullopt);
    const BasisSet basis(BSplineBasis1D::constant(0.0, 2.0 * std::numbers::pi), BSplineBasis1D::constant(0.0, 0.5));
    const FeatureSystem sys = assemble(ff, basis, {"1"});
    CHECK(sys.cols() == 1);
    CHECK(sys.A.col(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((sys.A.array() - sys.A(0, 0)).abs().maxCoeff() < 1e-15);
}

TEST_CASE("assembled system layout and normalisation") {
    const Trajectory tr = travelling_sine(48, 20);
    const auto specs = enumerate_dictionary(2, 2);
    std::vector<std::string> labels;
    for (const auto& s : specs) labels.push_back(s.label());
    const FeatureFields ff = eval_features(tr, specs, std::nullopt);
    const BasisSet basis(BSplineBasis1D::periodic_with_count(0.0, 2.0 * std::numbers::pi, 4, 3),
                         BSplineBasis1D::neumann_with_count(0.0, 0.5, 3, 1));
    const FeatureSystem sys = assemble(ff, basis, labels);
    const Eigen::Index ni = 48, nt = 20 - 2 * interior_time_trim(std::nullopt);
    CHECK(sys.rows() == ni * nt);
    CHECK(sys.cols() == static_cast<Eigen::Index>(specs.size()) * 12);
    CHECK(sys.groups == static_cast<int>(specs.size()));
    CHECK(sys.M == 12);
    for (Eigen::Index c = 0; c < sys.cols(); ++c) CHECK(std::abs(sys.A.col(c).norm() - 1.0) < 1e-12);
    CHECK(std::abs(sys.y.norm() - 1.0) < 1e-12);
    CHECK((sys.raw_y() - Eigen::Map<const Eigen::VectorXd>(ff.response.data(), ff.response.size())).norm() <
          1e-12 * sys.y_norm);

    // raw entries equal feature times basis at the grid point
    const Eigen::MatrixXd raw = sys.raw_A();
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const int i = static_cast<int>(rng() % ni), n = static_cast<int>(rng() % nt);
        const int g = static_cast<int>(rng() % sys.groups), m = static_cast<int>(rng() % sys.M);
        const double expect = ff.values[g](i, n) * basis.eval(m, ff.x[i], ff.t[n]);
        CHECK(raw(n * ni + i, g * sys.M + m) == doctest::Approx(expect).epsilon(1e-12).scale(1e-12));
    }
    // de-normalisation round trip
    FeatureSystem plain;
    plain.A = raw;
    CHECK((plain.raw_A() - raw).norm() == 0.0);
    Eigen::MatrixXd again = sys.A * sys.col_norms.asDiagonal();
    CHECK((again - raw).norm() <= 1e-12 * raw.norm());
}

TEST_CASE("vanishing column is reported with its feature") {
    const Grid g(0.0, 1.0, 0.0, 1.0, 16, 12);
    Eigen::MatrixXd v(16, 12);
    for (int n = 0; n < 12; ++n)
        for (int i = 0; i < 16; ++i) v(i, n) = 1.0 + n;  // u_x == 0 exactly
    const FeatureFields ff = eval_features(Trajectory(g, v), {FeatureSpec{{1}}}, std::nullopt);
    const BasisSet basis(BSplineBasis1D::constant(0, 1), BSplineBasis1D::constant(0, 1));
    try {
        assemble(ff, basis, {"u_x"});
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("u_x") != std::string::npos);
    }
}

TEST_CASE("separable Gram matrix equals the direct product") {
    const Trajectory tr = travelling_sine(40, 24);
    const auto specs = enumerate_dictionary(2, 2);
    const FeatureFields ff = eval_features(tr, specs, std::nullopt);
    const BasisSet basis(BSplineBasis1D::periodic_with_count(0.0, 2.0 * std::numbers::pi, 5, 3),
                         BSplineBasis1D::neumann_with_count(0.0, 0.5, 4, 2));
    const FeatureSystem sys = assemble(ff, basis);
    const Eigen::MatrixXd raw = sys.raw_A();
    const Eigen::MatrixXd direct = raw.transpose() * raw;
    const Eigen::MatrixXd fast = tensor_gram(ff, basis);
    CHECK((fast - direct).cwiseAbs().maxCoeff() <= 1e-12 * direct.cwiseAbs().maxCoeff());
    CHECK(tensor_gram_cost(ff, basis) > 0.0);
    CHECK(direct_gram_cost(ff, basis) == doctest::Approx(40.0 * 20 * 200 * 201 / 2));
}

TEST_CASE("binary dump layout") {
    const Trajectory tr = travelling_sine(16, 12);
    const auto specs = enumerate_dictionary(1, 1);
    const FeatureFields ff = eval_features(tr, specs, std::nullopt);
    const BasisSet basis(BSplineBasis1D::periodic_with_count(0.0, 2.0 * std::numbers::pi, 3, 2),
                         BSplineBasis1D::constant(0.0, 0.5));
    const FeatureSystem sys = assemble(ff, basis);
    const auto path = std::filesystem::temp_directory_path() / "gpident_system.bin";
    write_feature_system(sys, {"1", "u", "u_x"}, path);
    std::ifstream in(path, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    CHECK(std::string(magic, 5) == "GPFS1");
    std::int64_t header[4];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    CHECK(header[0] == sys.rows());
    CHECK(header[1] == sys.cols());
    CHECK(header[2] == 3);
    CHECK(header[3] == 3);
    Eigen::MatrixXd A(sys.rows(), sys.cols());
    in.read(reinterpret_cast<char*>(A.data()), static_cast<std::streamsize>(A.size() * sizeof(double)));
    CHECK(A == sys.A);
    in.close();
    std::filesystem::remove(path);
}
