#include "gpident/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace gpident {

std::string derivative_label(int order) {
    if (order < 0)
        throw std::invalid_argument("derivative order must be non-negative");
    return order == 0 ? std::string("u") : "u_" + std::string(static_cast<std::size_t>(order), 'x');
}

std::string FeatureSpec::label() const {
    if (factors.empty()) return "1";
    std::string out;
    for (std::size_t i = 0; i < factors.size();) {
        std::size_t j = i;
        while (j < factors.size() && factors[j] == factors[i]) ++j;
        if (!out.empty()) out += '*';
        out += derivative_label(factors[i]);
        if (j - i > 1) out += '^' + std::to_string(j - i);
        i = j;
    }
    return out;
}

FeatureSpec FeatureSpec::from_label(const std::string& label) {
    FeatureSpec spec;
    if (label == "1") return spec;
    std::size_t pos = 0;
    while (pos <= label.size()) {
        const std::size_t star = label.find('*', pos);
        const std::string tok = label.substr(pos, star == std::string::npos ? std::string::npos : star - pos);
        std::string base = tok;
        int power = 1;
        if (const auto caret = tok.find('^'); caret != std::string::npos) {
            base = tok.substr(0, caret);
            power = std::stoi(tok.substr(caret + 1));
        }
        int order = -1;
        if (base == "u") {
            order = 0;
        } else if (base.size() > 2 && base.compare(0, 2, "u_") == 0 &&
                   base.find_first_not_of('x', 2) == std::string::npos) {
            order = static_cast<int>(base.size()) - 2;
        }
        if (order < 0 || power < 1)
            throw std::invalid_argument("unrecognised feature label '" + label + "'");
        for (int k = 0; k < power; ++k) spec.factors.push_back(order);
        if (star == std::string::npos) break;
        pos = star + 1;
    }
    std::sort(spec.factors.begin(), spec.factors.end());
    return spec;
}

namespace {

void multisets(int size, int lo, int max_order, std::vector<int>& cur, std::vector<FeatureSpec>& out) {
    if (static_cast<int>(cur.size()) == size) {
        out.push_back(FeatureSpec{cur});
        return;
    }
    for (int o = lo; o <= max_order; ++o) {
        cur.push_back(o);
        multisets(size, o, max_order, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<FeatureSpec> enumerate_dictionary(int max_deriv, int max_product) {
    if (max_deriv < 1 || max_product < 1)
        throw std::invalid_argument("enumerate_dictionary: max_deriv and max_product must be >= 1");
    std::vector<FeatureSpec> out{FeatureSpec{}};
    std::vector<int> cur;
    for (int s = 1; s <= max_product; ++s) multisets(s, 0, max_deriv, cur, out);
    return out;
}

FeatureFields eval_features(const Trajectory& traj, const std::vector<FeatureSpec>& specs,
                            const std::optional<SavGolFilter>& filter) {
    const Grid& g = traj.grid;
    const int trim = interior_time_trim(filter);
    const int n_int = g.N - 2 * trim;
    if (n_int < 1)
        throw std::invalid_argument("eval_features: time axis too short for the interior trim");

    int max_order = 0;
    for (const auto& s : specs) max_order = std::max(max_order, s.max_order());

    std::vector<Eigen::MatrixXd> derivs;
    for (int o = 0; o <= max_order; ++o)
        derivs.push_back(sdd_derivative(traj, o, 0, filter).values.middleCols(trim, n_int));

    FeatureFields out;
    out.x.resize(g.I);
    for (int i = 0; i < g.I; ++i) out.x[i] = g.x(i);
    out.t.resize(n_int);
    for (int n = 0; n < n_int; ++n) out.t[n] = g.t(n + trim);

    out.values.reserve(specs.size());
    for (const auto& s : specs) {
        Eigen::MatrixXd f = Eigen::MatrixXd::Ones(g.I, n_int);
        for (int o : s.factors) f.array() *= derivs[o].array();
        out.values.push_back(std::move(f));
    }
    out.response = sdd_derivative(traj, 0, 1, filter).values.middleCols(trim, n_int);
    return out;
}

void FeatureSystem::normalize() {
    if (normalized) return;
    col_norms.resize(A.cols());
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
        const double nrm = A.col(c).norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm))
            throw std::runtime_error("feature system: column " + std::to_string(c) + " has zero norm");
        col_norms[c] = nrm;
        A.col(c) /= nrm;
    }
    y_norm = y.norm();
    if (!(y_norm > 0.0) || !std::isfinite(y_norm))
        throw std::runtime_error("feature system: response has zero norm");
    y /= y_norm;
    normalized = true;
}

Eigen::MatrixXd FeatureSystem::raw_A() const {
    if (!normalized) return A;
    return A * col_norms.asDiagonal();
}

Eigen::VectorXd FeatureSystem::raw_y() const {
    return normalized ? Eigen::VectorXd(y * y_norm) : y;
}

FeatureSystem assemble(const FeatureFields& fields, const BasisSet& basis,
                       const std::vector<std::string>& labels) {
    const Eigen::Index ni = static_cast<Eigen::Index>(fields.x.size());
    const Eigen::Index nt = static_cast<Eigen::Index>(fields.t.size());
    const Eigen::Index rows = ni * nt;
    const int G = static_cast<int>(fields.values.size());
    const int M = basis.M();
    if (G == 0)
        throw std::invalid_argument("assemble: empty dictionary");
    if (fields.response.rows() != ni || fields.response.cols() != nt)
        throw std::invalid_argument("assemble: response shape differs from the interior grid");

    const Eigen::MatrixXd bx = basis.space().collocation(fields.x);  // I' x M1
    const Eigen::MatrixXd bt = basis.time().collocation(fields.t);   // N' x M2

    FeatureSystem sys;
    sys.groups = G;
    sys.M = M;
    sys.A.resize(rows, static_cast<Eigen::Index>(G) * M);
    for (int g = 0; g < G; ++g) {
        const Eigen::MatrixXd& f = fields.values[g];
        if (f.rows() != ni || f.cols() != nt)
            throw std::invalid_argument("assemble: feature shape differs from the interior grid");
        for (int m = 0; m < M; ++m) {
            const int m1 = m % basis.M1();
            const int m2 = m / basis.M1();
            auto col = sys.A.col(static_cast<Eigen::Index>(g) * M + m);
            for (Eigen::Index n = 0; n < nt; ++n)
                col.segment(n * ni, ni) = f.col(n).cwiseProduct(bx.col(m1)) * bt(n, m2);
            if (col.squaredNorm() == 0.0) {
                const std::string name = g < static_cast<int>(labels.size()) ? labels[g] : "group " + std::to_string(g);
                throw std::runtime_error("assemble: feature '" + name + "' times basis function " +
                                         std::to_string(m) + " vanishes on the interior grid");
            }
        }
    }
    sys.y = Eigen::Map<const Eigen::VectorXd>(fields.response.data(), rows);
    sys.normalize();
    return sys;
}

namespace {

// Columns: products b_a * b_b for a <= b, in row-major pair order.
Eigen::MatrixXd pair_products(const Eigen::MatrixXd& b) {
    const Eigen::Index k = b.cols();
    Eigen::MatrixXd out(b.rows(), k * (k + 1) / 2);
    Eigen::Index c = 0;
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index bb = a; bb < k; ++bb) out.col(c++) = b.col(a).cwiseProduct(b.col(bb));
    return out;
}

Eigen::Index pair_index(Eigen::Index a, Eigen::Index b, Eigen::Index k) {
    if (a > b) std::swap(a, b);
    return a * k - a * (a - 1) / 2 + (b - a);
}

}  // namespace

double tensor_gram_cost(const FeatureFields& fields, const BasisSet& basis) {
    const double G = static_cast<double>(fields.values.size());
    const double pts = static_cast<double>(fields.x.size()) * static_cast<double>(fields.t.size());
    const double p1 = basis.M1() * (basis.M1() + 1) / 2.0;
    const double p2 = basis.M2() * (basis.M2() + 1) / 2.0;
    return G * (G + 1) / 2 * (pts * (1 + p1) + p1 * static_cast<double>(fields.t.size()) * p2);
}

double direct_gram_cost(const FeatureFields& fields, const BasisSet& basis) {
    const double cols = static_cast<double>(fields.values.size()) * basis.M();
    return static_cast<double>(fields.x.size()) * static_cast<double>(fields.t.size()) * cols * (cols + 1) / 2;
}

Eigen::MatrixXd tensor_gram(const FeatureFields& fields, const BasisSet& basis) {
    const int G = static_cast<int>(fields.values.size());
    const int M1 = basis.M1(), M2 = basis.M2(), M = basis.M();
    const Eigen::MatrixXd wx = pair_products(basis.space().collocation(fields.x));  // I' x P1
    const Eigen::MatrixXd wt = pair_products(basis.time().collocation(fields.t));   // N' x P2

    Eigen::MatrixXd gram(static_cast<Eigen::Index>(G) * M, static_cast<Eigen::Index>(G) * M);
    Eigen::MatrixXd prod;
    for (int g = 0; g < G; ++g) {
        for (int h = g; h < G; ++h) {
            prod = fields.values[g].cwiseProduct(fields.values[h]);
            const Eigen::MatrixXd s = wx.transpose() * prod * wt;  // P1 x P2
            for (int m = 0; m < M; ++m) {
                for (int mm = 0; mm < M; ++mm) {
                    const double v = s(pair_index(m % M1, mm % M1, M1), pair_index(m / M1, mm / M1, M2));
                    gram(static_cast<Eigen::Index>(g) * M + m, static_cast<Eigen::Index>(h) * M + mm) = v;
                    gram(static_cast<Eigen::Index>(h) * M + mm, static_cast<Eigen::Index>(g) * M + m) = v;
                }
            }
        }
    }
    return gram;
}

void write_feature_system(const FeatureSystem& sys, const std::vector<std::string>& labels,
                          const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    const char magic[8] = {'G', 'P', 'F', 'S', '1', 0, 0, 0};
    out.write(magic, sizeof magic);
    const std::int64_t header[4] = {sys.rows(), sys.cols(), sys.groups, sys.M};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    auto put = [&](const double* p, Eigen::Index n) {
        out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    };
    put(sys.A.data(), sys.A.size());
    put(sys.y.data(), sys.y.size());
    const Eigen::VectorXd norms = sys.normalized ? sys.col_norms : Eigen::VectorXd::Ones(sys.cols());
    put(norms.data(), norms.size());
    put(&sys.y_norm, 1);
    for (int g = 0; g < sys.groups; ++g)
        out << (g < static_cast<int>(labels.size()) ? labels[g] : std::to_string(g)) << '\n';
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace gpident
