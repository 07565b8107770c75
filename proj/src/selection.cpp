#include "gpident/selection.hpp"

#include "gpident/lstsq.hpp"
#include "gpident/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>

namespace gpident {

CandidatePath candidate_path(const ReducedSystem& sys, int K_max, SolverKind solver, const SolverOptions& opts,
                             int threads) {
    if (K_max < 1 || K_max > sys.groups)
        throw std::invalid_argument("candidate_path: K_max = " + std::to_string(K_max) + " outside [1, " +
                                    std::to_string(sys.groups) + "]");
    CandidatePath path;
    path.K_max = K_max;
    path.solutions.resize(static_cast<std::size_t>(K_max));
    parallel_for(K_max, threads, [&](int i) {
        path.solutions[i] = solver == SolverKind::Gpsp ? gpsp_solve(sys, i + 1, opts) : bsp_solve(sys, i + 1, opts);
    });
    path.R.resize(K_max);
    for (int i = 0; i < K_max; ++i) path.R[i] = path.solutions[i].residual_norm * path.solutions[i].residual_norm;
    return path;
}

CandidatePath candidate_path(const FeatureSystem& sys, int K_max, SolverKind solver, const SolverOptions& opts,
                             int threads) {
    return candidate_path(compress(sys.A, sys.y, sys.groups, sys.M, opts.compression), K_max, solver, opts,
                          threads);
}

Eigen::VectorXd rr_scores(const Eigen::VectorXd& R, int L) {
    const Eigen::Index K = R.size();
    if (L < 1 || L >= K)
        throw std::invalid_argument("rr_scores: need 1 <= L < K_max (L = " + std::to_string(L) +
                                    ", K_max = " + std::to_string(K) + ")");
    if (R[0] == 0.0)
        throw std::invalid_argument("rr_scores: R_1 = 0, the single-group fit is already exact");
    Eigen::VectorXd s(K - L);
    for (Eigen::Index k = 0; k < K - L; ++k) s[k] = (R[k] - R[k + L]) / (L * R[0]);
    return s;
}

void rr_scores(CandidatePath& path, int L) {
    path.s = rr_scores(path.R, L);
    path.L = L;
}

std::optional<int> select_k(const Eigen::VectorXd& s, double rho) {
    for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s[k] < rho) return static_cast<int>(k + 1);
    return std::nullopt;
}

std::optional<int> select_k(CandidatePath& path, double rho) {
    path.rho = rho;
    path.k_star = select_k(path.s, rho);
    return path.k_star;
}

void write_score_table(std::ostream& os, const CandidatePath& path) {
    os << "k,R_k,s_k,selected\n";
    char buf[64];
    for (int k = 1; k <= path.K_max; ++k) {
        os << k << ',';
        std::snprintf(buf, sizeof buf, "%.17g", path.R[k - 1]);
        os << buf << ',';
        if (k - 1 < path.s.size()) {
            std::snprintf(buf, sizeof buf, "%.17g", path.s[k - 1]);
            os << buf;
        }
        os << ',' << (path.k_star && *path.k_star == k ? 1 : 0) << '\n';
    }
}

std::string to_string(ReconstructionMode mode) {
    return mode == ReconstructionMode::LeastSquares ? "least_squares" : "rescale";
}

ReconstructionMode reconstruction_mode_from_string(const std::string& name) {
    if (name == "least_squares") return ReconstructionMode::LeastSquares;
    if (name == "rescale") return ReconstructionMode::Rescale;
    throw std::invalid_argument("unknown reconstruction mode '" + name + "' (least_squares, rescale)");
}

CoefficientField IdentifiedModel::coefficient_field(int g) const {
    const auto it = std::find(support.begin(), support.end(), g);
    if (it == support.end())
        throw std::invalid_argument("group " + std::to_string(g) + " is not in the identified support");
    const int M = basis.M();
    const Eigen::VectorXd c = coeffs.segment(static_cast<Eigen::Index>(g) * M, M);
    const BasisSet b = basis;
    CoefficientField f;
    f.label = labels[static_cast<std::size_t>(it - support.begin())];
    f.evaluator = [c, b](double x, double t) {
        double v = 0.0;
        for (int m = 0; m < b.M(); ++m)
            if (c[m] != 0.0) v += c[m] * b.eval(m, x, t);
        return v;
    };
    // C(x, t) = bx(x)^T Cm bt(t) with Cm the M1 x M2 coefficient matrix.
    const Eigen::MatrixXd cm = Eigen::Map<const Eigen::MatrixXd>(c.data(), b.M1(), b.M2());
    auto bx_cache = std::make_shared<std::pair<std::vector<double>, Eigen::MatrixXd>>();
    auto lock = std::make_shared<std::mutex>();
    f.column = [cm, b, bx_cache, lock](const std::vector<double>& xs, double t, Eigen::VectorXd& out) {
        Eigen::VectorXd bt(b.M2());
        for (int m2 = 0; m2 < b.M2(); ++m2) bt[m2] = b.time().eval(m2, t);
        const Eigen::VectorXd w = cm * bt;
        std::lock_guard<std::mutex> guard(*lock);
        if (bx_cache->first != xs) *bx_cache = {xs, b.space().collocation(xs)};
        out = bx_cache->second * w;
    };
    return f;
}

CoefficientField IdentifiedModel::coefficient_field(const std::string& label) const {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end())
        throw std::invalid_argument("feature '" + label + "' is not in the identified support");
    return coefficient_field(support[static_cast<std::size_t>(it - labels.begin())]);
}

IdentifiedModel reconstruct(const FeatureSystem& sys, const GroupSparseSolution& sol, const BasisSet& basis,
                            const std::vector<std::string>& dictionary_labels, ReconstructionMode mode) {
    if (basis.M() != sys.M)
        throw std::invalid_argument("reconstruct: basis size differs from the feature system");
    if (static_cast<int>(dictionary_labels.size()) != sys.groups)
        throw std::invalid_argument("reconstruct: one label per dictionary group required");
    const int M = sys.M;
    const Eigen::Index width = static_cast<Eigen::Index>(sol.support.size()) * M;

    IdentifiedModel model{sol.support, {}, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.groups) * M),
                          sys.groups, basis, false};
    for (int g : sol.support) model.labels.push_back(dictionary_labels[static_cast<std::size_t>(g)]);

    Eigen::VectorXd local(width);
    if (mode == ReconstructionMode::LeastSquares) {
        Eigen::MatrixXd AT(sys.rows(), width);
        Eigen::VectorXd norms(width);
        for (std::size_t i = 0; i < sol.support.size(); ++i) {
            const Eigen::Index src = static_cast<Eigen::Index>(sol.support[i]) * M;
            AT.middleCols(static_cast<Eigen::Index>(i) * M, M) = sys.A.middleCols(src, M);
            norms.segment(static_cast<Eigen::Index>(i) * M, M) =
                sys.normalized ? Eigen::VectorXd(sys.col_norms.segment(src, M)) : Eigen::VectorXd::Ones(M);
        }
        AT *= norms.asDiagonal();
        const LstsqResult r = lstsq(AT, sys.raw_y());
        local = r.x;
        model.rank_deficient = r.rank_deficient;
    } else {
        if (sol.coeffs.size() != width)
            throw std::invalid_argument("reconstruct: solution coefficients do not match its support");
        for (std::size_t i = 0; i < sol.support.size(); ++i) {
            const Eigen::Index src = static_cast<Eigen::Index>(sol.support[i]) * M;
            for (int m = 0; m < M; ++m) {
                const Eigen::Index j = static_cast<Eigen::Index>(i) * M + m;
                local[j] = sys.normalized ? sol.coeffs[j] / sys.col_norms[src + m] * sys.y_norm : sol.coeffs[j];
            }
        }
    }
    for (std::size_t i = 0; i < sol.support.size(); ++i)
        model.coeffs.segment(static_cast<Eigen::Index>(sol.support[i]) * M, M) =
            local.segment(static_cast<Eigen::Index>(i) * M, M);
    return model;
}

}  // namespace gpident
