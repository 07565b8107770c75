#include "gpident/gpsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace gpident {

std::string to_string(StopReason reason) {
    switch (reason) {
    case StopReason::ResidualIncrease: return "residual_increase";
    case StopReason::MaxIter: return "max_iter";
    case StopReason::ExactFit: return "exact_fit";
    case StopReason::SupportUnchanged: return "support_unchanged";
    }
    return "unknown";
}

Eigen::VectorXd GroupSparseSolution::full_coeffs(int groups, int M) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(groups) * M);
    for (std::size_t i = 0; i < support.size(); ++i)
        out.segment(static_cast<Eigen::Index>(support[i]) * M, M) =
            coeffs.segment(static_cast<Eigen::Index>(i) * M, M);
    return out;
}

Eigen::VectorXd residual(const Eigen::VectorXd& y, const Eigen::MatrixXd& A_T) {
    return lstsq_residual(A_T, y);
}

double projection_score(const Eigen::VectorXd& y_r, const Eigen::MatrixXd& F_g) {
    const double ny = y_r.norm();
    if (!(ny > 0.0))
        throw std::invalid_argument("projection_score: zero residual");
    const Eigen::VectorXd proj = y_r - lstsq_residual(F_g, y_r);
    const double np = proj.norm();
    if (np <= 1e-14 * ny) return 0.0;
    return std::abs(proj.dot(y_r)) / (np * ny);
}

double block_correlation(const Eigen::VectorXd& y_r, const Eigen::MatrixXd& F_g) {
    return (F_g.transpose() * y_r).norm();
}

namespace {

enum class Variant { Gpsp, Bsp };

/// Indices of the `count` largest scores among `candidates`, ties to the
/// lower index.
std::vector<int> top_groups(const std::vector<double>& score, std::vector<int> candidates, int count) {
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
    });
    if (static_cast<int>(candidates.size()) > count) candidates.resize(count);
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

struct Fit {
    std::vector<int> support;
    Eigen::VectorXd x;
    Eigen::VectorXd v;  // z - R_T x
    double residual = 0.0;
};

class Engine {
public:
    Engine(const ReducedSystem& rs, const SolverOptions& opts, Variant variant)
        : opts_(opts), variant_(variant) {
        if (rs.gram.rows() != rs.R.cols() || static_cast<int>(rs.bases.size()) != rs.groups) {
            own_ = rs;
            own_.prepare();
            rs_ = &own_;
        } else {
            rs_ = &rs;
        }
    }

    Fit fit(const std::vector<int>& support) const {
        Fit f;
        f.support = support;
        const Eigen::MatrixXd RT = rs_->columns(support);
        if (!normal_solve(support, f.x)) f.x = lstsq(RT, rs_->z, opts_.rcond).x;
        f.v = rs_->z - RT * f.x;
        f.residual = std::sqrt(f.v.squaredNorm() + rs_->tail_sq);
        return f;
    }

    /// Expand score of every group against the residual whose reduced part is v.
    std::vector<double> expand_scores(const Eigen::VectorXd& v) const {
        std::vector<double> s(static_cast<std::size_t>(rs_->groups), 0.0);
        const double total = std::sqrt(v.squaredNorm() + rs_->tail_sq);
        for (int g = 0; g < rs_->groups; ++g) {
            if (variant_ == Variant::Gpsp)
                s[g] = total > 0.0 ? (rs_->bases[g].transpose() * v).norm() / total : 0.0;
            else
                s[g] = (rs_->group_block(g).transpose() * v).norm();
        }
        return s;
    }

    /// Shrink score of each group in the support of f.
    std::vector<double> shrink_scores(const Fit& f) const {
        std::vector<double> s(static_cast<std::size_t>(rs_->groups), 0.0);
        for (std::size_t i = 0; i < f.support.size(); ++i) {
            const auto xg = f.x.segment(static_cast<Eigen::Index>(i) * rs_->M, rs_->M);
            const int g = f.support[i];
            s[g] = variant_ == Variant::Gpsp ? (rs_->group_block(g) * xg).norm() : xg.norm();
        }
        return s;
    }

private:
    // Cholesky on the support block of R^T R; declines when the block is too
    // ill-conditioned for the squared condition number to be harmless.
    bool normal_solve(const std::vector<int>& support, Eigen::VectorXd& x) const {
        const Eigen::Index M = rs_->M;
        const Eigen::Index c = static_cast<Eigen::Index>(support.size()) * M;
        Eigen::MatrixXd G(c, c);
        Eigen::VectorXd b(c);
        for (std::size_t i = 0; i < support.size(); ++i) {
            b.segment(static_cast<Eigen::Index>(i) * M, M) = rs_->rtz.segment(support[i] * M, M);
            for (std::size_t j = 0; j < support.size(); ++j)
                G.block(static_cast<Eigen::Index>(i) * M, static_cast<Eigen::Index>(j) * M, M, M) =
                    rs_->gram.block(support[i] * M, support[j] * M, M, M);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(G);
        if (llt.info() != Eigen::Success) return false;
        if (!(triangular_condition_estimate(Eigen::MatrixXd(llt.matrixU())) < kNormalCondLimit)) return false;
        x = llt.solve(b);
        return x.allFinite();
    }

    static constexpr double kNormalCondLimit = 1e5;

    const ReducedSystem* rs_ = nullptr;
    const SolverOptions& opts_;
    Variant variant_;
    ReducedSystem own_;
};

void check_inputs(const ReducedSystem& rs, int k) {
    if (k < 1 || k > rs.groups)
        throw std::invalid_argument("sparsity level k = " + std::to_string(k) + " outside [1, " +
                                    std::to_string(rs.groups) + "]");
    if (!(rs.y_sq > 0.0))
        throw std::invalid_argument("response vector is identically zero");
}

GroupSparseSolution finish(const Fit& f, int iterations, StopReason reason, std::vector<TraceEntry> trace) {
    GroupSparseSolution sol;
    sol.support = f.support;
    sol.coeffs = f.x;
    sol.residual_norm = f.residual;
    sol.iterations = iterations;
    sol.converged_reason = reason;
    sol.trace = std::move(trace);
    return sol;
}

GroupSparseSolution pursue(const ReducedSystem& rs, int k, const SolverOptions& opts, Variant variant) {
    check_inputs(rs, k);
    if (opts.iter_max < 0)
        throw std::invalid_argument("iter_max must be non-negative");
    const Engine eng(rs, opts, variant);
    const double y_norm = std::sqrt(rs.y_sq);
    const Eigen::VectorXd& z = rs.z;

    std::vector<int> all(static_cast<std::size_t>(rs.groups));
    std::iota(all.begin(), all.end(), 0);
    const std::vector<double> init_scores = eng.expand_scores(z);

    Fit cur = eng.fit(top_groups(init_scores, all, k));
    std::vector<TraceEntry> trace{{0, cur.support, cur.residual, true}};

    for (int it = 1; it <= opts.iter_max; ++it) {
        if (cur.residual <= 1e-12 * y_norm)
            return finish(cur, it - 1, StopReason::ExactFit, std::move(trace));

        std::vector<int> rest;
        for (int g = 0; g < rs.groups; ++g)
            if (!std::binary_search(cur.support.begin(), cur.support.end(), g)) rest.push_back(g);
        const std::vector<double> scores = opts.literal_expand ? init_scores : eng.expand_scores(cur.v);
        std::vector<int> merged = top_groups(scores, rest, k);
        merged.insert(merged.end(), cur.support.begin(), cur.support.end());
        std::sort(merged.begin(), merged.end());

        const Fit wide = eng.fit(merged);
        const std::vector<int> next_support = top_groups(eng.shrink_scores(wide), merged, k);
        if (next_support == cur.support) {
            trace.push_back({it, cur.support, cur.residual, true});
            return finish(cur, it, StopReason::SupportUnchanged, std::move(trace));
        }
        Fit next = eng.fit(next_support);
        if (next.residual > cur.residual) {
            trace.push_back({it, next.support, next.residual, false});
            return finish(cur, it, StopReason::ResidualIncrease, std::move(trace));
        }
        trace.push_back({it, next.support, next.residual, true});
        cur = std::move(next);
    }
    if (cur.residual <= 1e-12 * y_norm)
        return finish(cur, opts.iter_max, StopReason::ExactFit, std::move(trace));
    return finish(cur, opts.iter_max, StopReason::MaxIter, std::move(trace));
}

ReducedSystem reduce(const FeatureSystem& sys, CompressionMethod method) {
    return compress(sys.A, sys.y, sys.groups, sys.M, method);
}

}  // namespace

GroupSparseSolution gpsp_solve(const ReducedSystem& sys, int k, const SolverOptions& opts) {
    return pursue(sys, k, opts, Variant::Gpsp);
}

GroupSparseSolution gpsp_solve(const FeatureSystem& sys, int k, const SolverOptions& opts) {
    return gpsp_solve(reduce(sys, opts.compression), k, opts);
}

GroupSparseSolution bsp_solve(const ReducedSystem& sys, int k, const SolverOptions& opts) {
    return pursue(sys, k, opts, Variant::Bsp);
}

GroupSparseSolution bsp_solve(const FeatureSystem& sys, int k, const SolverOptions& opts) {
    return bsp_solve(reduce(sys, opts.compression), k, opts);
}

GroupSparseSolution exhaustive_oracle(const ReducedSystem& sys, int k, double rcond) {
    check_inputs(sys, k);
    double count = 1.0;
    for (int i = 0; i < k; ++i) count = count * (sys.groups - i) / (i + 1);
    if (count > 1e5 + 0.5)
        throw std::invalid_argument("exhaustive_oracle: C(" + std::to_string(sys.groups) + ", " +
                                    std::to_string(k) + ") exceeds the 1e5 subset budget");
    SolverOptions opts;
    opts.rcond = rcond;
    const Engine eng(sys, opts, Variant::Bsp);

    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    Fit best;
    bool have = false;
    int visited = 0;
    while (true) {
        Fit f = eng.fit(idx);
        ++visited;
        if (!have || f.residual < best.residual) {
            best = std::move(f);
            have = true;
        }
        int i = k - 1;
        while (i >= 0 && idx[i] == sys.groups - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return finish(best, visited, StopReason::MaxIter, {{0, best.support, best.residual, true}});
}

GroupSparseSolution exhaustive_oracle(const FeatureSystem& sys, int k, double rcond) {
    return exhaustive_oracle(reduce(sys, CompressionMethod::Householder), k, rcond);
}

void write_trace(std::ostream& os, const GroupSparseSolution& sol) {
    for (const auto& e : sol.trace) {
        os << "iter=" << e.iteration << " support=";
        for (std::size_t i = 0; i < e.support.size(); ++i) os << (i ? "," : "") << e.support[i];
        os << " residual=" << e.residual_norm << " accepted=" << (e.accepted ? 1 : 0) << '\n';
    }
}

}  // namespace gpident
