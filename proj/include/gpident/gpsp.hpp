#pragma once

#include "gpident/dictionary.hpp"
#include "gpident/lstsq.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace gpident {

enum class StopReason { ResidualIncrease, MaxIter, ExactFit, SupportUnchanged };

std::string to_string(StopReason reason);

struct TraceEntry {
    int iteration = 0;
    std::vector<int> support;
    double residual_norm = 0.0;
    bool accepted = true;
};

/// Support T (ascending group indices), the least-squares coefficients on the
/// columns of T (group blocks in the order of T) and ||A_T c - y||.
struct GroupSparseSolution {
    std::vector<int> support;
    Eigen::VectorXd coeffs;
    double residual_norm = 0.0;
    int iterations = 0;
    StopReason converged_reason = StopReason::MaxIter;
    std::vector<TraceEntry> trace;

    /// Coefficients scattered into a vector of length groups * M.
    Eigen::VectorXd full_coeffs(int groups, int M) const;
};

struct SolverOptions {
    int iter_max = 30;
    /// Score the expand step against y instead of the current residual.
    bool literal_expand = false;
    double rcond = 1e-10;
    CompressionMethod compression = CompressionMethod::Auto;
};

/// y - A_T A_T^+ y by a rank-revealing solve; y itself when A_T has no columns.
Eigen::VectorXd residual(const Eigen::VectorXd& y, const Eigen::MatrixXd& A_T);

/// |proj^T y_r| / (||proj|| ||y_r||) with proj the projection of y_r onto
/// span(F_g); 0 when the projection vanishes.
double projection_score(const Eigen::VectorXd& y_r, const Eigen::MatrixXd& F_g);

/// ||F_g^T y_r||.
double block_correlation(const Eigen::VectorXd& y_r, const Eigen::MatrixXd& F_g);

GroupSparseSolution gpsp_solve(const ReducedSystem& sys, int k, const SolverOptions& opts = {});
GroupSparseSolution gpsp_solve(const FeatureSystem& sys, int k, const SolverOptions& opts = {});

GroupSparseSolution bsp_solve(const ReducedSystem& sys, int k, const SolverOptions& opts = {});
GroupSparseSolution bsp_solve(const FeatureSystem& sys, int k, const SolverOptions& opts = {});

/// Globally best k-group support by enumeration; at most 1e5 subsets.
GroupSparseSolution exhaustive_oracle(const ReducedSystem& sys, int k, double rcond = 1e-10);
GroupSparseSolution exhaustive_oracle(const FeatureSystem& sys, int k, double rcond = 1e-10);

/// One line per trace entry: "iter=<i> support=<g,g,...> residual=<r> accepted=<0|1>".
void write_trace(std::ostream& os, const GroupSparseSolution& sol);

}  // namespace gpident
