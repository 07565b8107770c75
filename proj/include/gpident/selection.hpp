#pragma once

#include "gpident/bspline.hpp"
#include "gpident/dictionary.hpp"
#include "gpident/gpsp.hpp"
#include "gpident/trajdata.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gpident {

enum class SolverKind { Gpsp, Bsp };

/// Solutions for k = 1..K_max with R_k = ||A c(k) - y||^2 on the normalised
/// system, RR scores s_k for k = 1..K_max - L and the selected k*.
struct CandidatePath {
    std::vector<GroupSparseSolution> solutions;  // solutions[k - 1]
    Eigen::VectorXd R;
    Eigen::VectorXd s;
    int K_max = 0;
    int L = 0;
    double rho = 0.0;
    std::optional<int> k_star;

    const GroupSparseSolution& at(int k) const { return solutions.at(static_cast<std::size_t>(k - 1)); }
};

/// Independent solves for every k = 1..K_max, spread over `threads` workers.
CandidatePath candidate_path(const ReducedSystem& sys, int K_max, SolverKind solver = SolverKind::Gpsp,
                             const SolverOptions& opts = {}, int threads = 1);
CandidatePath candidate_path(const FeatureSystem& sys, int K_max, SolverKind solver = SolverKind::Gpsp,
                             const SolverOptions& opts = {}, int threads = 1);

/// s_k = (R_k - R_{k+L}) / (L R_1), k = 1..K_max - L.
Eigen::VectorXd rr_scores(const Eigen::VectorXd& R, int L);
void rr_scores(CandidatePath& path, int L);

/// Smallest k with s_k < rho, or nothing.
std::optional<int> select_k(const Eigen::VectorXd& s, double rho);
std::optional<int> select_k(CandidatePath& path, double rho);

/// CSV with header k,R_k,s_k,selected; s_k is empty where undefined.
void write_score_table(std::ostream& os, const CandidatePath& path);

enum class ReconstructionMode { LeastSquares, Rescale };

std::string to_string(ReconstructionMode mode);
ReconstructionMode reconstruction_mode_from_string(const std::string& name);

/// Identified PDE: coefficients on the raw (un-normalised) feature scale.
struct IdentifiedModel {
    std::vector<int> support;
    std::vector<std::string> labels;  // labels of the support groups
    Eigen::VectorXd coeffs;           // length groups * M
    int groups = 0;
    BasisSet basis;
    bool rank_deficient = false;

    /// Sum_m c_{g,m} B_m(x, t) for support group g.
    CoefficientField coefficient_field(int g) const;

    /// Field of the support group with the given label.
    CoefficientField coefficient_field(const std::string& label) const;
};

/// Coefficients for the support of `sol`. LeastSquares re-solves on the raw
/// columns of that support; Rescale divides each normalised coefficient by its
/// column norm and multiplies by ||y||.
IdentifiedModel reconstruct(const FeatureSystem& sys, const GroupSparseSolution& sol, const BasisSet& basis,
                            const std::vector<std::string>& dictionary_labels,
                            ReconstructionMode mode = ReconstructionMode::LeastSquares);

}  // namespace gpident
