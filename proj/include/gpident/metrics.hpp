#pragma once

#include "gpident/selection.hpp"
#include "gpident/simulate.hpp"
#include "gpident/trajdata.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gpident {

/// Index window of grid points used when comparing fields.
struct Region {
    int i_begin = 0, i_end = 0;  // space, half-open
    int n_begin = 0, n_end = 0;  // time, half-open

    static Region full(const Grid& g) { return {0, g.I, 0, g.N}; }
    /// Drops `trim` time samples at both ends.
    static Region interior(const Grid& g, int trim);
};

/// 100 * sum |estimated - truth| / sum |truth| over the region.
double rel_l1_error(const CoefficientField& estimated, const CoefficientField& truth, const Grid& grid,
                    const std::optional<Region>& region = std::nullopt);

/// Same formula on sampled fields.
double rel_l1_error(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth);

/// |A n B| / |A u B|.
double jaccard(const std::set<std::string>& estimated, const std::set<std::string>& truth);

struct SimulationComparison {
    Trajectory trajectory;
    double error_percent = 0.0;
};

/// Solves u_t = sum_g C_g(x, t) f_g with the identified fields from the
/// reference problem's initial condition and grid, and compares with
/// `reference` (relative L1, percent).
SimulationComparison simulate_identified(const IdentifiedModel& model, const PDEProblem& reference_problem,
                                         const Trajectory& reference, const SolveOptions& opts = {});

struct EvaluationReport {
    std::map<std::string, double> per_feature_errors;       // interior region
    std::map<std::string, double> per_feature_errors_full;  // whole grid
    double jaccard = 0.0;
    std::optional<double> trajectory_error;
    std::string trajectory_status;  // why trajectory_error is missing, if it is
    double runtime_seconds = 0.0;
    std::string config_fingerprint;
};

}  // namespace gpident
