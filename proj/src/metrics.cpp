#include "gpident/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace gpident {

Region Region::interior(const Grid& g, int trim) {
    if (trim < 0 || 2 * trim >= g.N)
        throw std::invalid_argument("interior region: trim leaves no time samples");
    return {0, g.I, trim, g.N - trim};
}

double rel_l1_error(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth) {
    if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols())
        throw std::invalid_argument("rel_l1_error: shape mismatch");
    const double denom = truth.cwiseAbs().sum();
    if (!(denom > 0.0))
        throw std::invalid_argument("rel_l1_error: reference field is identically zero");
    return 100.0 * (estimated - truth).cwiseAbs().sum() / denom;
}

double rel_l1_error(const CoefficientField& estimated, const CoefficientField& truth, const Grid& grid,
                    const std::optional<Region>& region) {
    const Region r = region ? *region : Region::full(grid);
    Eigen::MatrixXd e(r.i_end - r.i_begin, r.n_end - r.n_begin);
    Eigen::MatrixXd c(e.rows(), e.cols());
    for (int n = r.n_begin; n < r.n_end; ++n) {
        for (int i = r.i_begin; i < r.i_end; ++i) {
            e(i - r.i_begin, n - r.n_begin) = estimated(grid.x(i), grid.t(n));
            c(i - r.i_begin, n - r.n_begin) = truth(grid.x(i), grid.t(n));
        }
    }
    return rel_l1_error(e, c);
}

double jaccard(const std::set<std::string>& estimated, const std::set<std::string>& truth) {
    std::size_t common = 0;
    for (const auto& s : estimated) common += truth.count(s);
    const std::size_t uni = estimated.size() + truth.size() - common;
    return uni == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(uni);
}

SimulationComparison simulate_identified(const IdentifiedModel& model, const PDEProblem& reference_problem,
                                         const Trajectory& reference, const SolveOptions& opts) {
    if (!(reference.grid == reference_problem.grid))
        throw std::invalid_argument("simulate_identified: reference trajectory grid differs from the problem");
    std::vector<std::pair<std::string, CoefficientField>> terms;
    for (std::size_t i = 0; i < model.support.size(); ++i)
        terms.emplace_back(model.labels[i], model.coefficient_field(model.support[i]));
    const PDEProblem p = make_problem(PDEKind::Custom, reference_problem.name + "-identified",
                                      reference_problem.grid, reference_problem.initial, terms);
    SimulationComparison out;
    out.trajectory = solve(p, opts);
    out.error_percent = rel_l1_error(out.trajectory.values, reference.values);
    return out;
}

}  // namespace gpident
