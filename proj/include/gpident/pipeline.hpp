#pragma once

#include "gpident/metrics.hpp"
#include "gpident/selection.hpp"
#include "gpident/simulate.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gpident {

/// Every knob of a run. JSON keys mirror the field names (see README).
struct RunConfig {
    std::string problem;          // preset name; may be empty when a trajectory file is given
    std::string trajectory_file;  // optional observed data
    std::vector<double> noise_levels{0.0};
    std::vector<std::uint64_t> seeds{1};

    int sdd_window = 0;  // 0 = plain finite differences
    int sdd_degree = 2;
    bool sdd_on_clean = false;  // also smooth noise-free data

    int max_deriv = 4;
    int max_product = 3;

    int basis_space = 1;  // M_1; 1 = constant in space
    int basis_time = 1;   // M_2; 1 = constant in time
    int spline_order = 3;

    int K_max = 15;
    int L = 5;
    double rho = 0.015;
    int iter_max = 30;
    SolverKind solver = SolverKind::Gpsp;
    bool literal_expand = false;
    double rcond = 1e-10;
    CompressionMethod compression = CompressionMethod::Auto;
    ReconstructionMode reconstruction = ReconstructionMode::LeastSquares;

    int substeps = 0;
    double safety = 0.25;
    bool dealias = true;

    bool trajectory_error = true;
    bool write_trace = false;
    int threads = 1;
    std::string output_dir = "out";

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);

    /// Applies "dotted.key=value" overrides; the value is parsed as JSON when possible.
    void apply_override(const std::string& assignment);

    /// 16 hex digits of FNV-1a over the canonical JSON form.
    std::string fingerprint() const;
};

/// Filter for a trajectory with the given noise level, or none.
std::optional<SavGolFilter> filter_for(const RunConfig& cfg, double noise_percent);

/// Tensor basis on the grid for the configured counts.
BasisSet make_basis(const RunConfig& cfg, const Grid& grid);

struct IdentifyResult {
    std::vector<std::string> dictionary_labels;
    CandidatePath path;
    std::optional<IdentifiedModel> model;  // empty when no s_k < rho
    std::string status;                    // "ok" or a failure description
    int time_trim = 0;
    double runtime_seconds = 0.0;
};

/// Features, candidate path, RR selection and reconstruction for one trajectory.
IdentifyResult identify(const Trajectory& traj, const RunConfig& cfg,
                        const std::filesystem::path& dump_system = {});

/// Errors of an identification against a known problem.
EvaluationReport evaluate(const IdentifyResult& result, const PDEProblem& truth, const Trajectory& clean,
                          const RunConfig& cfg);

/// One results-CSV row.
struct RunRecord {
    std::string problem;
    double noise_percent = 0.0;
    std::uint64_t seed = 0;
    IdentifyResult result;
    std::optional<EvaluationReport> report;
};

inline constexpr const char* kResultsHeader =
    "fingerprint,problem,noise_percent,seed,solver,status,k_star,support,jaccard,coef_errors,coef_errors_full,"
    "trajectory_error";

void write_results_header(std::ostream& os);
void write_results_row(std::ostream& os, const RunRecord& rec, const RunConfig& cfg);

/// Run document: config, fingerprint, path, model and evaluation.
nlohmann::json run_json(const RunRecord& rec, const RunConfig& cfg);

/// Coefficient fields of the identified model sampled on the grid, long format
/// (feature,x,t,value).
void write_coefficients(std::ostream& os, const IdentifiedModel& model, const Grid& grid);

/// Clean trajectory for the configured preset.
Trajectory generate_clean(const RunConfig& cfg);

/// Sweep over noise levels x seeds. Returns records in (level, seed) order.
std::vector<RunRecord> run_sweep(const RunConfig& cfg, std::ostream* log = nullptr);

/// Mean and spread per noise level: noise_percent,runs,failures,jaccard_mean,
/// jaccard_std,exact_support,<label>_err_mean,<label>_err_std,...
void write_sweep_summary(std::ostream& os, const std::vector<RunRecord>& records, const RunConfig& cfg,
                         const std::vector<std::string>& truth_labels);

}  // namespace gpident
