#include "gpident/pipeline.hpp"

#include "gpident/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gpident {

using nlohmann::json;

namespace {

std::string solver_name(SolverKind s) { return s == SolverKind::Gpsp ? "gpsp" : "bsp"; }

SolverKind solver_from(const std::string& s) {
    if (s == "gpsp") return SolverKind::Gpsp;
    if (s == "bsp") return SolverKind::Bsp;
    throw std::invalid_argument("unknown solver '" + s + "' (gpsp, bsp)");
}

std::string compression_name(CompressionMethod m) {
    switch (m) {
    case CompressionMethod::Auto: return "auto";
    case CompressionMethod::Householder: return "householder";
    case CompressionMethod::Gram: return "gram";
    }
    return "auto";
}

CompressionMethod compression_from(const std::string& s) {
    if (s == "auto") return CompressionMethod::Auto;
    if (s == "householder") return CompressionMethod::Householder;
    if (s == "gram") return CompressionMethod::Gram;
    throw std::invalid_argument("unknown compression '" + s + "' (auto, householder, gram)");
}

/// Copies j[key] into out when present and records the key as known.
template <class T>
void take(const json& j, const char* key, T& out, std::vector<std::string>& seen) {
    if (!j.contains(key)) return;
    out = j.at(key).get<T>();
    seen.emplace_back(key);
}

void reject_unknown(const json& j, const std::vector<std::string>& seen, const std::string& where) {
    for (const auto& [k, v] : j.items()) {
        if (std::find(seen.begin(), seen.end(), k) == seen.end())
            throw std::invalid_argument("config: unknown key '" + where + k + "'");
    }
}

const json& section(const json& j, const char* key, std::vector<std::string>& seen) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    seen.emplace_back(key);
    const json& s = j.at(key);
    if (!s.is_object())
        throw std::invalid_argument(std::string("config: '") + key + "' must be an object");
    return s;
}

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

}  // namespace

json RunConfig::to_json() const {
    return json{
        {"problem", problem},
        {"trajectory_file", trajectory_file},
        {"noise", {{"levels", noise_levels}, {"seeds", seeds}}},
        {"sdd", {{"window", sdd_window}, {"degree", sdd_degree}, {"smooth_clean", sdd_on_clean}}},
        {"dictionary", {{"max_deriv", max_deriv}, {"max_product", max_product}}},
        {"basis", {{"space", basis_space}, {"time", basis_time}, {"order", spline_order}}},
        {"selection", {{"K_max", K_max}, {"L", L}, {"rho", rho}}},
        {"solver",
         {{"name", solver_name(solver)},
          {"iter_max", iter_max},
          {"literal_expand", literal_expand},
          {"rcond", rcond},
          {"compression", compression_name(compression)}}},
        {"reconstruction", gpident::to_string(reconstruction)},
        {"simulation", {{"substeps", substeps}, {"safety", safety}, {"dealias", dealias}}},
        {"evaluation", {{"trajectory_error", trajectory_error}}},
        {"output", {{"dir", output_dir}, {"trace", write_trace}}},
        {"threads", threads},
    };
}

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object())
        throw std::invalid_argument("config: top level must be an object");
    RunConfig c;
    std::vector<std::string> top;
    take(j, "problem", c.problem, top);
    take(j, "trajectory_file", c.trajectory_file, top);
    take(j, "threads", c.threads, top);

    std::vector<std::string> seen;
    const json& noise = section(j, "noise", top);
    take(noise, "levels", c.noise_levels, seen);
    take(noise, "seeds", c.seeds, seen);
    if (noise.contains("seed_count")) {
        std::uint64_t start = noise.value("seed_start", std::uint64_t{1});
        const int count = noise.at("seed_count").get<int>();
        if (count < 1)
            throw std::invalid_argument("config: noise.seed_count must be positive");
        c.seeds.clear();
        for (int i = 0; i < count; ++i) c.seeds.push_back(start + static_cast<std::uint64_t>(i));
        seen.emplace_back("seed_count");
        seen.emplace_back("seed_start");
    }
    reject_unknown(noise, seen, "noise.");

    seen.clear();
    const json& sdd = section(j, "sdd", top);
    take(sdd, "window", c.sdd_window, seen);
    take(sdd, "degree", c.sdd_degree, seen);
    take(sdd, "smooth_clean", c.sdd_on_clean, seen);
    reject_unknown(sdd, seen, "sdd.");

    seen.clear();
    const json& dict = section(j, "dictionary", top);
    take(dict, "max_deriv", c.max_deriv, seen);
    take(dict, "max_product", c.max_product, seen);
    reject_unknown(dict, seen, "dictionary.");

    seen.clear();
    const json& basis = section(j, "basis", top);
    take(basis, "space", c.basis_space, seen);
    take(basis, "time", c.basis_time, seen);
    take(basis, "order", c.spline_order, seen);
    reject_unknown(basis, seen, "basis.");

    seen.clear();
    const json& sel = section(j, "selection", top);
    take(sel, "K_max", c.K_max, seen);
    take(sel, "L", c.L, seen);
    take(sel, "rho", c.rho, seen);
    reject_unknown(sel, seen, "selection.");

    seen.clear();
    const json& solver = section(j, "solver", top);
    std::string name = solver_name(c.solver);
    std::string comp = compression_name(c.compression);
    take(solver, "name", name, seen);
    take(solver, "iter_max", c.iter_max, seen);
    take(solver, "literal_expand", c.literal_expand, seen);
    take(solver, "rcond", c.rcond, seen);
    take(solver, "compression", comp, seen);
    reject_unknown(solver, seen, "solver.");
    c.solver = solver_from(name);
    c.compression = compression_from(comp);

    std::string recon = gpident::to_string(c.reconstruction);
    take(j, "reconstruction", recon, top);
    c.reconstruction = reconstruction_mode_from_string(recon);

    seen.clear();
    const json& sim = section(j, "simulation", top);
    take(sim, "substeps", c.substeps, seen);
    take(sim, "safety", c.safety, seen);
    take(sim, "dealias", c.dealias, seen);
    reject_unknown(sim, seen, "simulation.");

    seen.clear();
    const json& ev = section(j, "evaluation", top);
    take(ev, "trajectory_error", c.trajectory_error, seen);
    reject_unknown(ev, seen, "evaluation.");

    seen.clear();
    const json& out = section(j, "output", top);
    take(out, "dir", c.output_dir, seen);
    take(out, "trace", c.write_trace, seen);
    reject_unknown(out, seen, "output.");

    reject_unknown(j, top, "");

    if (c.noise_levels.empty()) throw std::invalid_argument("config: noise.levels is empty");
    for (double p : c.noise_levels)
        if (p < 0.0) throw std::invalid_argument("config: negative noise level");
    if (c.seeds.empty()) throw std::invalid_argument("config: noise.seeds is empty");
    if (c.sdd_window != 0 && (c.sdd_window < 3 || c.sdd_window % 2 == 0))
        throw std::invalid_argument("config: sdd.window must be 0 or an odd number >= 3");
    if (c.basis_space < 1 || c.basis_time < 1)
        throw std::invalid_argument("config: basis counts must be positive");
    if (c.K_max < 2 || c.L < 1 || c.L >= c.K_max)
        throw std::invalid_argument("config: need 1 <= L < K_max");
    if (c.threads < 0) throw std::invalid_argument("config: threads must be >= 0");
    if (!(c.rcond > 0.0 && c.rcond < 1.0)) throw std::invalid_argument("config: solver.rcond must lie in (0, 1)");
    if (c.iter_max < 0) throw std::invalid_argument("config: solver.iter_max must be >= 0");
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw std::runtime_error("config '" + path.string() + "': " + e.what());
    }
    return from_json(j);
}

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    json j = to_json();
    json* node = &j;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object())
            throw std::invalid_argument("override: unknown section '" + parts[i] + "' in '" + key + "'");
        node = &(*node)[parts[i]];
    }
    if (!node->contains(parts.back()) && parts.back() != "seed_count" && parts.back() != "seed_start")
        throw std::invalid_argument("override: unknown key '" + key + "'");
    (*node)[parts.back()] = value;
    *this = from_json(j);
}

std::string RunConfig::fingerprint() const {
    json j = to_json();
    j.erase("threads");
    j.erase("output");
    const std::string text = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::optional<SavGolFilter> filter_for(const RunConfig& cfg, double noise_percent) {
    if (cfg.sdd_window == 0) return std::nullopt;
    if (noise_percent <= 0.0 && !cfg.sdd_on_clean) return std::nullopt;
    return savgol_weights(cfg.sdd_window, cfg.sdd_degree);
}

BasisSet make_basis(const RunConfig& cfg, const Grid& grid) {
    return BasisSet(BSplineBasis1D::periodic_with_count(grid.x_min, grid.x_max, cfg.basis_space, cfg.spline_order),
                    BSplineBasis1D::neumann_with_count(grid.t_min, grid.t_max, cfg.basis_time, cfg.spline_order));
}

IdentifyResult identify(const Trajectory& traj, const RunConfig& cfg, const std::filesystem::path& dump_system) {
    const auto start = std::chrono::steady_clock::now();
    IdentifyResult res;
    const auto filter = filter_for(cfg, traj.is_noisy ? traj.noise_percent : 0.0);
    res.time_trim = interior_time_trim(filter);

    const auto specs = enumerate_dictionary(cfg.max_deriv, cfg.max_product);
    for (const auto& s : specs) res.dictionary_labels.push_back(s.label());
    if (cfg.K_max > static_cast<int>(specs.size()))
        throw std::invalid_argument("K_max exceeds the dictionary size");
    const BasisSet basis = make_basis(cfg, traj.grid);

    FeatureSystem sys;
    ReducedSystem rs;
    {
        const FeatureFields fields = eval_features(traj, specs, filter);
        sys = assemble(fields, basis, res.dictionary_labels);
        CompressionMethod method = cfg.compression;
        if (method == CompressionMethod::Auto) method = choose_compression(sys.rows(), sys.cols());
        if (method == CompressionMethod::Gram && tensor_gram_cost(fields, basis) < direct_gram_cost(fields, basis)) {
            const Eigen::VectorXd inv = sys.col_norms.cwiseInverse();
            const Eigen::MatrixXd gram = inv.asDiagonal() * tensor_gram(fields, basis) * inv.asDiagonal();
            rs = compress_gram(gram, sys.A.transpose() * sys.y, sys.y.squaredNorm(), sys.groups, sys.M);
        } else {
            rs = compress(sys.A, sys.y, sys.groups, sys.M, method);
        }
    }
    if (!dump_system.empty()) write_feature_system(sys, res.dictionary_labels, dump_system);

    SolverOptions opts;
    opts.iter_max = cfg.iter_max;
    opts.literal_expand = cfg.literal_expand;
    opts.rcond = cfg.rcond;
    opts.compression = cfg.compression;
    res.path = candidate_path(rs, cfg.K_max, cfg.solver, opts, cfg.threads);
    rr_scores(res.path, cfg.L);
    if (const auto k = select_k(res.path, cfg.rho)) {
        res.model = reconstruct(sys, res.path.at(*k), basis, res.dictionary_labels, cfg.reconstruction);
        res.status = "ok";
    } else {
        res.status = "no_score_below_rho";
    }
    res.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

EvaluationReport evaluate(const IdentifyResult& result, const PDEProblem& truth, const Trajectory& clean,
                          const RunConfig& cfg) {
    EvaluationReport rep;
    rep.config_fingerprint = cfg.fingerprint();
    rep.runtime_seconds = result.runtime_seconds;
    const Grid& g = clean.grid;
    const std::set<std::string> truth_set(truth.true_support.begin(), truth.true_support.end());
    std::set<std::string> found;
    if (result.model) found.insert(result.model->labels.begin(), result.model->labels.end());
    rep.jaccard = result.model ? jaccard(found, truth_set) : 0.0;

    const Region interior = Region::interior(g, result.time_trim);
    for (const auto& label : truth.true_support) {
        const CoefficientField& c = truth.true_coeff_fields.at(label);
        const CoefficientField est = result.model && found.count(label) ? result.model->coefficient_field(label)
                                                                        : CoefficientField::constant(0.0);
        rep.per_feature_errors[label] = rel_l1_error(est, c, g, interior);
        rep.per_feature_errors_full[label] = rel_l1_error(est, c, g);
    }

    if (!cfg.trajectory_error) {
        rep.trajectory_status = "disabled";
    } else if (!result.model) {
        rep.trajectory_status = "no model";
    } else {
        try {
            SolveOptions so;
            so.substeps = cfg.substeps;
            so.safety = cfg.safety;
            so.dealias = cfg.dealias;
            rep.trajectory_error = simulate_identified(*result.model, truth, clean, so).error_percent;
        } catch (const std::exception& e) {
            rep.trajectory_status = e.what();
        }
    }
    return rep;
}

void write_results_header(std::ostream& os) { os << kResultsHeader << '\n'; }

void write_results_row(std::ostream& os, const RunRecord& rec, const RunConfig& cfg) {
    const IdentifyResult& r = rec.result;
    std::vector<std::string> errs, errs_full;
    std::string jac, traj;
    if (rec.report) {
        for (const auto& [k, v] : rec.report->per_feature_errors) errs.push_back(k + "=" + fmt(v));
        for (const auto& [k, v] : rec.report->per_feature_errors_full) errs_full.push_back(k + "=" + fmt(v));
        jac = fmt(rec.report->jaccard);
        if (rec.report->trajectory_error) traj = fmt(*rec.report->trajectory_error);
    }
    os << cfg.fingerprint() << ',' << rec.problem << ',' << fmt(rec.noise_percent) << ',' << rec.seed << ','
       << solver_name(cfg.solver) << ',' << r.status << ',' << (r.path.k_star ? std::to_string(*r.path.k_star) : "")
       << ',' << (r.model ? join(r.model->labels, "|") : "") << ',' << jac << ',' << join(errs, ";") << ','
       << join(errs_full, ";") << ',' << traj << '\n';
}

json run_json(const RunRecord& rec, const RunConfig& cfg) {
    const IdentifyResult& r = rec.result;
    json path = json::array();
    for (int k = 1; k <= r.path.K_max; ++k) {
        const auto& sol = r.path.at(k);
        std::vector<std::string> labels;
        for (int g : sol.support) labels.push_back(r.dictionary_labels[static_cast<std::size_t>(g)]);
        json e{{"k", k},
               {"R_k", r.path.R[k - 1]},
               {"support", labels},
               {"iterations", sol.iterations},
               {"stop", to_string(sol.converged_reason)}};
        if (k - 1 < r.path.s.size()) e["s_k"] = r.path.s[k - 1];
        path.push_back(e);
    }
    json j{{"fingerprint", cfg.fingerprint()},
           {"config", cfg.to_json()},
           {"problem", rec.problem},
           {"noise_percent", rec.noise_percent},
           {"seed", rec.seed},
           {"status", r.status},
           {"path", path},
           {"timing", {{"identify_seconds", r.runtime_seconds}}}};
    j["k_star"] = r.path.k_star ? json(*r.path.k_star) : json(nullptr);
    if (r.model) {
        json m = json::object();
        const int M = r.model->basis.M();
        for (std::size_t i = 0; i < r.model->support.size(); ++i) {
            const int g = r.model->support[i];
            std::vector<double> c(r.model->coeffs.data() + static_cast<std::ptrdiff_t>(g) * M,
                                  r.model->coeffs.data() + static_cast<std::ptrdiff_t>(g + 1) * M);
            m[r.model->labels[i]] = c;
        }
        j["model"] = {{"support", r.model->labels},
                      {"coefficients", m},
                      {"M1", r.model->basis.M1()},
                      {"M2", r.model->basis.M2()},
                      {"rank_deficient", r.model->rank_deficient}};
    }
    if (rec.report) {
        json ev{{"jaccard", rec.report->jaccard},
                {"coef_errors_interior", rec.report->per_feature_errors},
                {"coef_errors_full", rec.report->per_feature_errors_full}};
        ev["trajectory_error"] = rec.report->trajectory_error ? json(*rec.report->trajectory_error) : json(nullptr);
        if (!rec.report->trajectory_status.empty()) ev["trajectory_status"] = rec.report->trajectory_status;
        j["evaluation"] = ev;
    }
    return j;
}

void write_coefficients(std::ostream& os, const IdentifiedModel& model, const Grid& grid) {
    os << "feature,x,t,value\n";
    char buf[128];
    for (std::size_t i = 0; i < model.support.size(); ++i) {
        const CoefficientField f = model.coefficient_field(model.support[i]);
        const Eigen::MatrixXd v = sample(f, grid);
        for (int n = 0; n < grid.N; ++n) {
            for (int j = 0; j < grid.I; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", grid.x(j), grid.t(n), v(j, n));
                os << model.labels[i] << ',' << buf << '\n';
            }
        }
    }
}

Trajectory generate_clean(const RunConfig& cfg) {
    const PDEProblem p = make_preset(cfg.problem);
    SolveOptions so;
    so.substeps = cfg.substeps;
    so.safety = cfg.safety;
    so.dealias = cfg.dealias;
    return solve(p, so);
}

std::vector<RunRecord> run_sweep(const RunConfig& cfg, std::ostream* log) {
    const PDEProblem problem = make_preset(cfg.problem);
    const Trajectory clean = generate_clean(cfg);

    struct Task {
        double level;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (double level : cfg.noise_levels) {
        if (level == 0.0) {
            tasks.push_back({0.0, 0});  // noise-free data does not depend on the seed
            continue;
        }
        for (std::uint64_t s : cfg.seeds) tasks.push_back({level, s});
    }

    RunConfig inner = cfg;
    inner.threads = 1;
    std::vector<RunRecord> records(tasks.size());
    std::mutex log_mutex;
    parallel_for(static_cast<int>(tasks.size()), cfg.threads, [&](int i) {
        RunRecord& rec = records[static_cast<std::size_t>(i)];
        rec.problem = cfg.problem;
        rec.noise_percent = tasks[i].level;
        rec.seed = tasks[i].seed;
        try {
            const Trajectory data = tasks[i].level > 0.0 ? add_noise(clean, tasks[i].level, tasks[i].seed) : clean;
            rec.result = identify(data, inner);
            rec.report = evaluate(rec.result, problem, clean, inner);
        } catch (const std::exception& e) {
            rec.result.status = std::string("error: ") + e.what();
            for (char& ch : rec.result.status)
                if (ch == ',' || ch == '\n') ch = ';';
        }
        if (log) {
            std::lock_guard<std::mutex> lock(log_mutex);
            *log << "noise=" << fmt(rec.noise_percent) << " seed=" << rec.seed << " status=" << rec.result.status;
            if (rec.result.model) *log << " support=" << join(rec.result.model->labels, "|");
            if (rec.report) *log << " jaccard=" << fmt(rec.report->jaccard);
            *log << '\n' << std::flush;
        }
    });
    return records;
}

void write_sweep_summary(std::ostream& os, const std::vector<RunRecord>& records, const RunConfig& cfg,
                         const std::vector<std::string>& truth_labels) {
    os << "fingerprint,noise_percent,runs,failures,exact_support,jaccard_mean,jaccard_std";
    for (const auto& l : truth_labels) os << ',' << l << "_err_mean," << l << "_err_std";
    os << '\n';
    std::map<double, std::vector<const RunRecord*>> by_level;
    for (const auto& r : records) by_level[r.noise_percent].push_back(&r);
    auto mean_std = [](const std::vector<double>& v) {
        if (v.empty()) return std::pair<double, double>{NAN, NAN};
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::pair<double, double>{m, std::sqrt(s / static_cast<double>(v.size()))};
    };
    for (const auto& [level, runs] : by_level) {
        int failures = 0, exact = 0;
        std::vector<double> jac;
        std::map<std::string, std::vector<double>> errs;
        for (const RunRecord* r : runs) {
            if (!r->report) {
                ++failures;
                jac.push_back(0.0);
                continue;
            }
            jac.push_back(r->report->jaccard);
            if (r->report->jaccard == 1.0) ++exact;
            for (const auto& [k, v] : r->report->per_feature_errors) errs[k].push_back(v);
        }
        const auto [jm, js] = mean_std(jac);
        os << cfg.fingerprint() << ',' << fmt(level) << ',' << runs.size() << ',' << failures << ',' << exact << ','
           << fmt(jm) << ',' << fmt(js);
        for (const auto& l : truth_labels) {
            const auto [m, s] = mean_std(errs[l]);
            os << ',' << fmt(m) << ',' << fmt(s);
        }
        os << '\n';
    }
}

}  // namespace gpident
