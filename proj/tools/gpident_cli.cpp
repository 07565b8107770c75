#include "gpident/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace gpident;

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.overrides, "Override a config key, e.g. --set sdd.window=15");
    cmd->add_option("-o,--output", c.output_dir, "Output directory (overrides output.dir)");
}

RunConfig load_config(const Common& c) {
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
    for (const auto& o : c.overrides) cfg.apply_override(o);
    if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
    return cfg;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    return out;
}

std::string level_tag(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", p);
    return buf;
}

int cmd_generate(const RunConfig& cfg) {
    if (cfg.problem.empty()) throw std::invalid_argument("generate needs a problem preset");
    fs::create_directories(cfg.output_dir);
    const Trajectory clean = generate_clean(cfg);
    const fs::path clean_path = fs::path(cfg.output_dir) / (cfg.problem + "_clean.csv");
    write_trajectory(clean, clean_path);
    std::cout << clean_path.string() << '\n';
    for (double p : cfg.noise_levels) {
        if (p == 0.0) continue;
        for (std::uint64_t s : cfg.seeds) {
            const fs::path path =
                fs::path(cfg.output_dir) / (cfg.problem + "_p" + level_tag(p) + "_s" + std::to_string(s) + ".csv");
            write_trajectory(add_noise(clean, p, s), path);
            std::cout << path.string() << '\n';
        }
    }
    return 0;
}

int cmd_identify(const RunConfig& cfg, const std::string& trajectory_file, const std::string& dump_path) {
    const std::string file = trajectory_file.empty() ? cfg.trajectory_file : trajectory_file;
    Trajectory data;
    std::optional<Trajectory> clean;
    std::optional<PDEProblem> truth;
    if (!cfg.problem.empty()) truth = make_preset(cfg.problem);

    RunRecord rec;
    rec.problem = cfg.problem.empty() ? fs::path(file).stem().string() : cfg.problem;
    if (!file.empty()) {
        data = read_trajectory(file);
        if (truth && !(truth->grid == data.grid)) truth.reset();
    } else {
        if (!truth) throw std::invalid_argument("identify needs a trajectory file or a problem preset");
        clean = generate_clean(cfg);
        const double p = cfg.noise_levels.front();
        data = p > 0.0 ? add_noise(*clean, p, cfg.seeds.front()) : *clean;
    }
    rec.noise_percent = data.is_noisy ? data.noise_percent : 0.0;
    rec.seed = data.is_noisy ? data.seed : 0;

    rec.result = identify(data, cfg, dump_path);
    if (truth) {
        if (!clean) clean = generate_clean(cfg);
        rec.report = evaluate(rec.result, *truth, *clean, cfg);
    }

    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "results.csv");
        write_results_header(out);
        write_results_row(out, rec, cfg);
    }
    {
        auto out = open_out(dir / "scores.csv");
        write_score_table(out, rec.result.path);
    }
    {
        auto out = open_out(dir / "run.json");
        out << run_json(rec, cfg).dump(2) << '\n';
    }
    if (rec.result.model) {
        auto out = open_out(dir / "coefficients.csv");
        write_coefficients(out, *rec.result.model, data.grid);
    }
    if (cfg.write_trace) {
        auto out = open_out(dir / "trace.log");
        for (int k = 1; k <= rec.result.path.K_max; ++k) {
            out << "# k=" << k << '\n';
            write_trace(out, rec.result.path.at(k));
        }
    }

    if (!rec.result.model) {
        std::cerr << "selection failed: no RR score below rho = " << cfg.rho << "\n";
        write_score_table(std::cerr, rec.result.path);
        return 2;
    }
    std::cout << "support:";
    for (const auto& l : rec.result.model->labels) std::cout << ' ' << l;
    std::cout << "\nk*: " << *rec.result.path.k_star << "\n";
    if (rec.report) {
        std::cout << "jaccard: " << rec.report->jaccard << '\n';
        for (const auto& [k, v] : rec.report->per_feature_errors) std::cout << "error[" << k << "]: " << v << "%\n";
        if (rec.report->trajectory_error) std::cout << "trajectory error: " << *rec.report->trajectory_error << "%\n";
    }
    std::cout << "time: " << rec.result.runtime_seconds << " s\n";
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    if (cfg.problem.empty()) throw std::invalid_argument("sweep needs a problem preset");
    const PDEProblem truth = make_preset(cfg.problem);
    const auto records = run_sweep(cfg, &std::cerr);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "runs.csv");
        write_results_header(out);
        for (const auto& r : records) write_results_row(out, r, cfg);
    }
    {
        auto out = open_out(dir / "summary.csv");
        write_sweep_summary(out, records, cfg, truth.true_support);
    }
    write_sweep_summary(std::cout, records, cfg, truth.true_support);
    return 0;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

int report_csv(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader)
        throw std::runtime_error("'" + path.string() + "' is not a results CSV");
    struct Agg {
        int runs = 0, exact = 0, failed = 0;
        double jaccard = 0.0;
    };
    std::map<std::pair<std::string, double>, Agg> groups;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() < 12) throw std::runtime_error("malformed row in '" + path.string() + "'");
        Agg& a = groups[{f[1], std::stod(f[2])}];
        ++a.runs;
        if (f[8].empty()) {
            ++a.failed;
            continue;
        }
        const double j = std::stod(f[8]);
        a.jaccard += j;
        if (j == 1.0) ++a.exact;
    }
    std::printf("%-22s %8s %6s %8s %8s %10s\n", "problem", "noise%", "runs", "exact", "errors", "mean J");
    for (const auto& [key, a] : groups)
        std::printf("%-22s %8g %6d %8d %8d %10.4f\n", key.first.c_str(), key.second, a.runs, a.exact, a.failed,
                    a.runs ? a.jaccard / a.runs : 0.0);
    return 0;
}

int report_json(const fs::path& path) {
    std::ifstream in(path);
    const nlohmann::json j = nlohmann::json::parse(in);
    std::printf("problem %s, noise %g%%, seed %llu, status %s\n", j.at("problem").get<std::string>().c_str(),
                j.at("noise_percent").get<double>(), j.at("seed").get<unsigned long long>(),
                j.at("status").get<std::string>().c_str());
    std::printf("%4s %14s %12s  %s\n", "k", "R_k", "s_k", "support");
    for (const auto& e : j.at("path")) {
        std::string sup;
        for (const auto& l : e.at("support")) sup += (sup.empty() ? "" : " ") + l.get<std::string>();
        const int k = e.at("k").get<int>();
        const bool sel = !j.at("k_star").is_null() && j.at("k_star").get<int>() == k;
        if (e.contains("s_k"))
            std::printf("%4d %14.6e %12.6f  %s%s\n", k, e.at("R_k").get<double>(), e.at("s_k").get<double>(),
                        sup.c_str(), sel ? "  <- k*" : "");
        else
            std::printf("%4d %14.6e %12s  %s\n", k, e.at("R_k").get<double>(), "", sup.c_str());
    }
    if (j.contains("evaluation")) {
        const auto& ev = j.at("evaluation");
        std::printf("jaccard %g\n", ev.at("jaccard").get<double>());
        for (const auto& [k, v] : ev.at("coef_errors_interior").items())
            std::printf("error[%s] %.4g%% (interior), %.4g%% (full)\n", k.c_str(), v.get<double>(),
                        ev.at("coef_errors_full").at(k).get<double>());
        if (!ev.at("trajectory_error").is_null())
            std::printf("trajectory error %.4g%%\n", ev.at("trajectory_error").get<double>());
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs) {
    for (const auto& p : inputs) {
        fs::path path = p;
        if (fs::is_directory(path)) {
            if (fs::exists(path / "runs.csv")) path /= "runs.csv";
            else if (fs::exists(path / "run.json")) path /= "run.json";
            else throw std::runtime_error("no runs.csv or run.json in '" + p + "'");
        }
        std::cout << "== " << path.string() << '\n';
        if (path.extension() == ".json") report_json(path);
        else report_csv(path);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Identify PDEs with varying coefficients from trajectory data"};
    app.require_subcommand(1);

    Common gen_opts, id_opts, sweep_opts;
    auto* gen = app.add_subcommand("generate", "Simulate a preset and write clean and noisy trajectories");
    add_common(gen, gen_opts);

    auto* ident = app.add_subcommand("identify", "Identify the PDE behind one trajectory");
    add_common(ident, id_opts);
    std::string traj_file, dump_path;
    ident->add_option("-t,--trajectory", traj_file, "Trajectory CSV (default: simulate the preset)");
    ident->add_option("--dump-system", dump_path, "Write the feature system to this binary file");

    auto* sweep = app.add_subcommand("sweep", "Repeat identification over noise levels and seeds");
    add_common(sweep, sweep_opts);

    auto* rep = app.add_subcommand("report", "Summarise results CSV files or run JSON documents");
    std::vector<std::string> inputs;
    rep->add_option("inputs", inputs, "runs.csv / results.csv / run.json files or output directories")
        ->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return cmd_generate(load_config(gen_opts));
        if (*ident) return cmd_identify(load_config(id_opts), traj_file, dump_path);
        if (*sweep) return cmd_sweep(load_config(sweep_opts));
        if (*rep) return cmd_report(inputs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
