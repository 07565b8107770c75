#include "gpident/pipeline.hpp"

#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gpident;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(GPIDENT_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gpident_pipeline_" + name);
    fs::remove_all(p);
    return p;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + GPIDENT_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_sweep() {
    RunConfig cfg = RunConfig::load(kConfigs / "advection_diffusion.json");
    cfg.apply_override("noise.levels=[1]");
    cfg.apply_override("noise.seeds=[1,2]");
    cfg.apply_override("dictionary.max_deriv=2");
    cfg.apply_override("dictionary.max_product=2");
    cfg.apply_override("selection.K_max=8");
    cfg.apply_override("selection.L=3");
    cfg.apply_override("evaluation.trajectory_error=false");
    return cfg;
}

}  // namespace

TEST_CASE("shipped configurations load") {
    for (const char* name : {"advection_diffusion", "burgers", "fisher", "kdv"}) {
        const RunConfig cfg = RunConfig::load(kConfigs / (std::string(name) + ".json"));
        CHECK(cfg.problem == name);
        CHECK(cfg.K_max == 15);
        CHECK(cfg.L == 5);
        CHECK(cfg.rho == 0.015);
        CHECK_NOTHROW(make_preset(cfg.problem));
    }
    const RunConfig ad = RunConfig::load(kConfigs / "advection_diffusion.json");
    CHECK(ad.seeds.size() == 20u);
    CHECK(ad.seeds.front() == 1u);
    CHECK(ad.seeds.back() == 20u);
    CHECK(ad.sdd_window == 15);
    CHECK(ad.basis_space == 7);
}

TEST_CASE("overrides and validation") {
    RunConfig cfg;
    cfg.apply_override("sdd.window=9");
    CHECK(cfg.sdd_window == 9);
    cfg.apply_override("solver.name=bsp");
    CHECK(cfg.solver == SolverKind::Bsp);
    cfg.apply_override("solver.rcond=1e-8");
    CHECK(cfg.rcond == 1e-8);
    cfg.apply_override("problem=fisher");
    CHECK(cfg.problem == "fisher");
    CHECK_THROWS_AS(cfg.apply_override("sdd.widow=9"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.apply_override("nothing.here=1"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.apply_override("sdd.window"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.apply_override("sdd.window=4"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.apply_override("solver.rcond=0"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.apply_override("selection.L=15"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.apply_override("noise.levels=[-1]"), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"colour", "blue"}}), std::invalid_argument);
    CHECK_THROWS(RunConfig::load(kConfigs / "missing.json"));
}

TEST_CASE("JSON round trip and fingerprint") {
    RunConfig cfg = RunConfig::load(kConfigs / "burgers.json");
    const RunConfig back = RunConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK(back.fingerprint() == cfg.fingerprint());
    CHECK(cfg.fingerprint().size() == 16u);
    RunConfig moved = cfg;
    moved.output_dir = "elsewhere";
    moved.threads = 4;
    CHECK(moved.fingerprint() == cfg.fingerprint());
    RunConfig other = cfg;
    other.rho = 0.05;
    CHECK(other.fingerprint() != cfg.fingerprint());
}

TEST_CASE("filter and basis follow the configuration") {
    RunConfig cfg;
    cfg.sdd_window = 15;
    CHECK_FALSE(filter_for(cfg, 0.0).has_value());
    REQUIRE(filter_for(cfg, 1.0).has_value());
    CHECK(filter_for(cfg, 1.0)->window == 15);
    cfg.sdd_on_clean = true;
    CHECK(filter_for(cfg, 0.0).has_value());
    cfg.sdd_window = 0;
    CHECK_FALSE(filter_for(cfg, 3.0).has_value());

    cfg.basis_space = 7;
    cfg.basis_time = 1;
    const Grid g(-5.0, 5.0, 0.0, 5.0, 256, 256);
    const BasisSet b = make_basis(cfg, g);
    CHECK(b.M1() == 7);
    CHECK(b.M2() == 1);
    CHECK(b.space().boundary() == BoundaryMode::Periodic);
    CHECK(b.time().boundary() == BoundaryMode::Constant);
}

TEST_CASE("unknown preset") {
    RunConfig cfg;
    cfg.problem = "ks";
    try {
        generate_clean(cfg);
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("advection_diffusion") != std::string::npos);
    }
    const fs::path log = scratch("ks.log");
    CHECK(run_cli("generate --set problem=ks -o " + scratch("ks").string(), log) != 0);
    CHECK(slurp(log).find("available") != std::string::npos);
}

TEST_CASE("results rows are bit-identical across repeated sweeps") {
    const RunConfig cfg = small_sweep();
    auto rows = [&] {
        std::ostringstream os;
        write_results_header(os);
        for (const auto& rec : run_sweep(cfg)) write_results_row(os, rec, cfg);
        return os.str();
    };
    const std::string a = rows();
    const std::string b = rows();
    CHECK(a == b);
    CHECK(std::count(a.begin(), a.end(), '\n') == 3);
    CHECK(a.rfind(std::string(kResultsHeader) + "\n", 0) == 0);
    CHECK(a.find(cfg.fingerprint()) != std::string::npos);
}

TEST_CASE("generate writes one clean file and one per seed and level") {
    const fs::path out = scratch("gen");
    const fs::path log = scratch("gen.log");
    REQUIRE(run_cli("generate -c \"" + (kConfigs / "burgers.json").string() +
                        "\" --set \"noise.levels=[0,1,2]\" --set \"noise.seeds=[5,6,7]\" -o \"" + out.string() + "\"",
                    log) == 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(out)) files += e.path().extension() == ".csv";
    CHECK(files == 7);
    const Trajectory noisy = read_trajectory(out / "burgers_p2_s6.csv");
    CHECK(noisy.is_noisy);
    CHECK(noisy.seed == 6u);
    CHECK(noisy.noise_percent == 2.0);
    const Trajectory clean = read_trajectory(out / "burgers_clean.csv");
    CHECK(clean.grid.I == 256);
    CHECK_FALSE(clean.is_noisy);
}

TEST_CASE("identify and report from the command line") {
    const fs::path out = scratch("ident");
    const fs::path log = scratch("ident.log");
    REQUIRE(run_cli("identify -c \"" + (kConfigs / "advection_diffusion.json").string() +
                        "\" --set \"noise.levels=[0]\" --set evaluation.trajectory_error=false -o \"" + out.string() +
                        "\"",
                    log) == 0);
    CHECK(slurp(log).find("support: u u_x u_xx") != std::string::npos);
    for (const char* f : {"results.csv", "scores.csv", "coefficients.csv", "run.json"}) CHECK(fs::exists(out / f));
    const std::string results = slurp(out / "results.csv");
    CHECK(results.find(",ok,3,u|u_x|u_xx,1,") != std::string::npos);
    const auto doc = nlohmann::json::parse(slurp(out / "run.json"));
    CHECK(doc.at("fingerprint").is_string());

    const fs::path rlog = scratch("report.log");
    CHECK(run_cli("report \"" + out.string() + "\"", rlog) == 0);
    CHECK(slurp(rlog).find("<- k*") != std::string::npos);
    CHECK(run_cli("report \"" + (out / "absent.json").string() + "\"", rlog) != 0);
}

TEST_CASE("identification from a written trajectory matches the in-memory run") {
    RunConfig cfg = small_sweep();
    cfg.apply_override("noise.seeds=[3]");
    const Trajectory clean = generate_clean(cfg);
    const Trajectory noisy = add_noise(clean, 1.0, 3);
    const fs::path file = scratch("traj.csv");
    write_trajectory(noisy, file);
    const IdentifyResult direct = identify(noisy, cfg);
    const IdentifyResult loaded = identify(read_trajectory(file), cfg);
    CHECK(direct.path.R == loaded.path.R);
    CHECK(direct.status == loaded.status);
    REQUIRE(direct.model.has_value());
    CHECK(direct.model->labels == loaded.model->labels);
    fs::remove(file);
}
