// Command-line front end: validate scenario configs, execute runs and
// sweeps, and drive the built-in verification suite (`selftest`).
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stickyheat/acceptance.hpp"
#include "stickyheat/config.hpp"
#include "stickyheat/runner.hpp"

namespace {

stickyheat::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    stickyheat::json j;
    in >> j;
    return j;
}

int cmd_validate(const std::string& cfg_path) {
    const auto j = load_json(cfg_path);
    const auto cfg = stickyheat::ScenarioConfig::from_json(j);
    const auto rep = stickyheat::validate(cfg);
    for (const auto& e : rep.errors) std::cout << "error: " << e << "\n";
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
    if (rep.ok()) {
        std::cout << "ok: " << cfg.name << " (hash " << cfg.config_hash() << ")\n";
        return 0;
    }
    return 1;
}

int cmd_run(const std::string& cfg_path, const std::string& out_dir, int threads) {
    const auto cfg = stickyheat::ScenarioConfig::from_json(load_json(cfg_path));
    const auto art = stickyheat::run_scenario(cfg, out_dir, threads);
    if (art.exit_code == 1) {
        for (const auto& e : art.errors) std::cout << "error: " << e << "\n";
        return 1;
    }
    for (const auto& f : art.files) std::cout << "wrote " << f << "\n";
    if (art.exit_code == 3)
        std::cout << "warning: " << art.summary.at("aborted_paths").get<std::size_t>()
                  << " path(s) aborted on overflow\n";
    return art.exit_code;
}

int cmd_sweep(const std::string& plan_path, const std::string& out_dir, int threads) {
    const auto plan = stickyheat::SweepPlan::from_json(load_json(plan_path));
    const auto art = stickyheat::sweep(plan, out_dir, threads);
    if (art.exit_code == 1) {
        for (const auto& e : art.errors) std::cout << "error: " << e << "\n";
        return 1;
    }
    for (const auto& f : art.files) std::cout << "wrote " << f << "\n";
    for (const auto& row : art.rows)
        if (!row.error.empty())
            std::cout << "point " << stickyheat::format_double(row.value)
                      << " failed: " << row.error << "\n";
    return art.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sticky-boundary stochastic heat lattice: simulator and verification harness"};
    app.require_subcommand(1);

    std::string cfg_path, out_dir = ".";
    int threads = 0;

    auto* validate_cmd = app.add_subcommand("validate", "check a scenario config");
    validate_cmd->add_option("config", cfg_path, "scenario JSON file")->required();

    auto* run_cmd = app.add_subcommand("run", "execute one scenario");
    run_cmd->add_option("config", cfg_path, "scenario JSON file")->required();
    run_cmd->add_option("--out", out_dir, "output directory (default .)");
    run_cmd->add_option("--threads", threads, "worker count (default STICKYHEAT_THREADS or 1)");

    auto* sweep_cmd = app.add_subcommand("sweep", "execute a parameter sweep");
    sweep_cmd->add_option("plan", cfg_path, "sweep plan JSON file")->required();
    sweep_cmd->add_option("--out", out_dir, "output directory (default .)");
    sweep_cmd->add_option("--threads", threads, "worker count (default STICKYHEAT_THREADS or 1)");

    std::string only;
    auto* selftest_cmd = app.add_subcommand("selftest", "run the built-in verification suite");
    selftest_cmd->add_option("--out", out_dir, "artifact directory (default .)");
    selftest_cmd->add_option("--only", only, "run a single numbered check");
    selftest_cmd->add_option("--threads", threads, "worker count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate_cmd->parsed()) return cmd_validate(cfg_path);
        if (run_cmd->parsed()) return cmd_run(cfg_path, out_dir, threads);
        if (sweep_cmd->parsed()) return cmd_sweep(cfg_path, out_dir, threads);
        if (selftest_cmd->parsed()) {
            const int failures = stickyheat::run_acceptance(
                std::cout, out_dir, only, stickyheat::resolve_threads(threads));
            return failures == 0 ? 0 : 1;
        }
    } catch (const std::exception& ex) {
        std::cerr << "fatal: " << ex.what() << "\n";
        return 2;
    }
    return 2;
}
