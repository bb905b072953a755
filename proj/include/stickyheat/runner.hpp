// Experiment orchestration: execute one scenario or one sweep and emit the
// frozen artifact set (CSV paths, JSON summaries/diagnostics, plot scripts).
// All files are written once, by a single writer, after reduction — outputs
// are byte-deterministic for a fixed config and master seed; the wall-clock
// timestamp appears only in the run summary and nowhere else.
#pragma once

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stickyheat/config.hpp"
#include "stickyheat/diagnostics.hpp"
#include "stickyheat/dynamics.hpp"

namespace stickyheat {

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

/// Worker-count resolution: explicit override > STICKYHEAT_THREADS > 1.
inline int resolve_threads(int override_threads = 0) {
    if (override_threads > 0) return override_threads;
    if (const char* env = std::getenv("STICKYHEAT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
    }
    return 1;
}

/// UTC wall-clock stamp; deliberately quarantined in the run summary so every
/// other artifact is byte-reproducible.
inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << body;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// The runner's standard test function: lattice projection of the lowest
/// basis element compatible with the boundary condition (constant for
/// Neumann, the fundamental sine for Dirichlet).
inline GridFunction default_test_function(int alpha0, int n, std::string* label) {
    if (alpha0 == 1) {
        if (label) *label = "pr(const)";
        return project_basis(BasisFn::constant(), n);
    }
    if (label) *label = "pr(sine1)";
    return project_basis(BasisFn::sine(1), n);
}

/// Per-path occupation of {x ≤ delta}, averaged over cells.
inline std::vector<double> per_path_mean_occupation(const SimulationResult& sim, double delta) {
    std::vector<double> occ;
    occ.reserve(sim.paths.size());
    std::vector<double> series;
    for (const PathRecord& rec : sim.paths) {
        const int n = rec.states.empty() ? 0 : static_cast<int>(rec.states.front().size());
        KahanSum cells;
        for (int k = 0; k < n; ++k) {
            series.resize(rec.states.size());
            for (std::size_t j = 0; j < rec.states.size(); ++j)
                series[j] = rec.states[j][static_cast<std::size_t>(k)];
            cells.add(occupation_time(rec.times, series, delta));
        }
        occ.push_back(n > 0 ? cells.value() / n : 0.0);
    }
    return occ;
}

/// Per-path total mass ⟨x_T, 1⟩ = (1/n)Σ_k x_k at the final recorded time.
inline std::vector<double> per_path_final_mass(const SimulationResult& sim) {
    std::vector<double> mass;
    mass.reserve(sim.paths.size());
    for (const PathRecord& rec : sim.paths) {
        if (rec.states.empty()) {
            mass.push_back(0.0);
            continue;
        }
        KahanSum s;
        for (double v : rec.states.back()) s.add(v);
        mass.push_back(s.value() / static_cast<double>(rec.states.back().size()));
    }
    return mass;
}

/// Ensemble-mean QV support fractions, averaged over cells and paths.
inline std::vector<SupportRow> ensemble_support_rows(const SimulationResult& sim,
                                                     const std::vector<double>& deltas) {
    std::vector<KahanSum> acc(deltas.size());
    long count = 0;
    std::vector<double> series;
    for (const PathRecord& rec : sim.paths) {
        const int n = rec.states.empty() ? 0 : static_cast<int>(rec.states.front().size());
        for (int k = 0; k < n; ++k) {
            series.resize(rec.states.size());
            for (std::size_t j = 0; j < rec.states.size(); ++j)
                series[j] = rec.states[j][static_cast<std::size_t>(k)];
            const std::vector<SupportRow> rows = qv_support_fractions(series, deltas);
            for (std::size_t i = 0; i < rows.size(); ++i) acc[i].add(rows[i].fraction);
            ++count;
        }
    }
    std::vector<SupportRow> out;
    out.reserve(deltas.size());
    for (std::size_t i = 0; i < deltas.size(); ++i)
        out.push_back({deltas[i], count > 0 ? acc[i].value() / count : 0.0});
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-scenario run
// ---------------------------------------------------------------------------

struct RunArtifacts {
    int exit_code = 0;                // 0 ok, 1 invalid config, 3 aborted paths
    std::vector<std::string> files;   // artifact paths, in write order
    std::vector<std::string> errors;  // validation errors when exit_code == 1
    json summary;                     // contents of <name>.summary.json
    json diag;                        // contents of <name>.diag.json (if emitted)
};

/// Execute one scenario and write its artifact set under `out_dir`. The
/// summary JSON is always written; paths CSV, diagnostics JSON, event log,
/// and plot script are gated by the config's outputs list.
inline RunArtifacts run_scenario(const ScenarioConfig& cfg, const std::string& out_dir,
                                 int threads_override = 0) {
    RunArtifacts art;
    const ValidationReport rep = validate(cfg);
    if (!rep.ok()) {
        art.exit_code = 1;
        art.errors = rep.errors;
        return art;
    }

    const int threads = resolve_threads(threads_override);
    SimPlan plan = lower(cfg, threads);
    const SimulationResult sim = simulate(plan);
    const double delta_diag = default_delta_diag(applied_rate_max(cfg.spec, cfg.n), cfg.dt);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path base = std::filesystem::path(out_dir) / cfg.name;
    const std::string config_hash = cfg.config_hash();

    // --- paths CSV ---------------------------------------------------------
    if (cfg.wants("paths_csv")) {
        std::string csv = "path,t,k,x\n";
        csv.reserve(1024);
        for (const PathRecord& rec : sim.paths) {
            for (std::size_t j = 0; j < rec.times.size(); ++j) {
                const std::string t = format_double(rec.times[j]);
                for (std::size_t k = 0; k < rec.states[j].size(); ++k) {
                    csv += std::to_string(rec.path);
                    csv += ',';
                    csv += t;
                    csv += ',';
                    csv += std::to_string(k + 1);
                    csv += ',';
                    csv += format_double(rec.states[j][k]);
                    csv += '\n';
                }
            }
        }
        const auto p = base.string() + ".paths.csv";
        detail::write_text_file(p, csv);
        art.files.push_back(p);
    }

    // --- diagnostics JSON ---------------------------------------------------
    const bool ragged = !sim.aborted_paths.empty();
    if (cfg.wants("diag_json")) {
        json diag{{"config_hash", config_hash},
                  {"master_seed", cfg.master_seed},
                  {"scheme", cfg.scheme},
                  {"delta_diag", delta_diag}};
        if (ragged) {
            diag["skipped"] = "ensemble has aborted paths; residual analysis needs full-length "
                              "paths";
        } else {
            std::string phi_label;
            const GridFunction phi = detail::default_test_function(cfg.alpha0(), cfg.n, &phi_label);
            const GridFunction lambda_n(cfg.n, plan.lambda_cells);
            if (sim.paths.size() >= 30) {
                const MartingaleTestReport mg = run_martingale_test(
                    sim, cfg.alpha0(), phi, phi_label, cfg.spec, lambda_n, cfg.drift, delta_diag);
                diag["martingale"] = mg.to_json();
            } else {
                diag["martingale"] = nullptr;  // Z-statistics need >= 30 paths
            }
            diag["stickiness"] = make_stickiness_report(
                                     detail::per_path_mean_occupation(sim, delta_diag),
                                     delta_diag, cfg.T)
                                     .to_json();
            json support = json::array();
            for (const SupportRow& row : detail::ensemble_support_rows(
                     sim, {0.5 * delta_diag, delta_diag, 2.0 * delta_diag}))
                support.push_back({{"delta", row.delta}, {"fraction", row.fraction}});
            diag["qv_support"] = support;
        }
        const auto p = base.string() + ".diag.json";
        detail::write_text_file(p, diag.dump(2) + "\n");
        art.files.push_back(p);
        art.diag = std::move(diag);
    }

    // --- event log ----------------------------------------------------------
    if (cfg.wants("events_json")) {
        json aborted = json::array();
        for (std::size_t i = 0; i < sim.paths.size(); ++i)
            if (sim.paths[i].aborted)
                aborted.push_back(
                    {{"path", sim.paths[i].path}, {"step", sim.paths[i].abort_step}});
        const json events{{"config_hash", config_hash},
                          {"clamp_events", sim.clamp_events},
                          {"clamped_mass", sim.clamped_mass},
                          {"aborted", aborted}};
        const auto p = base.string() + ".events.json";
        detail::write_text_file(p, events.dump(2) + "\n");
        art.files.push_back(p);
    }

    // --- plot script ----------------------------------------------------------
    if (cfg.wants("plot_gp")) {
        const std::string csv_name = cfg.name + ".paths.csv";
        std::string gp;
        gp += "# Field snapshots and ensemble mass for scenario '" + cfg.name + "'.\n";
        gp += "# Requires " + csv_name + " (enable the paths_csv output) in the same directory.\n";
        gp += "set datafile separator ','\n";
        gp += "set key outside\n";
        gp += "n = " + std::to_string(cfg.n) + ".0\n";
        gp += "T = " + format_double(cfg.T) + "\n";
        gp += "stride = " + format_double(cfg.record_every * cfg.dt) + "\n";
        gp += "set xlabel 'u'\nset ylabel 'x'\n";
        gp += "set title 'path 0 snapshots'\n";
        gp += "plot for [i=0:4] '" + csv_name +
             "' using (abs($2-i*T/4.0)<0.5*stride && $1==0 ? ($3-0.5)/n : 1/0):4 \\\n"
             "     with linespoints title sprintf('t=%.3g', i*T/4.0)\n";
        const auto p = base.string() + ".plot.gp";
        detail::write_text_file(p, gp);
        art.files.push_back(p);
    }

    // --- summary (always; sole holder of the timestamp) ----------------------
    json file_names = json::array();  // basenames: identical wherever the run lands
    for (const auto& f : art.files)
        file_names.push_back(std::filesystem::path(f).filename().string());
    json summary{{"name", cfg.name},
                 {"config", cfg.to_json()},
                 {"config_hash", config_hash},
                 {"master_seed", cfg.master_seed},
                 {"timestamp", utc_timestamp()},
                 {"n", cfg.n},
                 {"dt", cfg.dt},
                 {"steps", static_cast<long long>(std::llround(cfg.T / cfg.dt))},
                 {"paths", cfg.paths},
                 {"record_every", cfg.record_every},
                 {"threads", threads},
                 {"delta_diag", delta_diag},
                 {"clamp_events", sim.clamp_events},
                 {"clamped_mass", sim.clamped_mass},
                 {"aborted_paths", sim.aborted_paths.size()},
                 {"noise_backend", plan.factor.backend == NoiseBackend::spectral
                                       ? "spectral"
                                       : "cholesky"},
                 {"files", file_names}};
    {
        const auto p = base.string() + ".summary.json";
        detail::write_text_file(p, summary.dump(2) + "\n");
        art.files.push_back(p);
        art.summary = std::move(summary);
    }

    art.exit_code = ragged ? 3 : 0;
    return art;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    double value = 0.0;
    std::size_t paths = 0;
    double mean = 0.0;
    double stderr_mean = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    std::string error;  // nonempty if this point failed

    [[nodiscard]] json to_json() const {
        json j{{"value", value}, {"paths", paths},   {"mean", mean},
               {"stderr", stderr_mean}, {"ci_lo", ci_lo}, {"ci_hi", ci_hi}};
        if (!error.empty()) j["error"] = error;
        return j;
    }
};

struct SweepArtifacts {
    int exit_code = 0;  // 0 ok, 1 invalid plan, 3 if any point failed
    std::vector<std::string> files;
    std::vector<std::string> errors;
    std::vector<SweepRow> rows;
};

namespace detail {

/// Evaluate the plan's statistic on one axis point. Throws on failure; the
/// sweep driver records the message and continues.
inline SweepRow evaluate_sweep_point(const SweepPlan& plan, double value, int threads) {
    const ScenarioConfig cfg = apply_axis(plan.base, plan.axis, value);
    SweepRow row;
    row.value = value;

    if (plan.statistic == "lambda_l2_error") {
        // Pure quadrature; no paths are simulated.
        const GridFunction ln = discretize_lambda(
            cfg.spec, [&](double u) { return cfg.lambda(u); }, cfg.n, cfg.lambda.knots());
        const double err = l2_distance(ln, [&](double u) { return cfg.lambda(u); },
                                       cfg.lambda.knots(), cfg.lambda.oscillation());
        row.mean = row.ci_lo = row.ci_hi = err;
        return row;
    }

    const ValidationReport rep = validate(cfg);
    if (!rep.ok()) {
        std::string msg = "invalid config at axis point:";
        for (const auto& e : rep.errors) msg += " [" + e + "]";
        throw std::runtime_error(msg);
    }
    const SimPlan sp = lower(cfg, threads);
    const SimulationResult sim = simulate(sp);
    if (!sim.aborted_paths.empty())
        throw std::runtime_error(std::to_string(sim.aborted_paths.size()) +
                                 " path(s) aborted on overflow");
    row.paths = sim.paths.size();
    const double delta_diag = default_delta_diag(applied_rate_max(cfg.spec, cfg.n), cfg.dt);

    std::vector<double> obs;
    if (plan.statistic == "mean_occupation") {
        obs = per_path_mean_occupation(sim, delta_diag);
    } else if (plan.statistic == "mean_final_mass") {
        obs = per_path_final_mass(sim);
    } else if (plan.statistic == "qv_ratio") {
        std::string phi_label;
        const GridFunction phi = default_test_function(cfg.alpha0(), cfg.n, &phi_label);
        const QvIdentityReport qv =
            qv_identity_check(sim.paths, cfg.alpha0(), phi, cfg.spec,
                              GridFunction(cfg.n, sp.lambda_cells), cfg.drift, delta_diag);
        if (qv.degenerate) throw std::runtime_error("QV target degenerate at this point");
        row.mean = qv.pooled_ratio;
        row.ci_lo = qv.ci_lo;
        row.ci_hi = qv.ci_hi;
        row.stderr_mean = (qv.ci_hi - qv.ci_lo) / (2.0 * 1.959963984540054);
        return row;
    } else {
        throw std::runtime_error("unknown statistic '" + plan.statistic + "'");
    }

    row.mean = mean_of(obs);
    row.stderr_mean =
        obs.size() > 1 ? stddev_of(obs) / std::sqrt(static_cast<double>(obs.size())) : 0.0;
    row.ci_lo = row.mean - 1.959963984540054 * row.stderr_mean;
    row.ci_hi = row.mean + 1.959963984540054 * row.stderr_mean;
    return row;
}

}  // namespace detail

/// Run the sweep: one row per axis value; per-point failures are recorded in
/// the row and the sweep continues. Writes `<name>.sweep.csv` and
/// `<name>.sweep.json` under `out_dir`.
inline SweepArtifacts sweep(const SweepPlan& plan, const std::string& out_dir,
                            int threads_override = 0) {
    SweepArtifacts art;
    const ValidationReport rep = validate(plan);
    if (!rep.ok()) {
        art.exit_code = 1;
        art.errors = rep.errors;
        return art;
    }
    const int threads = resolve_threads(threads_override);

    for (double value : plan.values) {
        try {
            art.rows.push_back(detail::evaluate_sweep_point(plan, value, threads));
        } catch (const std::exception& ex) {
            SweepRow row;
            row.value = value;
            row.error = ex.what();
            art.rows.push_back(row);
        }
    }

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path base = std::filesystem::path(out_dir) / plan.base.name;

    std::string csv = "axis,value,statistic,paths,mean,stderr,ci_lo,ci_hi,error\n";
    for (const SweepRow& row : art.rows) {
        csv += plan.axis + ',' + format_double(row.value) + ',' + plan.statistic + ',' +
               std::to_string(row.paths) + ',' + format_double(row.mean) + ',' +
               format_double(row.stderr_mean) + ',' + format_double(row.ci_lo) + ',' +
               format_double(row.ci_hi) + ',';
        std::string msg = row.error;
        for (char& ch : msg)
            if (ch == ',' || ch == '\n') ch = ';';
        csv += msg + '\n';
    }
    const auto csv_path = base.string() + ".sweep.csv";
    detail::write_text_file(csv_path, csv);
    art.files.push_back(csv_path);

    json rows = json::array();
    for (const SweepRow& row : art.rows) rows.push_back(row.to_json());
    const json out{{"base_config_hash", plan.base.config_hash()},
                   {"master_seed", plan.base.master_seed},
                   {"axis", plan.axis},
                   {"statistic", plan.statistic},
                   {"rows", rows}};
    const auto json_path = base.string() + ".sweep.json";
    detail::write_text_file(json_path, out.dump(2) + "\n");
    art.files.push_back(json_path);

    for (const SweepRow& row : art.rows)
        if (!row.error.empty()) art.exit_code = 3;
    return art;
}

}  // namespace stickyheat
