// Tests for scenario configuration: descriptor algebra and JSON round trips,
// validation rules, lowering to simulation plans, artifact emission with
// byte-level determinism, golden-file schema freezing, and sweep plumbing.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stickyheat/config.hpp"
#include "stickyheat/runner.hpp"

using namespace stickyheat;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / "stickyheat_test_cli" / tag;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// The miniature but fully featured scenario used for determinism and golden
/// tests. Any change here invalidates tests/golden — regenerate via
/// STICKYHEAT_REGEN_GOLDEN=1.
ScenarioConfig mini_config() {
    ScenarioConfig c;
    c.name = "mini";
    c.boundary = "neumann";
    c.n = 3;
    c.T = 0.02;
    c.dt = 1e-3;
    c.scheme = "hard";
    c.theta_implicit = 0.5;
    c.spec.pairs = {{0.6, BasisFn::constant()}, {0.3, BasisFn::cosine(1)}};
    c.lambda = FieldDescriptor::constant(0.8);
    c.g = FieldDescriptor::linear(0.5, 0.1);
    c.drift = DriftSpec::linear(0.1);
    c.paths = 2;
    c.master_seed = 424242;
    c.record_every = 2;
    c.outputs = {"paths_csv", "diag_json", "events_json", "plot_gp"};
    return c;
}

}  // namespace

TEST_CASE("field descriptors: values, projection, scaling") {
    REQUIRE(FieldDescriptor::constant(2.5)(0.3) == 2.5);
    REQUIRE(FieldDescriptor::linear(2.0, 1.0)(0.25) == 1.5);
    REQUIRE(FieldDescriptor::cosine(0.5, 1, 1.0)(0.0) == Catch::Approx(1.5).margin(1e-15));
    REQUIRE(FieldDescriptor::sine(2.0, 1)(0.5) == Catch::Approx(2.0).margin(1e-15));
    REQUIRE(FieldDescriptor::sine(1.0, 2)(0.0) == Catch::Approx(0.0).margin(1e-15));

    const auto tab = FieldDescriptor::tabulated({1.0, 2.0, 3.0, 4.0});
    REQUIRE(tab(0.1) == 1.0);
    REQUIRE(tab(0.3) == 2.0);
    REQUIRE(tab(0.99) == 4.0);
    REQUIRE(tab.knots().size() == 3);
    REQUIRE(tab.knots()[1] == 0.5);

    // Cell averages of u ↦ u on n=4 are exactly the midpoints.
    const GridFunction lin = FieldDescriptor::linear(1.0)(0.0) == 0.0
                                 ? FieldDescriptor::linear(1.0).project(4)
                                 : GridFunction(1, {0.0});
    for (int k = 1; k <= 4; ++k)
        REQUIRE(lin.values[k - 1] == Catch::Approx((k - 0.5) / 4.0).margin(1e-14));

    // Step-function reprojection is exact overlap arithmetic.
    const GridFunction coarse = FieldDescriptor::tabulated({1.0, 3.0}).project(1);
    REQUIRE(coarse.values[0] == Catch::Approx(2.0).margin(1e-14));

    const auto scaled = FieldDescriptor::tabulated({1.0, 3.0}).scaled(2.0);
    REQUIRE(scaled(0.1) == 2.0);
    REQUIRE(scaled(0.9) == 6.0);
    REQUIRE(FieldDescriptor::linear(2.0, 1.0).scaled(0.5)(0.25) == Catch::Approx(0.75));

    REQUIRE_THROWS_AS(FieldDescriptor::tabulated({}), std::invalid_argument);
    REQUIRE_THROWS_AS(FieldDescriptor::cosine(1.0, 0), std::invalid_argument);
}

TEST_CASE("field descriptors: JSON round trips") {
    const FieldDescriptor cases[] = {
        FieldDescriptor::constant(1.25),
        FieldDescriptor::linear(-2.0, 3.0),
        FieldDescriptor::cosine(0.5, 2, 0.75),
        FieldDescriptor::sine(1.5, 3),
        FieldDescriptor::tabulated({0.0, 0.5, 2.0}),
    };
    for (const auto& f : cases) {
        const json j = f.to_json();
        REQUIRE(FieldDescriptor::from_json(j).to_json() == j);
    }
    REQUIRE_THROWS_AS(FieldDescriptor::from_json(json{{"type", "mystery"}}),
                      std::invalid_argument);
}

TEST_CASE("scenario config: field-exact round trip and stable hash") {
    ScenarioConfig c = mini_config();
    c.boundary = "neumann";
    c.scheme = "regularized";
    c.epsilon = 0.05;
    c.lambda = FieldDescriptor::tabulated({0.1, 0.2, 0.4});
    c.drift = DriftSpec::saturated_linear(0.3, 2.0);
    c.master_seed = 123456789012345ull;
    c.outputs = {"diag_json"};

    const json j = c.to_json();
    const ScenarioConfig back = ScenarioConfig::from_json(j);
    REQUIRE(back.to_json() == j);
    REQUIRE(back.name == c.name);
    REQUIRE(back.master_seed == c.master_seed);
    REQUIRE(back.epsilon == c.epsilon);
    REQUIRE(back.record_every == c.record_every);
    REQUIRE(back.spec.truncation() == 2);
    REQUIRE(back.alpha0() == 1);

    REQUIRE(back.config_hash() == c.config_hash());
    REQUIRE(c.config_hash().size() == 16);
    ScenarioConfig tweaked = c;
    tweaked.master_seed += 1;
    REQUIRE(tweaked.config_hash() != c.config_hash());

    // Defaults fill in missing optional fields.
    const ScenarioConfig sparse = ScenarioConfig::from_json(
        json{{"name", "s"}, {"boundary", "neumann"}, {"n", 2}, {"T", 1.0}, {"dt", 0.5}});
    REQUIRE(sparse.scheme == "hard");
    REQUIRE(sparse.theta_implicit == 0.5);
    REQUIRE(sparse.paths == 1);
}

TEST_CASE("validation: accepts the mini scenario cleanly") {
    const ValidationReport rep = validate(mini_config());
    CAPTURE(rep.errors, rep.warnings);
    REQUIRE(rep.ok());
    // The only expected advisory: 20 steps cannot satisfy the statistics-grade
    // recording stride (T/200); the mini scenario is deliberately tiny.
    REQUIRE(rep.warnings.size() == 1);
    REQUIRE(rep.warnings[0].find("record_every") != std::string::npos);
}

TEST_CASE("validation: silent noise with active boundary drift warns, not errors") {
    ScenarioConfig c = mini_config();
    c.spec.pairs.clear();  // zero covariance operator
    c.lambda = FieldDescriptor::constant(1.0);
    const ValidationReport rep = validate(c);
    REQUIRE(rep.ok());
    bool found = false;
    for (const auto& w : rep.warnings) found = found || w.find("noise intensity") != std::string::npos;
    REQUIRE(found);
}

TEST_CASE("validation: Dirichlet initial data must vanish at the endpoints") {
    ScenarioConfig c = mini_config();
    c.boundary = "dirichlet";
    c.g = FieldDescriptor::constant(1.0);
    const ValidationReport bad = validate(c);
    REQUIRE_FALSE(bad.ok());
    bool found = false;
    for (const auto& e : bad.errors) found = found || e.find("g(0)") != std::string::npos;
    REQUIRE(found);

    c.g = FieldDescriptor::sine(1.0, 1);  // vanishes at both endpoints
    const ValidationReport good = validate(c);
    CAPTURE(good.errors);
    REQUIRE(good.ok());
}

TEST_CASE("validation: explicit-scheme step-size guard") {
    ScenarioConfig c = mini_config();
    c.theta_implicit = 0.0;
    c.n = 10;
    c.T = 0.1;
    c.dt = 0.01;  // above 0.5/n² = 0.005
    REQUIRE_FALSE(validate(c).ok());
    c.dt = 0.005;
    const ValidationReport rep = validate(c);
    CAPTURE(rep.errors);
    REQUIRE(rep.ok());
}

TEST_CASE("validation: scheme and descriptor shape rules") {
    ScenarioConfig c = mini_config();

    c.scheme = "regularized";  // needs epsilon > 0
    REQUIRE_FALSE(validate(c).ok());
    c.epsilon = 0.05;
    REQUIRE(validate(c).ok());

    c = mini_config();
    c.epsilon = 0.1;  // hard scheme ignores it
    REQUIRE(validate(c).ok());
    REQUIRE_FALSE(validate(c).warnings.empty());

    c = mini_config();
    c.scheme = "semi";
    REQUIRE_FALSE(validate(c).ok());

    c = mini_config();
    c.boundary = "mixed";
    REQUIRE_FALSE(validate(c).ok());

    c = mini_config();
    c.lambda = FieldDescriptor::cosine(0.5, 1, 0.5);  // kind not allowed for lambda
    REQUIRE_FALSE(validate(c).ok());

    c = mini_config();
    c.lambda = FieldDescriptor::linear(-1.0);  // negative somewhere
    REQUIRE_FALSE(validate(c).ok());

    c = mini_config();
    c.g = FieldDescriptor::linear(-1.0, 0.5);  // dips negative
    REQUIRE_FALSE(validate(c).ok());

    c = mini_config();
    c.outputs = {"paths_csv", "spreadsheet"};
    REQUIRE_FALSE(validate(c).ok());

    c = mini_config();
    c.name = "a/b";
    REQUIRE_FALSE(validate(c).ok());

    c = mini_config();
    c.paths = 0;
    REQUIRE_FALSE(validate(c).ok());

    c = mini_config();
    c.record_every = 0;
    REQUIRE_FALSE(validate(c).ok());

    c = mini_config();
    c.theta_implicit = 1.5;
    REQUIRE_FALSE(validate(c).ok());
}

TEST_CASE("validation: time-grid consistency and recording stride") {
    ScenarioConfig c = mini_config();
    c.T = 0.1;
    c.dt = 0.3;  // rounds to zero steps
    REQUIRE_FALSE(validate(c).ok());

    c.dt = 3e-3;  // T/dt is not an integer
    REQUIRE_FALSE(validate(c).ok());

    c = mini_config();
    c.T = 1.0;
    c.dt = 1e-3;
    c.record_every = 10;  // stride 0.01 > T/200
    const ValidationReport rep = validate(c);
    REQUIRE(rep.ok());
    bool found = false;
    for (const auto& w : rep.warnings) found = found || w.find("record_every") != std::string::npos;
    REQUIRE(found);
    c.record_every = 5;  // exactly T/200
    REQUIRE(validate(c).warnings.empty());
}

TEST_CASE("lowering: plan mirrors the config") {
    const ScenarioConfig c = mini_config();
    const SimPlan plan = lower(c, 2);
    REQUIRE(plan.n == 3);
    REQUIRE(plan.alpha0 == 1);
    REQUIRE(plan.T == c.T);
    REQUIRE(plan.params.dt == c.dt);
    REQUIRE(plan.params.theta_implicit == 0.5);
    REQUIRE_FALSE(plan.regularized);
    REQUIRE(plan.threads == 2);
    REQUIRE(plan.paths == 2);
    REQUIRE(plan.seeds.master_seed == 424242);
    REQUIRE(plan.scheme_tag == "system_hard");
    REQUIRE(plan.factor.n == 3);

    REQUIRE(plan.lambda_cells.size() == 3);
    for (double v : plan.lambda_cells) REQUIRE(v == Catch::Approx(0.8).margin(1e-13));
    REQUIRE(plan.g_cells.size() == 3);
    for (int k = 1; k <= 3; ++k)
        REQUIRE(plan.g_cells[k - 1] ==
                Catch::Approx(0.5 * (k - 0.5) / 3.0 + 0.1).margin(1e-13));

    ScenarioConfig d = mini_config();
    d.boundary = "dirichlet";
    d.g = FieldDescriptor::sine(0.5, 1);
    d.scheme = "regularized";
    d.epsilon = 0.04;
    const SimPlan pd = lower(d);
    REQUIRE(pd.alpha0 == 0);
    REQUIRE(pd.regularized);
    REQUIRE(pd.params.epsilon == 0.04);
    REQUIRE(pd.scheme_tag == "system_regularized");
    for (double v : pd.g_cells) REQUIRE(v >= 0.0);
}

TEST_CASE("thread resolution: override beats environment beats default") {
    unsetenv("STICKYHEAT_THREADS");
    REQUIRE(resolve_threads() == 1);
    REQUIRE(resolve_threads(4) == 4);
    setenv("STICKYHEAT_THREADS", "3", 1);
    REQUIRE(resolve_threads() == 3);
    REQUIRE(resolve_threads(2) == 2);
    setenv("STICKYHEAT_THREADS", "abc", 1);
    REQUIRE(resolve_threads() == 1);
    setenv("STICKYHEAT_THREADS", "0", 1);
    REQUIRE(resolve_threads() == 1);
    unsetenv("STICKYHEAT_THREADS");
}

TEST_CASE("runner: artifact set, byte determinism, thread invariance") {
    const ScenarioConfig cfg = mini_config();
    const fs::path dir_a = fresh_dir("run_a");
    const fs::path dir_b = fresh_dir("run_b");

    const RunArtifacts a = run_scenario(cfg, dir_a.string(), 1);
    REQUIRE(a.exit_code == 0);
    REQUIRE(fs::exists(dir_a / "mini.paths.csv"));
    REQUIRE(fs::exists(dir_a / "mini.diag.json"));
    REQUIRE(fs::exists(dir_a / "mini.events.json"));
    REQUIRE(fs::exists(dir_a / "mini.plot.gp"));
    REQUIRE(fs::exists(dir_a / "mini.summary.json"));

    const RunArtifacts b = run_scenario(cfg, dir_b.string(), 3);
    REQUIRE(b.exit_code == 0);
    REQUIRE(read_file(dir_a / "mini.paths.csv") == read_file(dir_b / "mini.paths.csv"));
    REQUIRE(read_file(dir_a / "mini.diag.json") == read_file(dir_b / "mini.diag.json"));
    REQUIRE(read_file(dir_a / "mini.events.json") == read_file(dir_b / "mini.events.json"));
    REQUIRE(read_file(dir_a / "mini.plot.gp") == read_file(dir_b / "mini.plot.gp"));

    // Summaries agree on everything except the timestamp and thread count.
    json sa = json::parse(read_file(dir_a / "mini.summary.json"));
    json sb = json::parse(read_file(dir_b / "mini.summary.json"));
    REQUIRE(sa.at("config_hash") == cfg.config_hash());
    REQUIRE(sa.at("master_seed").get<std::uint64_t>() == cfg.master_seed);
    REQUIRE(sb.at("threads") == 3);
    for (const char* key : {"timestamp", "threads"}) {
        sa.erase(key);
        sb.erase(key);
    }
    REQUIRE(sa == sb);

    // CSV schema: frozen header, n rows per (path, snapshot).
    std::istringstream csv(read_file(dir_a / "mini.paths.csv"));
    std::string header;
    std::getline(csv, header);
    REQUIRE(header == "path,t,k,x");
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    const std::size_t snapshots = 1 + 20 / 2;  // t=0 plus every 2nd of 20 steps
    REQUIRE(rows == 2 * snapshots * 3);

    const json diag = json::parse(read_file(dir_a / "mini.diag.json"));
    REQUIRE(diag.at("config_hash") == cfg.config_hash());
    REQUIRE(diag.at("delta_diag").get<double>() > 0.0);
    REQUIRE(diag.at("martingale").is_null());  // 2 paths < 30
    REQUIRE(diag.at("stickiness").at("mean").get<double>() >= 0.0);
    REQUIRE(diag.at("stickiness").at("mean").get<double>() <= cfg.T);
    REQUIRE(diag.at("qv_support").size() == 3);
}

TEST_CASE("runner: outputs list gates artifacts; summary always written") {
    ScenarioConfig cfg = mini_config();
    cfg.outputs = {};
    const fs::path dir = fresh_dir("run_summary_only");
    const RunArtifacts art = run_scenario(cfg, dir.string());
    REQUIRE(art.exit_code == 0);
    REQUIRE(art.files.size() == 1);
    REQUIRE(fs::exists(dir / "mini.summary.json"));
    REQUIRE_FALSE(fs::exists(dir / "mini.paths.csv"));
    REQUIRE_FALSE(fs::exists(dir / "mini.diag.json"));
    REQUIRE_FALSE(fs::exists(dir / "mini.events.json"));
    REQUIRE_FALSE(fs::exists(dir / "mini.plot.gp"));
}

TEST_CASE("runner: invalid config refuses to run") {
    ScenarioConfig cfg = mini_config();
    cfg.dt = -1.0;
    const fs::path dir = fresh_dir("run_invalid");
    const RunArtifacts art = run_scenario(cfg, dir.string());
    REQUIRE(art.exit_code == 1);
    REQUIRE_FALSE(art.errors.empty());
    REQUIRE(fs::is_empty(dir));
}

TEST_CASE("golden files: artifact bytes are frozen") {
    // Pins the CSV/JSON schemas AND the numerical stream for this toolchain.
    // To regenerate after an intentional change:
    //   STICKYHEAT_REGEN_GOLDEN=1 ./test_cli "golden files*"
    const fs::path golden = fs::path(STICKYHEAT_SOURCE_DIR) / "tests" / "golden";
    const ScenarioConfig cfg = mini_config();

    if (std::getenv("STICKYHEAT_REGEN_GOLDEN")) {
        fs::create_directories(golden);
        const RunArtifacts art = run_scenario(cfg, golden.string(), 1);
        REQUIRE(art.exit_code == 0);
        WARN("regenerated golden artifacts in " + golden.string());
        return;
    }

    REQUIRE(fs::exists(golden / "mini.paths.csv"));
    const fs::path dir = fresh_dir("golden_check");
    const RunArtifacts art = run_scenario(cfg, dir.string(), 1);
    REQUIRE(art.exit_code == 0);
    REQUIRE(read_file(dir / "mini.paths.csv") == read_file(golden / "mini.paths.csv"));
    REQUIRE(read_file(dir / "mini.diag.json") == read_file(golden / "mini.diag.json"));
}

TEST_CASE("sweep: coefficient-field error declines on the n axis") {
    SweepPlan plan;
    plan.base = mini_config();
    plan.base.name = "lsweep";
    plan.base.spec.pairs = {{1.0, BasisFn::constant()}};
    plan.base.lambda = FieldDescriptor::linear(1.0);  // λ(u) = u
    plan.axis = "n";
    plan.values = {8, 16, 32, 64};
    plan.statistic = "lambda_l2_error";

    const fs::path dir = fresh_dir("sweep_n");
    const SweepArtifacts art = sweep(plan, dir.string());
    REQUIRE(art.exit_code == 0);
    REQUIRE(art.rows.size() == 4);
    for (std::size_t i = 0; i < art.rows.size(); ++i) {
        REQUIRE(art.rows[i].error.empty());
        if (i > 0) REQUIRE(art.rows[i].mean < art.rows[i - 1].mean);
    }
    REQUIRE(art.rows[0].mean == Catch::Approx(1.0 / (2.0 * std::sqrt(3.0) * 8.0)).margin(1e-9));

    const std::string csv = read_file(dir / "lsweep.sweep.csv");
    REQUIRE(csv.rfind("axis,value,statistic,paths,mean,stderr,ci_lo,ci_hi,error\n", 0) == 0);
    std::size_t lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    REQUIRE(lines == 5);
    const json tab = json::parse(read_file(dir / "lsweep.sweep.json"));
    REQUIRE(tab.at("rows").size() == 4);
    REQUIRE(tab.at("axis") == "n");

    // Singleton axis behaves exactly like a direct evaluation.
    plan.values = {16};
    const SweepArtifacts one = sweep(plan, fresh_dir("sweep_single").string());
    REQUIRE(one.exit_code == 0);
    REQUIRE(one.rows.size() == 1);
    REQUIRE(one.rows[0].mean == art.rows[1].mean);
}

TEST_CASE("sweep: plan validation rejects malformed axes") {
    SweepPlan plan;
    plan.base = mini_config();
    plan.axis = "n";
    plan.values = {8, 16};
    plan.statistic = "mean_final_mass";
    REQUIRE(validate(plan).ok());

    plan.axis = "sideways";
    REQUIRE_FALSE(validate(plan).ok());
    plan.axis = "n";

    plan.values = {8, 8};
    REQUIRE_FALSE(validate(plan).ok());
    plan.values = {16, 8, 12};
    REQUIRE_FALSE(validate(plan).ok());
    plan.values = {16, 8};  // strictly decreasing is fine
    REQUIRE(validate(plan).ok());
    plan.values = {};
    REQUIRE_FALSE(validate(plan).ok());
    plan.values = {8, 16};

    plan.statistic = "median_height";
    REQUIRE_FALSE(validate(plan).ok());

    // Round trip of the plan itself.
    plan.statistic = "mean_occupation";
    const json j = plan.to_json();
    REQUIRE(SweepPlan::from_json(j).to_json() == j);
}

TEST_CASE("sweep: per-point failure is recorded and the sweep continues") {
    SweepPlan plan;
    plan.base = mini_config();
    plan.base.name = "dtsweep";
    plan.base.theta_implicit = 0.0;
    plan.base.n = 8;
    plan.base.T = 0.01;
    plan.axis = "dt";
    plan.values = {0.02, 0.005};  // first violates the explicit-scheme guard
    plan.statistic = "mean_final_mass";

    const fs::path dir = fresh_dir("sweep_fail");
    const SweepArtifacts art = sweep(plan, dir.string());
    REQUIRE(art.exit_code == 3);
    REQUIRE(art.rows.size() == 2);
    REQUIRE_FALSE(art.rows[0].error.empty());
    REQUIRE(art.rows[1].error.empty());
    REQUIRE(art.rows[1].mean > 0.0);
    REQUIRE(fs::exists(dir / "dtsweep.sweep.csv"));
}

TEST_CASE("sweep: occupation and QV-ratio statistics at desk scale") {
    SweepPlan plan;
    plan.base = mini_config();
    plan.base.name = "eps_occ";
    plan.base.n = 2;
    plan.base.T = 0.02;
    plan.base.dt = 1e-3;
    plan.base.record_every = 1;
    plan.base.paths = 40;
    plan.base.scheme = "regularized";
    plan.base.spec.pairs = {{0.8, BasisFn::constant()}};
    plan.base.lambda = FieldDescriptor::constant(1.0);
    plan.base.g = FieldDescriptor::constant(0.01);
    plan.base.drift = DriftSpec::zero();
    plan.axis = "epsilon";
    plan.values = {0.04, 0.02};
    plan.statistic = "mean_occupation";

    const SweepArtifacts occ = sweep(plan, fresh_dir("sweep_occ").string());
    REQUIRE(occ.exit_code == 0);
    for (const auto& row : occ.rows) {
        REQUIRE(row.error.empty());
        REQUIRE(row.paths == 40);
        REQUIRE(row.mean >= 0.0);
        REQUIRE(row.mean <= plan.base.T);
    }

    // Large initial data keeps the field away from zero: QV ratio near 1.
    plan.base.name = "eps_qv";
    plan.base.g = FieldDescriptor::constant(5.0);
    plan.base.lambda = FieldDescriptor::constant(0.0);
    plan.statistic = "qv_ratio";
    const SweepArtifacts qv = sweep(plan, fresh_dir("sweep_qv").string());
    REQUIRE(qv.exit_code == 0);
    for (const auto& row : qv.rows) {
        REQUIRE(row.error.empty());
        REQUIRE(row.mean == Catch::Approx(1.0).margin(0.5));
    }
}
