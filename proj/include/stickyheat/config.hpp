// User-facing scenario and sweep descriptions: JSON schema, structural
// validation (pure — no file or RNG access), and lowering to the compiled
// simulation plan. One config file describes one scenario; a sweep references
// a base scenario plus an axis block.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stickyheat/dynamics.hpp"
#include "stickyheat/spectral.hpp"

namespace stickyheat {

// ---------------------------------------------------------------------------
// Scalar field descriptors (boundary drift λ and initial data g)
// ---------------------------------------------------------------------------

/// A named scalar field on [0,1]: constant, affine, trigonometric, or a cell
/// table (step function on its own uniform grid).
class FieldDescriptor {
public:
    enum class Kind { Constant, Linear, Cosine, Sine, Tabulated };

    FieldDescriptor() = default;  // constant 0

    static FieldDescriptor constant(double value) {
        FieldDescriptor f;
        f.kind_ = Kind::Constant;
        f.a_ = value;
        return f;
    }
    /// slope·u + intercept
    static FieldDescriptor linear(double slope, double intercept = 0.0) {
        FieldDescriptor f;
        f.kind_ = Kind::Linear;
        f.a_ = slope;
        f.b_ = intercept;
        return f;
    }
    /// offset + amplitude·cos(πju)
    static FieldDescriptor cosine(double amplitude, int j = 1, double offset = 0.0) {
        if (j < 1) throw std::invalid_argument("FieldDescriptor::cosine: j must be >= 1");
        FieldDescriptor f;
        f.kind_ = Kind::Cosine;
        f.a_ = amplitude;
        f.b_ = offset;
        f.j_ = j;
        return f;
    }
    /// amplitude·sin(πju); vanishes at both endpoints
    static FieldDescriptor sine(double amplitude, int j = 1) {
        if (j < 1) throw std::invalid_argument("FieldDescriptor::sine: j must be >= 1");
        FieldDescriptor f;
        f.kind_ = Kind::Sine;
        f.a_ = amplitude;
        f.j_ = j;
        return f;
    }
    static FieldDescriptor tabulated(std::vector<double> cells) {
        if (cells.empty()) throw std::invalid_argument("FieldDescriptor::tabulated: empty table");
        FieldDescriptor f;
        f.kind_ = Kind::Tabulated;
        f.table_ = std::move(cells);
        return f;
    }

    [[nodiscard]] Kind kind() const { return kind_; }

    [[nodiscard]] double operator()(double u) const {
        switch (kind_) {
            case Kind::Constant:
                return a_;
            case Kind::Linear:
                return a_ * u + b_;
            case Kind::Cosine:
                return b_ + a_ * std::cos(M_PI * j_ * u);
            case Kind::Sine:
                return a_ * std::sin(M_PI * j_ * u);
            case Kind::Tabulated: {
                const auto m = static_cast<int>(table_.size());
                int k = static_cast<int>(std::floor(u * m));
                k = std::clamp(k, 0, m - 1);
                return table_[static_cast<std::size_t>(k)];
            }
        }
        return 0.0;  // unreachable
    }

    /// Piecewise-smoothness hints for cell-average quadrature.
    [[nodiscard]] std::vector<double> knots() const {
        if (kind_ != Kind::Tabulated) return {};
        std::vector<double> ks;
        const auto m = static_cast<int>(table_.size());
        for (int i = 1; i < m; ++i) ks.push_back(static_cast<double>(i) / m);
        return ks;
    }
    [[nodiscard]] double oscillation() const {
        return (kind_ == Kind::Cosine || kind_ == Kind::Sine) ? static_cast<double>(j_) : 0.0;
    }

    /// Cell averages on an n-grid (exact for all families).
    [[nodiscard]] GridFunction project(int n) const {
        if (kind_ == Kind::Tabulated)
            return project_grid_to_grid(
                GridFunction(static_cast<int>(table_.size()), table_), n);
        return project_to_grid([this](double u) { return (*this)(u); }, n, knots(),
                               oscillation());
    }

    /// Multiply the field by a scalar (sweep axis lambda_scale).
    [[nodiscard]] FieldDescriptor scaled(double c) const {
        FieldDescriptor f = *this;
        f.a_ *= c;
        f.b_ *= c;
        for (double& v : f.table_) v *= c;
        return f;
    }

    [[nodiscard]] json to_json() const {
        switch (kind_) {
            case Kind::Constant:
                return json{{"type", "constant"}, {"value", a_}};
            case Kind::Linear:
                return json{{"type", "linear"}, {"slope", a_}, {"intercept", b_}};
            case Kind::Cosine:
                return json{{"type", "cosine"}, {"amplitude", a_}, {"j", j_}, {"offset", b_}};
            case Kind::Sine:
                return json{{"type", "sine"}, {"amplitude", a_}, {"j", j_}};
            case Kind::Tabulated:
                return json{{"type", "tabulated"}, {"values", table_}};
        }
        return json{};
    }

    static FieldDescriptor from_json(const json& j) {
        const std::string type = j.at("type").get<std::string>();
        if (type == "constant") return constant(j.at("value").get<double>());
        if (type == "linear")
            return linear(j.at("slope").get<double>(),
                          j.value("intercept", 0.0));
        if (type == "cosine")
            return cosine(j.at("amplitude").get<double>(), j.value("j", 1),
                          j.value("offset", 0.0));
        if (type == "sine") return sine(j.at("amplitude").get<double>(), j.value("j", 1));
        if (type == "tabulated")
            return tabulated(j.at("values").get<std::vector<double>>());
        throw std::invalid_argument("FieldDescriptor: unknown type '" + type + "'");
    }

private:
    Kind kind_ = Kind::Constant;
    double a_ = 0.0, b_ = 0.0;
    int j_ = 1;
    std::vector<double> table_;
};

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

struct ScenarioConfig {
    std::string name = "scenario";
    std::string boundary = "neumann";  // neumann | dirichlet
    int n = 8;
    double T = 1.0;
    double dt = 1e-3;
    std::string scheme = "hard";  // hard | regularized
    double epsilon = 0.0;
    double theta_implicit = 0.5;
    double stability_factor = 0.5;
    EigenSpec spec;
    FieldDescriptor lambda;  // boundary drift field
    FieldDescriptor g;       // initial data
    DriftSpec drift = DriftSpec::zero();
    int paths = 1;
    std::uint64_t master_seed = 1;
    int record_every = 1;
    std::vector<std::string> outputs{"paths_csv", "diag_json", "events_json"};

    [[nodiscard]] int alpha0() const { return boundary == "dirichlet" ? 0 : 1; }
    [[nodiscard]] bool regularized() const { return scheme == "regularized"; }
    [[nodiscard]] bool wants(const std::string& artifact) const {
        for (const auto& o : outputs)
            if (o == artifact) return true;
        return false;
    }

    [[nodiscard]] json to_json() const {
        return json{{"name", name},
                    {"boundary", boundary},
                    {"n", n},
                    {"T", T},
                    {"dt", dt},
                    {"scheme", scheme},
                    {"epsilon", epsilon},
                    {"theta_implicit", theta_implicit},
                    {"stability_factor", stability_factor},
                    {"spec", spec.to_json()},
                    {"lambda", lambda.to_json()},
                    {"g", g.to_json()},
                    {"drift", drift.to_json()},
                    {"paths", paths},
                    {"master_seed", master_seed},
                    {"record_every", record_every},
                    {"outputs", outputs}};
    }

    static ScenarioConfig from_json(const json& j) {
        ScenarioConfig c;
        c.name = j.at("name").get<std::string>();
        c.boundary = j.at("boundary").get<std::string>();
        c.n = j.at("n").get<int>();
        c.T = j.at("T").get<double>();
        c.dt = j.at("dt").get<double>();
        c.scheme = j.value("scheme", std::string("hard"));
        c.epsilon = j.value("epsilon", 0.0);
        c.theta_implicit = j.value("theta_implicit", 0.5);
        c.stability_factor = j.value("stability_factor", 0.5);
        if (j.contains("spec")) c.spec = EigenSpec::from_json(j.at("spec"));
        if (j.contains("lambda")) c.lambda = FieldDescriptor::from_json(j.at("lambda"));
        if (j.contains("g")) c.g = FieldDescriptor::from_json(j.at("g"));
        if (j.contains("drift")) c.drift = DriftSpec::from_json(j.at("drift"));
        c.paths = j.value("paths", 1);
        c.master_seed = j.value("master_seed", std::uint64_t{1});
        c.record_every = j.value("record_every", 1);
        if (j.contains("outputs"))
            c.outputs = j.at("outputs").get<std::vector<std::string>>();
        return c;
    }

    /// Canonical fingerprint of the full scenario (no timestamps involved).
    [[nodiscard]] std::string config_hash() const { return hex64(fnv1a64(to_json().dump())); }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    [[nodiscard]] bool ok() const { return errors.empty(); }
};

/// Structural and numerical-safety checks. Pure: touches no files and draws
/// no randomness. Noise-compatibility violations (sticky drift active where
/// the noise intensity vanishes) are warnings, not errors — such systems can
/// still admit solutions; the flag exists to explain surprising output.
inline ValidationReport validate(const ScenarioConfig& c) {
    ValidationReport rep;
    auto err = [&](std::string m) { rep.errors.push_back(std::move(m)); };
    auto warn = [&](std::string m) { rep.warnings.push_back(std::move(m)); };

    if (c.name.empty()) err("name: must be nonempty");
    if (c.name.find('/') != std::string::npos || c.name.find('\\') != std::string::npos)
        err("name: must not contain path separators");
    if (c.boundary != "neumann" && c.boundary != "dirichlet")
        err("boundary: must be 'neumann' or 'dirichlet'");
    if (c.scheme != "hard" && c.scheme != "regularized")
        err("scheme: must be 'hard' or 'regularized'");
    if (c.n < 1) err("n: must be >= 1");
    if (!(c.T > 0.0)) err("T: must be > 0");
    if (!(c.dt > 0.0)) err("dt: must be > 0");
    if (c.paths < 1) err("paths: must be >= 1");
    if (c.record_every < 1) err("record_every: must be >= 1");
    for (const auto& o : c.outputs)
        if (o != "paths_csv" && o != "diag_json" && o != "events_json" && o != "plot_gp")
            err("outputs: unknown artifact '" + o + "'");

    if (c.T > 0.0 && c.dt > 0.0) {
        const auto steps = std::llround(c.T / c.dt);
        if (steps < 1) err("dt: T/dt rounds to zero steps");
        else if (std::abs(steps * c.dt - c.T) > 1e-9 * std::max(1.0, c.T))
            err("dt: T must be an integer multiple of dt (got T/dt = " +
                format_double(c.T / c.dt) + ")");
        else if (static_cast<double>(c.record_every) * c.dt > c.T / 200.0 + 1e-15)
            warn("record_every: stride " + format_double(c.record_every * c.dt) +
                 " exceeds T/200; statistics-grade runs need a finer recording grid");
    }

    if (c.theta_implicit < 0.0 || c.theta_implicit > 1.0)
        err("theta_implicit: must lie in [0,1]");
    else if (c.theta_implicit == 0.0 && c.n >= 1 && c.dt > 0.0) {
        const double limit = c.stability_factor / (static_cast<double>(c.n) * c.n);
        if (c.dt > limit)
            err("dt: explicit stepping needs dt <= " + format_double(limit) + " at n = " +
                std::to_string(c.n));
    }
    if (c.regularized() && !(c.epsilon > 0.0))
        err("epsilon: must be > 0 for the regularized scheme");
    if (!c.regularized() && c.epsilon != 0.0)
        warn("epsilon: ignored by the hard scheme");

    for (const std::string& issue : c.spec.validate()) rep.errors.push_back("spec: " + issue);
    for (const std::string& issue : c.drift.validate()) rep.errors.push_back("drift: " + issue);

    if (c.lambda.kind() != FieldDescriptor::Kind::Constant &&
        c.lambda.kind() != FieldDescriptor::Kind::Linear &&
        c.lambda.kind() != FieldDescriptor::Kind::Tabulated)
        err("lambda: descriptor must be constant, linear, or tabulated");

    // Pointwise sign checks on a fine midpoint grid.
    const int probes = std::max(512, 8 * c.n);
    double lambda_min = 0.0, g_min = 0.0;
    for (int i = 0; i < probes; ++i) {
        const double u = (i + 0.5) / probes;
        lambda_min = std::min(lambda_min, c.lambda(u));
        g_min = std::min(g_min, c.g(u));
    }
    if (lambda_min < 0.0) err("lambda: must be nonnegative on [0,1]");
    if (g_min < -1e-12) err("g: initial data must be nonnegative on [0,1]");
    if (c.boundary == "dirichlet") {
        if (std::abs(c.g(0.0)) > 1e-12 || std::abs(c.g(1.0)) > 1e-12)
            err("g: Dirichlet runs need g(0) = g(1) = 0 (to 1e-12)");
    }

    // Sticky drift where the noise intensity vanishes: allowed, but flagged.
    if (rep.errors.empty()) {
        const DriftConditionReport drift_rep =
            check_drift_condition(c.spec, [&](double u) { return c.lambda(u); });
        if (!drift_rep.ok)
            warn("lambda is positive where the noise intensity vanishes at " +
                 std::to_string(drift_rep.violations.size()) + " of " +
                 std::to_string(drift_rep.points_checked) +
                 " probe points; the sticky drift there has no noise to balance it");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Lowering to a simulation plan
// ---------------------------------------------------------------------------

/// Compile the scenario into the executable plan. Assumes validate() passed;
/// throws on the subset of violations that would corrupt the run.
inline SimPlan lower(const ScenarioConfig& c, int threads = 1) {
    SimPlan plan;
    plan.n = c.n;
    plan.alpha0 = c.alpha0();
    plan.T = c.T;
    plan.params.dt = c.dt;
    plan.params.epsilon = c.epsilon;
    plan.params.theta_implicit = c.theta_implicit;
    plan.params.stability_factor = c.stability_factor;
    plan.regularized = c.regularized();
    plan.lambda_cells =
        discretize_lambda(c.spec, [&](double u) { return c.lambda(u); }, c.n, c.lambda.knots())
            .values;
    plan.drift = c.drift;
    plan.factor = build_noise_factor(c.spec, c.n);
    plan.g_cells = c.g.project(c.n).values;
    for (double& v : plan.g_cells) v = std::max(v, 0.0);  // flush -1e-12-scale dust
    plan.paths = c.paths;
    plan.seeds = SeedPolicy{c.master_seed};
    plan.record_every = c.record_every;
    plan.threads = threads;
    plan.scheme_tag = c.scheme == "regularized" ? "system_regularized" : "system_hard";
    return plan;
}

// ---------------------------------------------------------------------------
// Sweep plans
// ---------------------------------------------------------------------------

struct SweepPlan {
    ScenarioConfig base;
    std::string axis;  // n | dt | epsilon | lambda_scale
    std::vector<double> values;
    std::string statistic;  // lambda_l2_error | mean_occupation | mean_final_mass | qv_ratio

    [[nodiscard]] json to_json() const {
        return json{{"base", base.to_json()},
                    {"axis", axis},
                    {"values", values},
                    {"statistic", statistic}};
    }

    static SweepPlan from_json(const json& j) {
        SweepPlan p;
        p.base = ScenarioConfig::from_json(j.at("base"));
        p.axis = j.at("axis").get<std::string>();
        p.values = j.at("values").get<std::vector<double>>();
        p.statistic = j.at("statistic").get<std::string>();
        return p;
    }
};

/// The base scenario with one axis value substituted.
inline ScenarioConfig apply_axis(const ScenarioConfig& base, const std::string& axis,
                                 double value) {
    ScenarioConfig c = base;
    if (axis == "n") {
        c.n = static_cast<int>(std::llround(value));
        if (c.n < 1 || std::abs(value - c.n) > 1e-9)
            throw std::invalid_argument("sweep: axis n needs positive integer values");
    } else if (axis == "dt") {
        c.dt = value;
    } else if (axis == "epsilon") {
        c.epsilon = value;
    } else if (axis == "lambda_scale") {
        c.lambda = base.lambda.scaled(value);
    } else {
        throw std::invalid_argument("sweep: unknown axis '" + axis + "'");
    }
    return c;
}

inline ValidationReport validate(const SweepPlan& p) {
    ValidationReport rep;
    auto err = [&](std::string m) { rep.errors.push_back(std::move(m)); };
    const bool axis_known =
        p.axis == "n" || p.axis == "dt" || p.axis == "epsilon" || p.axis == "lambda_scale";
    if (!axis_known) err("axis: must be one of n, dt, epsilon, lambda_scale");
    if (p.values.empty()) err("values: must be nonempty");

    // The swept field's placeholder in the base need not be self-consistent,
    // and individual points may fail (recorded per point, sweep continues) —
    // but a plan where EVERY point is invalid is rejected outright.
    if (axis_known && !p.values.empty()) {
        bool any_valid = false;
        ValidationReport first_rep;
        for (std::size_t i = 0; i < p.values.size() && !any_valid; ++i) {
            try {
                const ValidationReport r = validate(apply_axis(p.base, p.axis, p.values[i]));
                if (i == 0) first_rep = r;
                if (r.ok()) {
                    any_valid = true;
                    for (const auto& w : r.warnings) rep.warnings.push_back("base: " + w);
                }
            } catch (const std::exception& ex) {
                if (i == 0) first_rep.errors.push_back(ex.what());
            }
        }
        if (!any_valid) {
            err("base: no axis value yields a valid configuration");
            for (const auto& e : first_rep.errors) rep.errors.push_back("base: " + e);
        }
    } else {
        const ValidationReport base_rep = validate(p.base);
        for (const auto& e : base_rep.errors) rep.errors.push_back("base: " + e);
        for (const auto& w : base_rep.warnings) rep.warnings.push_back("base: " + w);
    }
    bool inc = true, dec = true;
    for (std::size_t i = 1; i < p.values.size(); ++i) {
        inc = inc && p.values[i] > p.values[i - 1];
        dec = dec && p.values[i] < p.values[i - 1];
    }
    if (!inc && !dec) err("values: must be strictly monotone");
    if (p.statistic != "lambda_l2_error" && p.statistic != "mean_occupation" &&
        p.statistic != "mean_final_mass" && p.statistic != "qv_ratio")
        err("statistic: unknown name '" + p.statistic + "'");
    return rep;
}

}  // namespace stickyheat
