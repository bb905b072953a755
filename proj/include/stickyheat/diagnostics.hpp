// Path and ensemble statistics for the lattice field: residuals of the
// generator identity, realized quadratic variation against its spectral
// target, boundary bookkeeping defects, occupation times, and the two-sample
// and Z-score machinery used by the verification suite.
//
// Everything here is a pure function over recorded trajectories; ensemble
// reductions are compensated sums merged in path order, so reports do not
// depend on scheduling.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stickyheat/common.hpp"
#include "stickyheat/dynamics.hpp"
#include "stickyheat/lattice.hpp"
#include "stickyheat/spectral.hpp"

namespace stickyheat {

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

/// Largest per-cell applied noise variance rate, n·max_k q_kk.
inline double applied_rate_max(const EigenSpec& spec, int n) {
    const std::vector<double> qd = q_diagonal(spec, n);
    double m = 0.0;
    for (double q : qd) m = std::max(m, q);
    return n * m;
}

/// Diagnostic "at zero" threshold: two noise standard deviations per step.
/// One step cannot distinguish 0 from O(√(q·dt)), so indicator-based
/// statistics evaluate x ≤ δ_diag rather than x = 0.
inline double default_delta_diag(double applied_rate, double dt) {
    return 2.0 * std::sqrt(std::max(0.0, applied_rate) * dt);
}

// ---------------------------------------------------------------------------
// Generator-identity residual
// ---------------------------------------------------------------------------

/// Residual functional of one recorded path against the test function phi:
///
///   M(t) = ⟨x_t,φ⟩ − ⟨x_0,φ⟩ − ½∫₀ᵗ⟨x_s, Δ̃φ⟩ds − ∫₀ᵗ⟨λ𝟙{x≤δ},φ⟩ds
///          − ∫₀ᵗ⟨f(x_s),φ⟩ds,
///
/// with the adjoint second difference Δ̃φ (exact at finite n, so no spatial
/// truncation enters the statistic) and trapezoidal quadrature on the
/// recorded grid. For the exact dynamics this is a martingale null.
inline std::vector<double> martingale_residual_path(const PathRecord& path, int alpha0,
                                                    const GridFunction& phi,
                                                    const GridFunction& lambda_n,
                                                    const DriftSpec& drift, double delta_diag) {
    if (path.states.empty()) throw std::invalid_argument("martingale_residual_path: empty path");
    const int n = static_cast<int>(path.states.front().size());
    if (phi.n != n || lambda_n.n != n)
        throw std::invalid_argument("martingale_residual_path: phi/lambda grid mismatch");
    if (delta_diag < 0.0)
        throw std::invalid_argument("martingale_residual_path: delta_diag must be >= 0");

    const std::vector<double> tphi = apply_tilde_delta(phi, alpha0).values;
    const std::size_t m = path.times.size();

    // Integrand g(s) = ½⟨x,Δ̃φ⟩ + ⟨λ𝟙,φ⟩ + ⟨f(x),φ⟩ at each recorded time.
    auto integrand = [&](const std::vector<double>& x) {
        KahanSum lap, sticky, reaction;
        for (int k = 0; k < n; ++k) {
            const double xk = x[static_cast<std::size_t>(k)];
            const double pk = phi.values[static_cast<std::size_t>(k)];
            lap.add(xk * tphi[static_cast<std::size_t>(k)]);
            if (xk <= delta_diag) sticky.add(lambda_n.values[static_cast<std::size_t>(k)] * pk);
            reaction.add(drift(xk) * pk);
        }
        return (0.5 * lap.value() + sticky.value() + reaction.value()) / n;
    };

    std::vector<double> out(m);
    KahanSum integral, pairing0;
    for (int k = 0; k < n; ++k)
        pairing0.add(path.states.front()[static_cast<std::size_t>(k)] *
                     phi.values[static_cast<std::size_t>(k)]);
    const double base = pairing0.value() / n;

    double prev_g = integrand(path.states.front());
    out[0] = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
        const double g = integrand(path.states[j]);
        integral.add(0.5 * (path.times[j] - path.times[j - 1]) * (prev_g + g));
        prev_g = g;
        KahanSum pairing;
        for (int k = 0; k < n; ++k)
            pairing.add(path.states[j][static_cast<std::size_t>(k)] *
                        phi.values[static_cast<std::size_t>(k)]);
        out[j] = pairing.value() / n - base - integral.value();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Realized quadratic variation
// ---------------------------------------------------------------------------

inline double realized_qv(const std::vector<double>& series) {
    KahanSum s;
    for (std::size_t j = 1; j < series.size(); ++j) s.add(sqr(series[j] - series[j - 1]));
    return s.value();
}

inline double realized_cross_qv(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("realized_cross_qv: series lengths differ");
    KahanSum s;
    for (std::size_t j = 1; j < a.size(); ++j)
        s.add((a[j] - a[j - 1]) * (b[j] - b[j - 1]));
    return s.value();
}

// ---------------------------------------------------------------------------
// Quadratic-variation identity
// ---------------------------------------------------------------------------

struct QvIdentityReport {
    bool degenerate = false;     // target identically ~0: ratio undefined
    double pooled_ratio = 0.0;   // Σ realized / Σ target
    double ci_lo = 0.0, ci_hi = 0.0;  // 95% delta-method interval for the ratio
    double pooled_realized = 0.0, pooled_target = 0.0;
    std::size_t paths = 0;

    [[nodiscard]] json to_json() const {
        return json{{"degenerate", degenerate},   {"pooled_ratio", pooled_ratio},
                    {"ci_lo", ci_lo},             {"ci_hi", ci_hi},
                    {"pooled_realized", pooled_realized}, {"pooled_target", pooled_target},
                    {"paths", paths}};
    }
};

/// Compares the realized QV of the residual M against the spectral target
/// ∫ Σ_j μ_j²⟨𝟙{x_s>δ}φ, e_j⟩² ds, path by path with the path's own
/// indicator trajectory, pooled over the ensemble with a delta-method CI.
inline QvIdentityReport qv_identity_check(const std::vector<PathRecord>& ensemble, int alpha0,
                                          const GridFunction& phi, const EigenSpec& spec,
                                          const GridFunction& lambda_n, const DriftSpec& drift,
                                          double delta_diag) {
    if (ensemble.empty()) throw std::invalid_argument("qv_identity_check: empty ensemble");
    const int n = phi.n;
    QvIdentityReport rep;
    rep.paths = ensemble.size();

    std::vector<double> realized(ensemble.size()), target(ensemble.size());
    GridFunction ind(n, std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (std::size_t p = 0; p < ensemble.size(); ++p) {
        const PathRecord& rec = ensemble[p];
        realized[p] = realized_qv(
            martingale_residual_path(rec, alpha0, phi, lambda_n, drift, delta_diag));
        KahanSum integral;
        double prev = 0.0;
        for (std::size_t j = 0; j < rec.times.size(); ++j) {
            for (int k = 0; k < n; ++k)
                ind.values[static_cast<std::size_t>(k)] =
                    (rec.states[j][static_cast<std::size_t>(k)] > delta_diag) ? 1.0 : 0.0;
            const double g = qv_target_density(spec, ind, phi);
            if (j > 0) integral.add(0.5 * (rec.times[j] - rec.times[j - 1]) * (prev + g));
            prev = g;
        }
        target[p] = integral.value();
    }

    rep.pooled_realized = ksum(realized);
    rep.pooled_target = ksum(target);
    if (!(rep.pooled_target > 0.0)) {
        rep.degenerate = true;
        return rep;
    }
    const double mr = rep.pooled_realized / rep.paths;
    const double mt = rep.pooled_target / rep.paths;
    rep.pooled_ratio = mr / mt;

    // Delta method for the ratio of means: Var(R)/R² ≈ (V_r/m_r² + V_t/m_t²
    // − 2C_rt/(m_r·m_t))/P.
    KahanSum vr, vt, cc;
    for (std::size_t p = 0; p < ensemble.size(); ++p) {
        vr.add(sqr(realized[p] - mr));
        vt.add(sqr(target[p] - mt));
        cc.add((realized[p] - mr) * (target[p] - mt));
    }
    const double pd = static_cast<double>(rep.paths) *
                      std::max<double>(1.0, static_cast<double>(rep.paths) - 1.0);
    double rel_var = vr.value() / (pd * sqr(mr)) + vt.value() / (pd * sqr(mt)) -
                     2.0 * cc.value() / (pd * mr * mt);
    rel_var = std::max(rel_var, 0.0);
    const double half = 1.959963984540054 * rep.pooled_ratio * std::sqrt(rel_var);
    rep.ci_lo = rep.pooled_ratio - half;
    rep.ci_hi = rep.pooled_ratio + half;
    return rep;
}

// ---------------------------------------------------------------------------
// QV support property
// ---------------------------------------------------------------------------

struct SupportRow {
    double delta = 0.0;
    double fraction = 0.0;  // share of realized QV accrued while x ≤ delta
};

/// Per threshold, the share of the series' realized QV accrued from
/// increments whose left endpoint lies at or below the threshold. A
/// nonnegative semimartingale accrues no QV on its zero set, so these
/// fractions must vanish as δ and the step size shrink.
inline std::vector<SupportRow> qv_support_fractions(const std::vector<double>& x,
                                                    const std::vector<double>& deltas) {
    std::vector<SupportRow> rows;
    rows.reserve(deltas.size());
    const double total = realized_qv(x);
    for (double d : deltas) {
        KahanSum below;
        for (std::size_t j = 1; j < x.size(); ++j)
            if (x[j - 1] <= d) below.add(sqr(x[j] - x[j - 1]));
        rows.push_back({d, total > 0.0 ? below.value() / total : 0.0});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Boundary bookkeeping defect
// ---------------------------------------------------------------------------

/// Max over the recorded grid of |a(t) − λ·(t − [η]_t/q)| where a is the
/// accumulated boundary drift, [η] the realized QV of the applied noise, and
/// q the applied variance rate. For the smoothed scheme the two bookkeeping
/// channels are tied by construction, so the defect is pure estimator noise
/// and shrinks in mean as the step size is refined.
inline double boundary_clock_defect(const std::vector<double>& times,
                                    const std::vector<double>& a,
                                    const std::vector<double>& qv_eta, double lambda_k,
                                    double q_rate) {
    if (!(q_rate > 0.0))
        throw std::invalid_argument("boundary_clock_defect: q_rate must be > 0");
    if (times.size() != a.size() || times.size() != qv_eta.size())
        throw std::invalid_argument("boundary_clock_defect: series lengths differ");
    double worst = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j)
        worst = std::max(worst, std::abs(a[j] - lambda_k * (times[j] - qv_eta[j] / q_rate)));
    return worst;
}

// ---------------------------------------------------------------------------
// Occupation time
// ---------------------------------------------------------------------------

/// Left-endpoint occupation measure of {x ≤ delta} on a uniform grid.
inline double occupation_time(const std::vector<double>& times, const std::vector<double>& x,
                              double delta) {
    if (delta < 0.0) throw std::invalid_argument("occupation_time: delta must be >= 0");
    if (times.size() != x.size()) throw std::invalid_argument("occupation_time: length mismatch");
    if (times.size() < 2) return 0.0;
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    long hits = 0;
    for (std::size_t j = 0; j + 1 < x.size(); ++j)
        if (x[j] <= delta) ++hits;
    return dt * static_cast<double>(hits);
}

struct StickinessReport {
    double delta = 0.0;
    double horizon = 0.0;
    std::size_t paths = 0;
    double mean = 0.0;
    double stderr_mean = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // 95%

    [[nodiscard]] json to_json() const {
        return json{{"delta", delta},   {"horizon", horizon}, {"paths", paths},
                    {"mean", mean},     {"stderr", stderr_mean},
                    {"ci_lo", ci_lo},   {"ci_hi", ci_hi}};
    }
};

inline StickinessReport make_stickiness_report(const std::vector<double>& per_path_occupation,
                                               double delta, double horizon) {
    if (per_path_occupation.empty())
        throw std::invalid_argument("make_stickiness_report: no paths");
    for (double occ : per_path_occupation)
        if (occ < 0.0 || occ > horizon * (1.0 + 1e-12))
            throw std::invalid_argument("make_stickiness_report: occupation outside [0,T]");
    StickinessReport rep;
    rep.delta = delta;
    rep.horizon = horizon;
    rep.paths = per_path_occupation.size();
    rep.mean = mean_of(per_path_occupation);
    rep.stderr_mean = per_path_occupation.size() > 1
                          ? stddev_of(per_path_occupation) /
                                std::sqrt(static_cast<double>(per_path_occupation.size()))
                          : 0.0;
    rep.ci_lo = rep.mean - 1.959963984540054 * rep.stderr_mean;
    rep.ci_hi = rep.mean + 1.959963984540054 * rep.stderr_mean;
    return rep;
}

// ---------------------------------------------------------------------------
// Two-sample comparison and Z-scores
// ---------------------------------------------------------------------------

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

namespace detail {

/// Asymptotic Kolmogorov tail Q(λ) = 2Σ(−1)^{j−1}exp(−2j²λ²).
inline double ks_tail(double lam) {
    if (lam < 1e-6) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * sqr(static_cast<double>(j) * lam));
        sum += sign * term;
        if (term < 1e-18) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace detail

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value. Ties are
/// handled by advancing both empirical CDFs through every run of equal
/// values before the gap is measured.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    d = std::max(d, 1.0 - static_cast<double>(std::min(i / na, j / nb)));
    KsResult res;
    res.statistic = d;
    const double ne = std::sqrt(na * nb / (na + nb));
    res.p_value = detail::ks_tail((ne + 0.12 + 0.11 / ne) * d);
    return res;
}

/// Per-time Z-scores of ensemble-mean increments: Z(t) = mean/(sd/√P).
/// Requires at least 30 paths; a time with zero spread and zero mean scores
/// 0, zero spread with nonzero mean is rejected as degenerate input.
inline std::vector<double> ensemble_ztest(const std::vector<std::vector<double>>& increments) {
    if (increments.size() < 30)
        throw std::invalid_argument("ensemble_ztest: need at least 30 paths");
    const std::size_t m = increments.front().size();
    for (const auto& row : increments)
        if (row.size() != m) throw std::invalid_argument("ensemble_ztest: ragged increments");
    const double paths = static_cast<double>(increments.size());
    std::vector<double> z(m, 0.0);
    std::vector<double> col(increments.size());
    for (std::size_t t = 0; t < m; ++t) {
        for (std::size_t p = 0; p < increments.size(); ++p) col[p] = increments[p][t];
        const double mu = mean_of(col);
        const double sd = stddev_of(col);
        if (sd == 0.0) {
            if (mu != 0.0)
                throw std::domain_error("ensemble_ztest: zero spread with nonzero mean");
            z[t] = 0.0;
        } else {
            z[t] = mu / (sd / std::sqrt(paths));
        }
    }
    return z;
}

// ---------------------------------------------------------------------------
// Assembled martingale report
// ---------------------------------------------------------------------------

struct MartingaleTestReport {
    std::string phi_label;
    double delta_diag = 0.0;
    std::size_t paths = 0;
    std::vector<double> times;     // increment endpoints t_1.. (recorded grid)
    std::vector<double> z_scores;  // Z of mean residual increments per time
    double max_abs_z = 0.0;
    double frac_abs_z_below_3 = 0.0;
    QvIdentityReport qv;

    [[nodiscard]] json to_json() const {
        return json{{"phi", phi_label},
                    {"delta_diag", delta_diag},
                    {"paths", paths},
                    {"times", times},
                    {"z_scores", z_scores},
                    {"max_abs_z", max_abs_z},
                    {"frac_abs_z_below_3", frac_abs_z_below_3},
                    {"qv_identity", qv.to_json()}};
    }
};

/// Full residual-and-QV analysis of one recorded ensemble against one test
/// function. `delta_diag` < 0 selects the default threshold from the applied
/// noise rate and the integrator step.
inline MartingaleTestReport run_martingale_test(const SimulationResult& sim, int alpha0,
                                                const GridFunction& phi, std::string phi_label,
                                                const EigenSpec& spec,
                                                const GridFunction& lambda_n,
                                                const DriftSpec& drift,
                                                double delta_diag = -1.0) {
    if (sim.paths.empty()) throw std::invalid_argument("run_martingale_test: empty ensemble");
    MartingaleTestReport rep;
    rep.phi_label = std::move(phi_label);
    rep.paths = sim.paths.size();
    rep.delta_diag = delta_diag >= 0.0
                         ? delta_diag
                         : default_delta_diag(applied_rate_max(spec, sim.n), sim.dt);

    const std::size_t m = sim.paths.front().times.size();
    std::vector<std::vector<double>> increments(sim.paths.size());
    for (std::size_t p = 0; p < sim.paths.size(); ++p) {
        const std::vector<double> res = martingale_residual_path(sim.paths[p], alpha0, phi,
                                                                 lambda_n, drift, rep.delta_diag);
        if (res.size() != m)
            throw std::invalid_argument("run_martingale_test: ragged ensemble (aborted paths?)");
        increments[p].resize(m - 1);
        for (std::size_t j = 1; j < m; ++j) increments[p][j - 1] = res[j] - res[j - 1];
    }
    rep.times.assign(sim.paths.front().times.begin() + 1, sim.paths.front().times.end());
    rep.z_scores = ensemble_ztest(increments);
    long ok = 0;
    for (double zv : rep.z_scores) {
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(zv));
        if (std::abs(zv) < 3.0) ++ok;
    }
    rep.frac_abs_z_below_3 =
        rep.z_scores.empty() ? 1.0 : static_cast<double>(ok) / rep.z_scores.size();
    rep.qv = qv_identity_check(sim.paths, alpha0, phi, spec, lambda_n, drift, rep.delta_diag);
    return rep;
}

/// Sensitivity of the pooled QV ratio to the diagnostic threshold.
inline std::vector<std::pair<double, double>> delta_diag_sensitivity(
    const SimulationResult& sim, int alpha0, const GridFunction& phi, const EigenSpec& spec,
    const GridFunction& lambda_n, const DriftSpec& drift, const std::vector<double>& deltas) {
    std::vector<std::pair<double, double>> rows;
    rows.reserve(deltas.size());
    for (double d : deltas) {
        const QvIdentityReport rep =
            qv_identity_check(sim.paths, alpha0, phi, spec, lambda_n, drift, d);
        rows.emplace_back(d, rep.degenerate ? 0.0 : rep.pooled_ratio);
    }
    return rows;
}

}  // namespace stickyheat
