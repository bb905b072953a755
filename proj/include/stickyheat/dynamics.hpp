// Time integrators for the sticky 1-D boundary diffusion and the n-particle
// lattice system, in hard-indicator and smoothed-indicator variants, plus an
// independent time-change construction of the 1-D law used as a
// distributional oracle.
//
// Noise normalization (read this before touching the steppers). The noise
// module hands increments dw with covariance qⁿ·dt. The lattice SDE drives
// cell k with amplitude √n·dw_k — variance rate n·q_{k,k} — and that √n is
// applied HERE, in exactly one place (SystemStepper::noise_amp_). Folding it
// into the synthesis matrix instead would silently change the meaning of
// sample_increments for every consumer; a unit test pins the per-step applied
// variance to n·q_{k,k}·dt.
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stickyheat/common.hpp"
#include "stickyheat/gauss_legendre.hpp"
#include "stickyheat/lattice.hpp"
#include "stickyheat/noise.hpp"

namespace stickyheat {

// ---------------------------------------------------------------------------
// Scheme parameters and drift families
// ---------------------------------------------------------------------------

struct SchemeParams {
    double dt = 1e-3;
    double epsilon = 0.0;          // smoothing width; regularized schemes only
    double theta_implicit = 0.5;   // Laplacian implicitness weight
    bool clamp_negatives = true;
    double indicator_threshold = 0.0;  // δ_ind for the on/off indicators
    double stability_factor = 0.5;     // explicit-scheme dt ≤ sf/n² guard
};

/// Throws unless the parameters are usable for the given lattice size.
inline void validate_scheme_params(const SchemeParams& p, int n, bool regularized) {
    if (!(p.dt > 0.0)) throw std::invalid_argument("SchemeParams: dt must be > 0");
    if (!(p.theta_implicit >= 0.0 && p.theta_implicit <= 1.0))
        throw std::invalid_argument("SchemeParams: theta_implicit must lie in [0,1]");
    if (regularized && !(p.epsilon > 0.0))
        throw std::invalid_argument("SchemeParams: epsilon must be > 0 for regularized schemes");
    if (p.indicator_threshold < 0.0)
        throw std::invalid_argument("SchemeParams: indicator_threshold must be >= 0");
    if (p.theta_implicit == 0.0 && n >= 1) {
        const double limit = p.stability_factor / (static_cast<double>(n) * n);
        if (p.dt > limit)
            throw std::invalid_argument("SchemeParams: explicit scheme needs dt <= " +
                                        format_double(limit) + " at n = " + std::to_string(n));
    }
}

/// Reaction drift f: [0,∞)→[0,∞) with f(0)=0 and declared linear growth
/// f(x) ≤ A + B·x. Tabulated drifts sample uniformly on [0, x_max] and hold
/// the last value beyond (bounded, hence linear growth).
class DriftSpec {
public:
    enum class Kind { Zero, Linear, SaturatedLinear, Tabulated };

    static DriftSpec zero() { return DriftSpec(Kind::Zero); }
    static DriftSpec linear(double c) {
        DriftSpec d(Kind::Linear);
        d.c_ = c;
        d.growth_b_ = c;
        return d;
    }
    static DriftSpec saturated_linear(double c, double cap) {
        DriftSpec d(Kind::SaturatedLinear);
        d.c_ = c;
        d.cap_ = cap;
        d.growth_b_ = c;
        return d;
    }
    static DriftSpec tabulated(std::vector<double> values, double x_max) {
        if (values.size() < 2 || !(x_max > 0.0))
            throw std::invalid_argument("DriftSpec::tabulated: need >= 2 samples and x_max > 0");
        DriftSpec d(Kind::Tabulated);
        d.table_ = std::move(values);
        d.x_max_ = x_max;
        for (double v : d.table_) d.growth_a_ = std::max(d.growth_a_, v);
        return d;
    }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] bool is_zero() const { return kind_ == Kind::Zero; }
    [[nodiscard]] double growth_a() const { return growth_a_; }
    [[nodiscard]] double growth_b() const { return growth_b_; }

    [[nodiscard]] double operator()(double x) const {
        switch (kind_) {
            case Kind::Zero:
                return 0.0;
            case Kind::Linear:
                return c_ * x;
            case Kind::SaturatedLinear:
                return c_ * std::min(x, cap_);
            case Kind::Tabulated: {
                const std::size_t m = table_.size();
                double s = std::clamp(x / x_max_, 0.0, 1.0) * (m - 1);
                const std::size_t i = std::min(static_cast<std::size_t>(s), m - 2);
                const double w = s - static_cast<double>(i);
                return (1.0 - w) * table_[i] + w * table_[i + 1];
            }
        }
        return 0.0;  // unreachable
    }

    /// Structural checks: f(0)=0 to 1e-14, f ≥ 0 on a sample grid, coefficients
    /// nonnegative. Returns issues; empty means valid.
    [[nodiscard]] std::vector<std::string> validate() const {
        std::vector<std::string> issues;
        if (std::abs((*this)(0.0)) > 1e-14) issues.push_back("drift: f(0) must be 0");
        if (kind_ == Kind::Linear || kind_ == Kind::SaturatedLinear) {
            if (c_ < 0.0) issues.push_back("drift: slope must be >= 0");
            if (kind_ == Kind::SaturatedLinear && !(cap_ > 0.0))
                issues.push_back("drift: saturation cap must be > 0");
        }
        for (int i = 0; i <= 1000; ++i) {
            const double x = (kind_ == Kind::Tabulated ? x_max_ : 10.0) * i / 1000.0;
            if ((*this)(x) < 0.0) {
                issues.push_back("drift: negative value at x = " + format_double(x));
                break;
            }
        }
        return issues;
    }

    [[nodiscard]] json to_json() const {
        switch (kind_) {
            case Kind::Zero:
                return json{{"type", "zero"}};
            case Kind::Linear:
                return json{{"type", "linear"}, {"c", c_}};
            case Kind::SaturatedLinear:
                return json{{"type", "saturated_linear"}, {"c", c_}, {"cap", cap_}};
            case Kind::Tabulated:
                return json{{"type", "tabulated"}, {"values", table_}, {"x_max", x_max_}};
        }
        return json{};
    }

    static DriftSpec from_json(const json& j) {
        const std::string type = j.at("type").get<std::string>();
        if (type == "zero") return zero();
        if (type == "linear") return linear(j.at("c").get<double>());
        if (type == "saturated_linear")
            return saturated_linear(j.at("c").get<double>(), j.at("cap").get<double>());
        if (type == "tabulated")
            return tabulated(j.at("values").get<std::vector<double>>(),
                             j.at("x_max").get<double>());
        throw std::invalid_argument("DriftSpec::from_json: unknown type '" + type + "'");
    }

private:
    explicit DriftSpec(Kind k) : kind_(k) {}
    Kind kind_;
    double c_ = 0.0, cap_ = 0.0, x_max_ = 1.0;
    double growth_a_ = 0.0, growth_b_ = 0.0;
    std::vector<double> table_;
};

// ---------------------------------------------------------------------------
// Regularization primitives
// ---------------------------------------------------------------------------

/// C¹ smoothstep ramp: 0 below 0, 3s²−2s³ on [0,1], 1 above, s = x/epsilon.
inline double kappa_eps(double x, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("kappa_eps: epsilon must be > 0");
    const double s = x / epsilon;
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * (3.0 - 2.0 * s);
}

/// Drift smoothing by the C¹ bump θ(z) = (15/16)(1−z²)² on [−1,1], scaled to
/// width epsilon and restricted to y ≥ 0: returns ∫ θ_ε(x−y)·f(y) dy.
/// A single 32-point rule is exact for every polynomial drift in the family.
inline double mollify_drift(const DriftSpec& drift, double epsilon, double x) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("mollify_drift: epsilon must be > 0");
    if (drift.is_zero()) return 0.0;
    const double lo = std::max(0.0, x - epsilon);
    const double hi = x + epsilon;
    if (hi <= lo) return 0.0;
    const double value = integrate_gl(
        [&](double y) {
            const double z = (x - y) / epsilon;
            const double t = 1.0 - z * z;
            return (t > 0.0 ? (15.0 / 16.0) * t * t / epsilon : 0.0) * drift(y);
        },
        lo, hi, 32);
    return std::max(0.0, value);
}

// ---------------------------------------------------------------------------
// Scalar boundary-diffusion steppers
// ---------------------------------------------------------------------------

/// Hard-indicator Euler step: x' = max(0, x + λ𝟙{x≤δ}dt + 𝟙{x>δ}σ·dw).
inline double step_srbm_hard(double x, double lambda, double sigma, double dw,
                             const SchemeParams& p) {
    const double delta = p.indicator_threshold;
    double xp = x;
    xp += (x <= delta) ? lambda * p.dt : 0.0;
    xp += (x > delta) ? sigma * dw : 0.0;
    if (p.clamp_negatives && xp < 0.0) xp = 0.0;
    return xp;
}

/// Smoothed-indicator Euler step: x' = max(0, x + λ(1−κ²)dt + κσ·dw).
inline double step_srbm_regularized(double x, double lambda, double sigma, double dw,
                                    const SchemeParams& p) {
    const double kap = kappa_eps(x, p.epsilon);
    double xp = x + lambda * (1.0 - kap * kap) * p.dt + kap * sigma * dw;
    if (p.clamp_negatives && xp < 0.0) xp = 0.0;
    return xp;
}

/// One recorded scalar trajectory.
struct ScalarPathRecord {
    std::vector<double> times;
    std::vector<double> x;
    std::uint64_t master_seed = 0;
    std::uint64_t path = 0;
    std::string scheme_tag;
    // Boundary bookkeeping at step resolution (recorded at the same stride):
    // a(t)    — accumulated sticky drift ∫λ(1−κ²)ds (hard: ∫λ𝟙 ds),
    // eta(t)  — accumulated applied noise ∫κσ dw,
    // qv_eta  — running per-step quadratic variation Σ(Δη)².
    std::vector<double> book_a, book_eta, book_qv;
};

namespace detail {

inline void record_scalar(ScalarPathRecord& rec, double t, double x, bool book, double a,
                          double eta, double qv) {
    rec.times.push_back(t);
    rec.x.push_back(x);
    if (book) {
        rec.book_a.push_back(a);
        rec.book_eta.push_back(eta);
        rec.book_qv.push_back(qv);
    }
}

}  // namespace detail

/// Run one scalar path with either stepper, recording every `record_every`
/// steps (the final step is always recorded). Bookkeeping accumulates at
/// full step resolution regardless of the recording stride.
inline ScalarPathRecord run_srbm_path(bool regularized, double x0, double lambda, double sigma,
                                      double T, const SchemeParams& p, const SeedPolicy& seeds,
                                      std::uint64_t path, int record_every = 1,
                                      bool bookkeeping = false,
                                      NoiseStream stream = NoiseStream::dynamics) {
    if (x0 < 0.0) throw std::invalid_argument("run_srbm_path: x0 must be >= 0");
    validate_scheme_params(p, 1, regularized);
    const auto steps = static_cast<std::uint64_t>(std::llround(T / p.dt));
    if (steps == 0) throw std::invalid_argument("run_srbm_path: T/dt rounds to zero steps");
    ScalarPathRecord rec;
    rec.master_seed = seeds.master_seed;
    rec.path = path;
    rec.scheme_tag = regularized ? "srbm_regularized" : "srbm_hard";
    const double root_dt = std::sqrt(p.dt);
    double x = x0, a = 0.0, eta = 0.0, qv = 0.0;
    detail::record_scalar(rec, 0.0, x, bookkeeping, a, eta, qv);
    for (std::uint64_t i = 0; i < steps; ++i) {
        const double dw = root_dt * normal_draw(seeds, path, i, 0, stream);
        if (bookkeeping) {
            double applied, drift_part;
            if (regularized) {
                const double kap = kappa_eps(x, p.epsilon);
                drift_part = lambda * (1.0 - kap * kap) * p.dt;
                applied = kap * sigma * dw;
            } else {
                drift_part = (x <= p.indicator_threshold) ? lambda * p.dt : 0.0;
                applied = (x > p.indicator_threshold) ? sigma * dw : 0.0;
            }
            a += drift_part;
            eta += applied;
            qv += applied * applied;
        }
        x = regularized ? step_srbm_regularized(x, lambda, sigma, dw, p)
                        : step_srbm_hard(x, lambda, sigma, dw, p);
        if ((i + 1) % static_cast<std::uint64_t>(record_every) == 0 || i + 1 == steps)
            detail::record_scalar(rec, (i + 1) * p.dt, x, bookkeeping, a, eta, qv);
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Time-change oracle
// ---------------------------------------------------------------------------

/// Independent construction of the sticky boundary diffusion: simulate the
/// reflected driver r(s) = |x0/σ + B(s)| exactly (folded-normal transitions),
/// estimate its boundary local time ℓ(s) by the band-occupation rule
/// ℓ ≈ (1/2ε)·Leb{r ≤ ε} with ε = 4√dt, slow the clock through
/// A(s) = s + (σ/λ)·ℓ(s), and read x(t) = σ·r(A⁻¹(t)) on the output grid.
///
/// The constant σ/λ comes from drift matching: with r = r₀ + β + ℓ (symmetric
/// local-time convention, the one the band estimator realizes), time spent at
/// the boundary per unit ℓ is the A-slope excess c, and the recovered drift is
/// (σ/c)·𝟙{x=0}; matching λ forces c = σ/λ. Validated against the smoothed
/// scheme in the acceptance suite before any oracle-based gate runs.
///
/// Output representation: a driver step inside the band carries dt of diffusing
/// time plus (slope−1)·dt of boundary time injected by the slowed clock. Output
/// times landing in the boundary portion (placed at the start of the step) emit
/// x = 0 exactly; the rest interpolate σ·r across the diffusing portion. Without
/// this split the stuck time would surface as spurious values in (0, σ·ε] and
/// any occupation count below the band width would be biased low.
inline ScalarPathRecord srbm_time_change_oracle(double lambda, double sigma, double x0, double T,
                                                double dt, const SeedPolicy& seeds,
                                                std::uint64_t path, int record_every = 1) {
    if (!(lambda > 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("srbm_time_change_oracle: lambda and sigma must be > 0");
    if (x0 < 0.0) throw std::invalid_argument("srbm_time_change_oracle: x0 must be >= 0");
    if (!(dt > 0.0 && T > 0.0))
        throw std::invalid_argument("srbm_time_change_oracle: need T > 0 and dt > 0");

    const auto steps = static_cast<std::uint64_t>(std::llround(T / dt));
    if (steps == 0) throw std::invalid_argument("srbm_time_change_oracle: T/dt rounds to zero");
    const double root_dt = std::sqrt(dt);
    const double band = 4.0 * root_dt;           // local-time estimator width
    const double ell_rate = 1.0 / (2.0 * band);  // dℓ per unit time inside the band
    const double c = sigma / lambda;             // clock excess per unit local time

    // March the reflected driver on the s-grid; A is piecewise linear with
    // slope 1 + c·ell_rate inside the band. A(s) ≥ s, so the s-horizon T
    // always covers the t-horizon T.
    std::vector<double> r(steps + 1), a(steps + 1);
    r[0] = x0 / sigma;
    a[0] = 0.0;
    for (std::uint64_t i = 0; i < steps; ++i) {
        const double slope = 1.0 + (r[i] <= band ? c * ell_rate : 0.0);
        a[i + 1] = a[i] + slope * dt;
        const double db = root_dt * normal_draw(seeds, path, i, 0, NoiseStream::oracle);
        r[i + 1] = std::abs(r[i] + db);
    }

    ScalarPathRecord rec;
    rec.master_seed = seeds.master_seed;
    rec.path = path;
    rec.scheme_tag = "srbm_time_change_oracle";
    rec.times.push_back(0.0);
    rec.x.push_back(sigma * r[0]);
    std::uint64_t i = 0;
    for (std::uint64_t j = 1; j <= steps; ++j) {
        const double t = j * dt;
        while (i + 1 < steps && a[i + 1] < t) ++i;
        const double stuck = std::max(0.0, (a[i + 1] - a[i]) - dt);
        const double into = t - a[i];
        double xval;
        if (into < stuck) {
            xval = 0.0;
        } else {
            const double w = std::clamp((into - stuck) / dt, 0.0, 1.0);
            xval = sigma * (r[i] + (r[i + 1] - r[i]) * w);
        }
        if (j % static_cast<std::uint64_t>(record_every) == 0 || j == steps) {
            rec.times.push_back(t);
            rec.x.push_back(xval);
        }
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Lattice system stepper
// ---------------------------------------------------------------------------

/// Per-step discretization events.
struct StepStats {
    long clamp_events = 0;
    double clamped_mass = 0.0;
};

/// θ-scheme integrator for the lattice system with frozen coefficients. The
/// tridiagonal (I − θ·dt·½Δ) factorization is precomputed once; each step is
/// one O(n) substitution. Reaction, boundary drift, and noise are explicit.
class SystemStepper {
public:
    SystemStepper(int n, int alpha0, const SchemeParams& params, bool regularized,
                  std::vector<double> lambda_cells, DriftSpec drift)
        : n_(n),
          alpha0_(alpha0),
          p_(params),
          regularized_(regularized),
          lambda_(std::move(lambda_cells)),
          drift_(std::move(drift)),
          noise_amp_(std::sqrt(static_cast<double>(n))) {
        if (n_ < 1) throw std::invalid_argument("SystemStepper: n must be >= 1");
        if (alpha0_ != 0 && alpha0_ != 1)
            throw std::invalid_argument("SystemStepper: alpha0 must be 0 or 1");
        if (static_cast<int>(lambda_.size()) != n_)
            throw std::invalid_argument("SystemStepper: lambda_cells length must be n");
        validate_scheme_params(p_, n_, regularized_);

        // Assemble and factor M = I − θ·dt/2·Δ (constant, symmetric, strictly
        // diagonally dominant tridiagonal; Thomas elimination is stable).
        const double cfac = p_.theta_implicit * p_.dt * 0.5;
        const double n2 = static_cast<double>(n_) * n_;
        off_ = -cfac * n2;
        std::vector<double> diag(static_cast<std::size_t>(n_));
        for (int k = 0; k < n_; ++k) {
            double dd = -2.0;
            if (k == 0) dd += alpha0_;
            if (k == n_ - 1) dd += alpha0_;
            if (n_ == 1) dd = -2.0 + 2.0 * alpha0_;
            diag[static_cast<std::size_t>(k)] = 1.0 - cfac * n2 * dd;
        }
        cp_.resize(static_cast<std::size_t>(n_), 0.0);
        inv_denom_.resize(static_cast<std::size_t>(n_), 0.0);
        double denom = diag[0];
        inv_denom_[0] = 1.0 / denom;
        for (int k = 1; k < n_; ++k) {
            cp_[static_cast<std::size_t>(k - 1)] = off_ * inv_denom_[static_cast<std::size_t>(k - 1)];
            denom = diag[static_cast<std::size_t>(k)] - off_ * cp_[static_cast<std::size_t>(k - 1)];
            inv_denom_[static_cast<std::size_t>(k)] = 1.0 / denom;
        }
        identity_solve_ = (cfac == 0.0) || (n_ == 1 && alpha0_ == 1);
    }

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] bool regularized() const { return regularized_; }
    [[nodiscard]] const SchemeParams& params() const { return p_; }
    [[nodiscard]] double noise_amplitude() const { return noise_amp_; }

    /// Advance one step. `dw` carries covariance-qⁿ·dt increments from the
    /// noise module; the SDE amplitude √n is applied here. `probe_cell` < 0
    /// disables bookkeeping; otherwise the three probe outputs accumulate the
    /// designated cell's sticky drift, applied noise, and its per-step QV.
    void step(const std::vector<double>& x, const std::vector<double>& dw,
              std::vector<double>& out, StepStats& stats, int probe_cell = -1,
              double* probe_a = nullptr, double* probe_eta = nullptr,
              double* probe_qv = nullptr) const {
        const double delta = p_.indicator_threshold;
        const double dt = p_.dt;
        const double expl = (1.0 - p_.theta_implicit) * dt * 0.5;
        const double n2 = static_cast<double>(n_) * n_;

        // Right-hand side: x + (1−θ)dt·½Δx + reaction dt + boundary drift dt
        // + masked noise.
        for (int k = 0; k < n_; ++k) {
            const double xk = x[static_cast<std::size_t>(k)];
            const double left = (k > 0) ? x[static_cast<std::size_t>(k - 1)] : alpha0_ * x[0];
            const double right = (k < n_ - 1) ? x[static_cast<std::size_t>(k + 1)]
                                              : alpha0_ * x[static_cast<std::size_t>(n_ - 1)];
            const double lap = n2 * (right + left - 2.0 * xk);

            double sticky, noise;
            if (regularized_) {
                const double kap = kappa_eps(xk, p_.epsilon);
                sticky = lambda_[static_cast<std::size_t>(k)] * (1.0 - kap * kap) * dt;
                noise = kap * noise_amp_ * dw[static_cast<std::size_t>(k)];
            } else {
                sticky = (xk <= delta) ? lambda_[static_cast<std::size_t>(k)] * dt : 0.0;
                noise = (xk > delta) ? noise_amp_ * dw[static_cast<std::size_t>(k)] : 0.0;
            }
            const double reaction =
                (regularized_ ? mollify_drift(drift_, p_.epsilon, xk) : drift_(xk)) * dt;

            if (k == probe_cell) {
                *probe_a += sticky;
                *probe_eta += noise;
                *probe_qv += noise * noise;
            }
            out[static_cast<std::size_t>(k)] = xk + expl * lap + sticky + reaction + noise;
        }

        // Implicit Laplacian solve (precomputed Thomas factorization).
        if (!identity_solve_) {
            out[0] *= inv_denom_[0];
            for (int k = 1; k < n_; ++k)
                out[static_cast<std::size_t>(k)] =
                    (out[static_cast<std::size_t>(k)] - off_ * out[static_cast<std::size_t>(k - 1)]) *
                    inv_denom_[static_cast<std::size_t>(k)];
            for (int k = n_ - 2; k >= 0; --k)
                out[static_cast<std::size_t>(k)] -=
                    cp_[static_cast<std::size_t>(k)] * out[static_cast<std::size_t>(k + 1)];
        }

        if (p_.clamp_negatives)
            for (int k = 0; k < n_; ++k)
                if (out[static_cast<std::size_t>(k)] < 0.0) {
                    stats.clamp_events += 1;
                    stats.clamped_mass += -out[static_cast<std::size_t>(k)];
                    out[static_cast<std::size_t>(k)] = 0.0;
                }
    }

private:
    int n_;
    int alpha0_;
    SchemeParams p_;
    bool regularized_;
    std::vector<double> lambda_;
    DriftSpec drift_;
    double noise_amp_;
    double off_ = 0.0;
    std::vector<double> cp_, inv_denom_;
    bool identity_solve_ = false;
};

/// Single-step convenience wrappers matching the stepper pair.
inline LatticeState step_system_hard(const LatticeState& s, const GridFunction& lambda_n,
                                     const DriftSpec& drift, const std::vector<double>& dw,
                                     const SchemeParams& p) {
    if (lambda_n.n != s.n) throw std::invalid_argument("step_system_hard: lambda grid mismatch");
    SystemStepper st(s.n, s.alpha0, p, false, lambda_n.values, drift);
    std::vector<double> out(static_cast<std::size_t>(s.n));
    StepStats stats;
    st.step(s.x, dw, out, stats);
    return LatticeState(s.n, std::move(out), s.alpha0);
}

inline LatticeState step_system_regularized(const LatticeState& s, const GridFunction& lambda_n,
                                            const DriftSpec& drift, const std::vector<double>& dw,
                                            const SchemeParams& p) {
    if (lambda_n.n != s.n)
        throw std::invalid_argument("step_system_regularized: lambda grid mismatch");
    SystemStepper st(s.n, s.alpha0, p, true, lambda_n.values, drift);
    std::vector<double> out(static_cast<std::size_t>(s.n));
    StepStats stats;
    st.step(s.x, dw, out, stats);
    return LatticeState(s.n, std::move(out), s.alpha0);
}

// ---------------------------------------------------------------------------
// Ensemble simulation
// ---------------------------------------------------------------------------

/// Fully compiled simulation plan (the config layer lowers user-facing
/// scenarios to this; nothing here re-derives coefficients).
struct SimPlan {
    int n = 1;
    int alpha0 = 1;
    double T = 1.0;
    SchemeParams params;
    bool regularized = false;
    std::vector<double> lambda_cells;
    DriftSpec drift = DriftSpec::zero();
    NoiseFactor factor;
    std::vector<double> g_cells;
    int paths = 1;
    std::uint64_t path_offset = 0;  // global index of the first path (batching)
    SeedPolicy seeds;
    int record_every = 1;
    double overflow_guard = 1e12;
    int bookkeeping_cell = -1;  // 0-based cell index; -1 disables
    int threads = 1;
    std::string scheme_tag;  // defaults to system_hard / system_regularized
};

/// One recorded lattice trajectory.
struct PathRecord {
    std::uint64_t path = 0;
    std::uint64_t master_seed = 0;
    std::string scheme_tag;
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    bool aborted = false;
    std::uint64_t abort_step = 0;
    long clamp_events = 0;
    double clamped_mass = 0.0;
    std::vector<double> book_a, book_eta, book_qv;  // when bookkeeping is on
};

struct SimulationResult {
    std::vector<PathRecord> paths;
    long clamp_events = 0;
    double clamped_mass = 0.0;
    std::vector<std::uint64_t> aborted_paths;
    double dt = 0.0;
    int record_every = 1;
    int n = 0;
};

/// Run the ensemble. Paths are independent; any worker count produces the
/// identical result because every draw is counter-indexed and the collector
/// merges by path index.
inline SimulationResult simulate(const SimPlan& plan) {
    if (plan.paths < 1) throw std::invalid_argument("simulate: paths must be >= 1");
    if (plan.record_every < 1) throw std::invalid_argument("simulate: record_every must be >= 1");
    if (static_cast<int>(plan.g_cells.size()) != plan.n)
        throw std::invalid_argument("simulate: g_cells length must be n");
    if (plan.factor.n != plan.n) throw std::invalid_argument("simulate: noise factor n mismatch");
    for (double g : plan.g_cells)
        if (g < 0.0) throw std::invalid_argument("simulate: initial data must be >= 0");

    const SystemStepper stepper(plan.n, plan.alpha0, plan.params, plan.regularized,
                                plan.lambda_cells, plan.drift);
    const auto steps = static_cast<std::uint64_t>(std::llround(plan.T / plan.params.dt));
    if (steps == 0) throw std::invalid_argument("simulate: T/dt rounds to zero steps");

    SimulationResult result;
    result.paths.resize(static_cast<std::size_t>(plan.paths));
    result.dt = plan.params.dt;
    result.record_every = plan.record_every;
    result.n = plan.n;
    const std::string tag = !plan.scheme_tag.empty()
                                ? plan.scheme_tag
                                : (plan.regularized ? "system_regularized" : "system_hard");

    auto run_path = [&](std::uint64_t local_index) {
        const std::uint64_t path_index = plan.path_offset + local_index;
        PathRecord rec;
        rec.path = path_index;
        rec.master_seed = plan.seeds.master_seed;
        rec.scheme_tag = tag;
        const bool book = plan.bookkeeping_cell >= 0 && plan.bookkeeping_cell < plan.n;
        double a = 0.0, eta = 0.0, qv = 0.0;

        std::vector<double> x = plan.g_cells;
        std::vector<double> xn(static_cast<std::size_t>(plan.n));
        std::vector<double> dw(static_cast<std::size_t>(plan.n));
        std::vector<double> xi(static_cast<std::size_t>(std::max(1, plan.factor.cols())));
        StepStats stats;

        auto record = [&](double t, const std::vector<double>& state) {
            rec.times.push_back(t);
            rec.states.push_back(state);
            if (book) {
                rec.book_a.push_back(a);
                rec.book_eta.push_back(eta);
                rec.book_qv.push_back(qv);
            }
        };
        record(0.0, x);

        for (std::uint64_t i = 0; i < steps; ++i) {
            sample_increments_into(plan.factor, plan.seeds, path_index, i, plan.params.dt,
                                   NoiseStream::dynamics, xi.data(), dw.data());
            stepper.step(x, dw, xn, stats, book ? plan.bookkeeping_cell : -1, &a, &eta, &qv);
            bool overflow = false;
            for (double v : xn)
                if (!std::isfinite(v) || std::abs(v) > plan.overflow_guard) overflow = true;
            if (overflow) {
                rec.aborted = true;
                rec.abort_step = i + 1;
                break;
            }
            x.swap(xn);
            if ((i + 1) % static_cast<std::uint64_t>(plan.record_every) == 0 || i + 1 == steps)
                record((i + 1) * plan.params.dt, x);
        }
        rec.clamp_events = stats.clamp_events;
        rec.clamped_mass = stats.clamped_mass;
        result.paths[static_cast<std::size_t>(local_index)] = std::move(rec);
    };

    const int workers = std::max(1, plan.threads);
    if (workers == 1) {
        for (int p = 0; p < plan.paths; ++p) run_path(static_cast<std::uint64_t>(p));
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (;;) {
                    const int p = next.fetch_add(1);
                    if (p >= plan.paths) return;
                    run_path(static_cast<std::uint64_t>(p));
                }
            });
        for (auto& t : pool) t.join();
    }

    // Merge per-path statistics in path-index order (thread-count invariant).
    for (const PathRecord& rec : result.paths) {
        result.clamp_events += rec.clamp_events;
        result.clamped_mass += rec.clamped_mass;
        if (rec.aborted) result.aborted_paths.push_back(rec.path);
    }
    return result;
}

}  // namespace stickyheat
