// Covariance operator represented by an explicit finite eigenbasis, plus the
// grid discretizations derived from it: the lattice covariance matrix q^n,
// cell-averaged coefficient fields, projection of basis functions onto step
// functions, and the quadratic-variation target density used by diagnostics.
//
// Conventions. The unit interval is split into n cells [(k-1)/n, k/n), k =
// 1..n; π_k denotes the indicator of cell k. A GridFunction stores the step
// function Σ values_k·π_k. Inner products are L²[0,1]. Cell integrals of the
// analytic basis variants use closed-form antiderivatives; tabulated data is
// integrated by knot-aware composite Gauss–Legendre, so quadrature error is
// negligible against every tolerance in this library.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "stickyheat/common.hpp"
#include "stickyheat/gauss_legendre.hpp"

namespace stickyheat {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// GridFunction
// ---------------------------------------------------------------------------

/// Step function Σ_k values[k-1]·𝟙_{[(k-1)/n, k/n)}.
struct GridFunction {
    int n = 0;
    std::vector<double> values;

    GridFunction() = default;
    GridFunction(int n_, std::vector<double> v) : n(n_), values(std::move(v)) {
        if (n <= 0 || static_cast<int>(values.size()) != n)
            throw std::invalid_argument("GridFunction: values length must equal n >= 1");
    }

    /// Pointwise value; u=1 evaluates the last cell (left limit).
    [[nodiscard]] double value_at(double u) const {
        int k = static_cast<int>(std::floor(u * n));
        k = std::clamp(k, 0, n - 1);
        return values[static_cast<std::size_t>(k)];
    }

    [[nodiscard]] json to_json() const { return json{{"n", n}, {"values", values}}; }

    static GridFunction from_json(const json& j) {
        return GridFunction(j.at("n").get<int>(), j.at("values").get<std::vector<double>>());
    }
};

/// L² inner product of two step functions on the same grid: Σ f_k g_k / n.
inline double grid_inner(const GridFunction& f, const GridFunction& g) {
    if (f.n != g.n) throw std::invalid_argument("grid_inner: mismatched cell counts");
    KahanSum s;
    for (int k = 0; k < f.n; ++k)
        s.add(f.values[static_cast<std::size_t>(k)] * g.values[static_cast<std::size_t>(k)]);
    return s.value() / f.n;
}

// ---------------------------------------------------------------------------
// Piecewise-smooth quadrature support
// ---------------------------------------------------------------------------

namespace detail {

/// Integrate f over [a,b], splitting at the supplied breakpoints and
/// subdividing each smooth piece until the given oscillation count (full
/// periods over [0,1], e.g. j for cos(πju)) is resolved by a 32-point rule.
template <typename F>
double integrate_piecewise(F&& f, double a, double b, const std::vector<double>& knots,
                           double oscillation) {
    if (b <= a) return 0.0;
    std::vector<double> cuts;
    cuts.push_back(a);
    for (double t : knots)
        if (t > a && t < b) cuts.push_back(t);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    KahanSum acc;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1];
        const int sub = std::max(1, static_cast<int>(std::ceil((hi - lo) * oscillation / 2.0)));
        const double h = (hi - lo) / sub;
        for (int s = 0; s < sub; ++s)
            acc.add(integrate_gl(f, lo + s * h, lo + (s + 1) * h, 32));
    }
    return acc.value();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// BasisFn
// ---------------------------------------------------------------------------

/// One orthonormal-basis candidate on [0,1]. Variants:
///   Constant                  e(u) = 1
///   Cosine(j)                 e(u) = √2·cos(πju), j ≥ 1
///   Sine(j)                   e(u) = √2·sin(πju), j ≥ 1
///   NormalizedIndicator(a,b)  e(u) = 𝟙_{[a,b)}/√(b−a)
///   Tabulated(values)         linear interpolant of uniform samples on [0,1]
class BasisFn {
public:
    enum class Kind { Constant, Cosine, Sine, NormalizedIndicator, Tabulated };

    static BasisFn constant() { return BasisFn(Kind::Constant); }
    static BasisFn cosine(int j) {
        if (j < 1) throw std::invalid_argument("BasisFn::cosine: j must be >= 1");
        BasisFn f(Kind::Cosine);
        f.j_ = j;
        return f;
    }
    static BasisFn sine(int j) {
        if (j < 1) throw std::invalid_argument("BasisFn::sine: j must be >= 1");
        BasisFn f(Kind::Sine);
        f.j_ = j;
        return f;
    }
    static BasisFn normalized_indicator(double a, double b) {
        if (!(0.0 <= a && a < b && b <= 1.0))
            throw std::invalid_argument("BasisFn::normalized_indicator: need 0 <= a < b <= 1");
        BasisFn f(Kind::NormalizedIndicator);
        f.a_ = a;
        f.b_ = b;
        return f;
    }
    static BasisFn tabulated(std::vector<double> samples) {
        if (samples.size() < 2)
            throw std::invalid_argument("BasisFn::tabulated: need at least 2 samples");
        BasisFn f(Kind::Tabulated);
        f.table_ = std::move(samples);
        return f;
    }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] int frequency() const { return j_; }

    [[nodiscard]] double operator()(double u) const {
        switch (kind_) {
            case Kind::Constant:
                return 1.0;
            case Kind::Cosine:
                return M_SQRT2 * std::cos(M_PI * j_ * u);
            case Kind::Sine:
                return M_SQRT2 * std::sin(M_PI * j_ * u);
            case Kind::NormalizedIndicator:
                return (u >= a_ && u < b_) ? 1.0 / std::sqrt(b_ - a_) : 0.0;
            case Kind::Tabulated: {
                const std::size_t m = table_.size();
                double s = std::clamp(u, 0.0, 1.0) * (m - 1);
                const std::size_t i = std::min(static_cast<std::size_t>(s), m - 2);
                const double w = s - static_cast<double>(i);
                return (1.0 - w) * table_[i] + w * table_[i + 1];
            }
        }
        return 0.0;  // unreachable
    }

    /// ∫ e(u) du over cell k of an n-cell grid (k is 1-based). Closed form for
    /// the analytic variants; composite quadrature for tabulated data.
    [[nodiscard]] double cell_integral(int n, int k) const {
        const double lo = static_cast<double>(k - 1) / n;
        const double hi = static_cast<double>(k) / n;
        switch (kind_) {
            case Kind::Constant:
                return 1.0 / n;
            case Kind::Cosine: {
                const double w = M_PI * j_;
                return M_SQRT2 / w * (std::sin(w * hi) - std::sin(w * lo));
            }
            case Kind::Sine: {
                const double w = M_PI * j_;
                return M_SQRT2 / w * (std::cos(w * lo) - std::cos(w * hi));
            }
            case Kind::NormalizedIndicator: {
                const double overlap = std::max(0.0, std::min(b_, hi) - std::max(a_, lo));
                return overlap / std::sqrt(b_ - a_);
            }
            case Kind::Tabulated:
                return detail::integrate_piecewise([this](double u) { return (*this)(u); }, lo,
                                                   hi, knots(), 0.0);
        }
        return 0.0;  // unreachable
    }

    /// Breakpoints where the function is not smooth (for quadrature splitting).
    [[nodiscard]] std::vector<double> knots() const {
        switch (kind_) {
            case Kind::NormalizedIndicator:
                return {a_, b_};
            case Kind::Tabulated: {
                std::vector<double> ks;
                const std::size_t m = table_.size();
                ks.reserve(m - 2);
                for (std::size_t i = 1; i + 1 < m; ++i)
                    ks.push_back(static_cast<double>(i) / (m - 1));
                return ks;
            }
            default:
                return {};
        }
    }

    /// Oscillation hint: full half-period count (j for the trig variants).
    [[nodiscard]] double oscillation() const {
        return (kind_ == Kind::Cosine || kind_ == Kind::Sine) ? static_cast<double>(j_) : 0.0;
    }

    [[nodiscard]] double l2_norm_sq() const {
        switch (kind_) {
            case Kind::Constant:
            case Kind::Cosine:
            case Kind::Sine:
            case Kind::NormalizedIndicator:
                return 1.0;  // unit by construction
            case Kind::Tabulated:
                return detail::integrate_piecewise([this](double u) { return sqr((*this)(u)); },
                                                   0.0, 1.0, knots(), 0.0);
        }
        return 0.0;  // unreachable
    }

    [[nodiscard]] std::string label() const {
        switch (kind_) {
            case Kind::Constant:
                return "constant";
            case Kind::Cosine:
                return "cosine(" + std::to_string(j_) + ")";
            case Kind::Sine:
                return "sine(" + std::to_string(j_) + ")";
            case Kind::NormalizedIndicator:
                return "indicator[" + format_double(a_) + "," + format_double(b_) + ")";
            case Kind::Tabulated:
                return "tabulated(" + std::to_string(table_.size()) + ")";
        }
        return "?";
    }

    [[nodiscard]] json to_json() const {
        switch (kind_) {
            case Kind::Constant:
                return json{{"type", "constant"}};
            case Kind::Cosine:
                return json{{"type", "cosine"}, {"j", j_}};
            case Kind::Sine:
                return json{{"type", "sine"}, {"j", j_}};
            case Kind::NormalizedIndicator:
                return json{{"type", "normalized_indicator"}, {"a", a_}, {"b", b_}};
            case Kind::Tabulated:
                return json{{"type", "tabulated"}, {"values", table_}};
        }
        return json{};
    }

    static BasisFn from_json(const json& j) {
        const std::string type = j.at("type").get<std::string>();
        if (type == "constant") return constant();
        if (type == "cosine") return cosine(j.at("j").get<int>());
        if (type == "sine") return sine(j.at("j").get<int>());
        if (type == "normalized_indicator")
            return normalized_indicator(j.at("a").get<double>(), j.at("b").get<double>());
        if (type == "tabulated") return tabulated(j.at("values").get<std::vector<double>>());
        throw std::invalid_argument("BasisFn::from_json: unknown type '" + type + "'");
    }

private:
    explicit BasisFn(Kind k) : kind_(k) {}

    Kind kind_;
    int j_ = 0;
    double a_ = 0.0, b_ = 1.0;
    std::vector<double> table_;
};

/// L² inner product of two basis functions, exact to machine precision.
inline double basis_inner(const BasisFn& f, const BasisFn& g) {
    std::vector<double> ks = f.knots();
    const std::vector<double> kg = g.knots();
    ks.insert(ks.end(), kg.begin(), kg.end());
    return detail::integrate_piecewise([&](double u) { return f(u) * g(u); }, 0.0, 1.0, ks,
                                       f.oscillation() + g.oscillation());
}

// ---------------------------------------------------------------------------
// EigenSpec
// ---------------------------------------------------------------------------

/// Finite eigen-decomposition of the covariance operator: Q e_j = μ_j e_j for
/// an orthonormal family {e_j}. An empty list means the zero operator.
struct EigenSpec {
    std::vector<std::pair<double, BasisFn>> pairs;

    [[nodiscard]] std::size_t truncation() const { return pairs.size(); }

    /// Structural checks: μ ≥ 0, unit norms within 1e-8, pairwise inner
    /// products within 1e-8. Returns human-readable issues; empty means valid.
    [[nodiscard]] std::vector<std::string> validate() const {
        std::vector<std::string> issues;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (pairs[i].first < 0.0)
                issues.push_back("mu[" + std::to_string(i) + "] is negative");
            const double norm = std::sqrt(pairs[i].second.l2_norm_sq());
            if (std::abs(norm - 1.0) > 1e-8)
                issues.push_back("fn[" + std::to_string(i) + "] (" + pairs[i].second.label() +
                                 ") has L2 norm " + format_double(norm) + ", expected 1");
        }
        for (std::size_t i = 0; i < pairs.size(); ++i)
            for (std::size_t j = i + 1; j < pairs.size(); ++j) {
                const double ip = basis_inner(pairs[i].second, pairs[j].second);
                if (std::abs(ip) > 1e-8)
                    issues.push_back("fn[" + std::to_string(i) + "] and fn[" + std::to_string(j) +
                                     "] are not orthogonal: <.,.> = " + format_double(ip));
            }
        return issues;
    }

    [[nodiscard]] json to_json() const {
        json arr = json::array();
        for (const auto& [mu, fn] : pairs) arr.push_back(json{{"mu", mu}, {"fn", fn.to_json()}});
        return json{{"pairs", arr}};
    }

    static EigenSpec from_json(const json& j) {
        EigenSpec s;
        for (const auto& item : j.at("pairs"))
            s.pairs.emplace_back(item.at("mu").get<double>(), BasisFn::from_json(item.at("fn")));
        return s;
    }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// χ²(u) = Σ_j μ_j²·e_j(u)². Finite sum; zero for the empty spec.
inline double chi_squared(const EigenSpec& spec, double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("chi_squared: u must be in [0,1]");
    KahanSum s;
    for (const auto& [mu, fn] : spec.pairs) s.add(sqr(mu) * sqr(fn(u)));
    return s.value();
}

struct DriftConditionReport {
    bool ok = true;
    std::vector<double> violations;  // sample points where χ²=0 but λ>0
    int points_checked = 0;
};

namespace detail {

/// Shared core: sample λ at grid midpoints, flag λ > 1e-12 where χ² vanishes.
/// χ² is a finite sum of squares, so "vanishes" is exact floating-point zero;
/// isolated analytic zeros (e.g. the cosine node) never evaluate to exact 0
/// at midpoint samples, matching the almost-everywhere reading.
template <typename LambdaEval>
DriftConditionReport drift_condition_impl(const EigenSpec& spec, LambdaEval&& lambda,
                                          int points) {
    DriftConditionReport rep;
    rep.points_checked = points;
    for (int i = 0; i < points; ++i) {
        const double u = (i + 0.5) / points;
        if (chi_squared(spec, u) == 0.0 && lambda(u) > 1e-12) rep.violations.push_back(u);
    }
    rep.ok = rep.violations.empty();
    return rep;
}

inline int default_drift_grid(const EigenSpec& spec, int n_hint) {
    const int j = std::max<std::size_t>(std::size_t{1}, spec.truncation());
    return 10 * std::max(1, n_hint) * j;
}

}  // namespace detail

/// Check that λ vanishes (to 1e-12) wherever χ² does, on a midpoint sample
/// grid. A false result is advisory: solutions may exist regardless, but the
/// uniqueness theory needs the condition.
inline DriftConditionReport check_drift_condition(const EigenSpec& spec,
                                                  const std::function<double(double)>& lambda,
                                                  int grid_points = 0) {
    const int pts = grid_points > 0 ? grid_points : detail::default_drift_grid(spec, 100);
    return detail::drift_condition_impl(spec, lambda, pts);
}

inline DriftConditionReport check_drift_condition(const EigenSpec& spec,
                                                  const GridFunction& lambda,
                                                  int grid_points = 0) {
    const int pts = grid_points > 0 ? grid_points : detail::default_drift_grid(spec, lambda.n);
    return detail::drift_condition_impl(spec, [&](double u) { return lambda.value_at(u); }, pts);
}

/// Matrix of cell integrals c[j][k] = ⟨e_j, π_k⟩ (J rows, n columns).
inline std::vector<std::vector<double>> cell_coefficients(const EigenSpec& spec, int n) {
    if (n < 1) throw std::invalid_argument("cell_coefficients: n must be >= 1");
    std::vector<std::vector<double>> c(spec.truncation(), std::vector<double>(n));
    for (std::size_t j = 0; j < spec.truncation(); ++j)
        for (int k = 1; k <= n; ++k)
            c[j][static_cast<std::size_t>(k - 1)] = spec.pairs[j].second.cell_integral(n, k);
    return c;
}

/// Lattice covariance q_{k,l} = n·Σ_j μ_j²·⟨e_j,π_k⟩⟨e_j,π_l⟩. Symmetric PSD
/// by construction (Gram matrix of the vectors √n·μ_j⟨e_j,π_k⟩).
inline Eigen::MatrixXd q_matrix(const EigenSpec& spec, int n) {
    if (n < 1) throw std::invalid_argument("q_matrix: n must be >= 1");
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    const auto c = cell_coefficients(spec, n);
    for (std::size_t j = 0; j < spec.truncation(); ++j) {
        const double w = static_cast<double>(n) * sqr(spec.pairs[j].first);
        for (int k = 0; k < n; ++k) {
            const double ck = c[j][static_cast<std::size_t>(k)];
            if (ck == 0.0) continue;
            for (int l = 0; l < n; ++l)
                q(k, l) += w * ck * c[j][static_cast<std::size_t>(l)];
        }
    }
    return q;
}

/// Diagonal of q_matrix, computed directly.
inline std::vector<double> q_diagonal(const EigenSpec& spec, int n) {
    if (n < 1) throw std::invalid_argument("q_diagonal: n must be >= 1");
    std::vector<double> d(static_cast<std::size_t>(n), 0.0);
    for (const auto& [mu, fn] : spec.pairs)
        for (int k = 1; k <= n; ++k)
            d[static_cast<std::size_t>(k - 1)] += n * sqr(mu) * sqr(fn.cell_integral(n, k));
    return d;
}

/// Decides "q_{k,k} > 0" in the coefficient-zeroing rule. Exact zeros arise
/// from analytic orthogonality; anything above this is treated as genuine.
inline constexpr double psd_zero_tol = 1e-14;

/// Cell averages of a scalar field, as a GridFunction: values_k = n·∫_cell f.
inline GridFunction project_to_grid(const std::function<double(double)>& f, int n,
                                    const std::vector<double>& knots = {},
                                    double oscillation = 0.0) {
    if (n < 1) throw std::invalid_argument("project_to_grid: n must be >= 1");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k)
        v[static_cast<std::size_t>(k - 1)] =
            n * detail::integrate_piecewise(f, (k - 1.0) / n, static_cast<double>(k) / n, knots,
                                            oscillation);
    return GridFunction(n, std::move(v));
}

/// Exact projection of a basis function: values_k = n·⟨e,π_k⟩.
inline GridFunction project_basis(const BasisFn& fn, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k)
        v[static_cast<std::size_t>(k - 1)] = n * fn.cell_integral(n, k);
    return GridFunction(n, std::move(v));
}

/// Exact re-projection of a step function onto a coarser/finer uniform grid.
inline GridFunction project_grid_to_grid(const GridFunction& f, int n) {
    if (n < 1) throw std::invalid_argument("project_grid_to_grid: n must be >= 1");
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    for (int k = 1; k <= n; ++k) {
        const double lo = (k - 1.0) / n, hi = static_cast<double>(k) / n;
        // Sum exact overlaps with source cells.
        const int first = std::max(0, static_cast<int>(std::floor(lo * f.n)) - 1);
        KahanSum s;
        for (int m = first; m < f.n; ++m) {
            const double mlo = static_cast<double>(m) / f.n;
            const double mhi = static_cast<double>(m + 1) / f.n;
            if (mlo >= hi) break;
            const double ov = std::max(0.0, std::min(hi, mhi) - std::max(lo, mlo));
            if (ov > 0.0) s.add(ov * f.values[static_cast<std::size_t>(m)]);
        }
        v[static_cast<std::size_t>(k - 1)] = n * s.value();
    }
    return GridFunction(n, std::move(v));
}

/// ‖pr^n e‖² = n·Σ_k ⟨e,π_k⟩² for a basis function.
inline double projected_norm_sq(const BasisFn& fn, int n) {
    KahanSum s;
    for (int k = 1; k <= n; ++k) s.add(sqr(fn.cell_integral(n, k)));
    return n * s.value();
}

/// Cell-averaged coefficient field λⁿ, zeroed on cells whose lattice noise
/// variance q_{k,k} vanishes (those cells receive no stickiness on the grid).
inline GridFunction discretize_lambda(const EigenSpec& spec,
                                      const std::function<double(double)>& lambda, int n,
                                      const std::vector<double>& lambda_knots = {}) {
    GridFunction out = project_to_grid(lambda, n, lambda_knots);
    const std::vector<double> qd = q_diagonal(spec, n);
    for (int k = 0; k < n; ++k)
        if (!(qd[static_cast<std::size_t>(k)] > psd_zero_tol))
            out.values[static_cast<std::size_t>(k)] = 0.0;
    return out;
}

inline GridFunction discretize_lambda(const EigenSpec& spec, const GridFunction& lambda, int n) {
    GridFunction out = project_grid_to_grid(lambda, n);
    const std::vector<double> qd = q_diagonal(spec, n);
    for (int k = 0; k < n; ++k)
        if (!(qd[static_cast<std::size_t>(k)] > psd_zero_tol))
            out.values[static_cast<std::size_t>(k)] = 0.0;
    return out;
}

/// L² distance between a step function and a scalar field, via knot-aware
/// quadrature of the squared difference on every cell.
inline double l2_distance(const GridFunction& g, const std::function<double(double)>& f,
                          const std::vector<double>& knots = {}, double oscillation = 0.0) {
    KahanSum s;
    for (int k = 1; k <= g.n; ++k) {
        const double vk = g.values[static_cast<std::size_t>(k - 1)];
        s.add(detail::integrate_piecewise([&](double u) { return sqr(f(u) - vk); },
                                          (k - 1.0) / g.n, static_cast<double>(k) / g.n, knots,
                                          oscillation));
    }
    return std::sqrt(std::max(0.0, s.value()));
}

/// Table of (n, ‖λⁿ − λ‖_{L²}) documenting the coefficient-field convergence.
inline std::vector<std::pair<int, double>> lambda_convergence_table(
    const EigenSpec& spec, const std::function<double(double)>& lambda,
    const std::vector<int>& n_list, const std::vector<double>& lambda_knots = {}) {
    std::vector<std::pair<int, double>> table;
    table.reserve(n_list.size());
    for (int n : n_list) {
        const GridFunction ln = discretize_lambda(spec, lambda, n, lambda_knots);
        table.emplace_back(n, l2_distance(ln, lambda, lambda_knots));
    }
    return table;
}

/// Instantaneous quadratic-variation density Σ_j μ_j²·⟨𝟙·φ, e_j⟩² for a step
/// indicator and a step test function on the same grid.
inline double qv_target_density(const EigenSpec& spec, const GridFunction& indicator,
                                const GridFunction& phi) {
    if (indicator.n != phi.n)
        throw std::invalid_argument("qv_target_density: indicator/phi cell counts differ");
    KahanSum total;
    for (const auto& [mu, fn] : spec.pairs) {
        KahanSum sj;
        for (int k = 1; k <= indicator.n; ++k) {
            const double w = indicator.values[static_cast<std::size_t>(k - 1)] *
                             phi.values[static_cast<std::size_t>(k - 1)];
            if (w != 0.0) sj.add(w * fn.cell_integral(indicator.n, k));
        }
        total.add(sqr(mu) * sqr(sj.value()));
    }
    return total.value();
}

/// Same density with a continuum test function; the product integrals
/// ∫_cell φ·e_j are evaluated by knot-aware quadrature.
inline double qv_target_density(const EigenSpec& spec, const GridFunction& indicator,
                                const BasisFn& phi) {
    KahanSum total;
    for (const auto& [mu, fn] : spec.pairs) {
        std::vector<double> ks = fn.knots();
        const auto kp = phi.knots();
        ks.insert(ks.end(), kp.begin(), kp.end());
        const double osc = fn.oscillation() + phi.oscillation();
        KahanSum sj;
        for (int k = 1; k <= indicator.n; ++k) {
            const double ind = indicator.values[static_cast<std::size_t>(k - 1)];
            if (ind == 0.0) continue;
            sj.add(ind * detail::integrate_piecewise([&](double u) { return phi(u) * fn(u); },
                                                     (k - 1.0) / indicator.n,
                                                     static_cast<double>(k) / indicator.n, ks,
                                                     osc));
        }
        total.add(sqr(mu) * sqr(sj.value()));
    }
    return total.value();
}

}  // namespace stickyheat
