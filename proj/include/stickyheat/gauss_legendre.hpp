// Gauss–Legendre quadrature nodes and weights of arbitrary order, computed
// once per order by Newton iteration on the Legendre recurrence and cached.
#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace stickyheat {

struct QuadRule {
    std::vector<double> nodes;    // on (-1, 1), ascending
    std::vector<double> weights;  // sum to 2
};

/// Nodes/weights of the N-point Gauss–Legendre rule on [-1,1].
/// Accurate to machine precision for all orders used here (N <= 64).
inline const QuadRule& gauss_legendre(int npoints) {
    if (npoints < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    static std::map<int, QuadRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(npoints);
    if (it != cache.end()) return it->second;

    QuadRule rule;
    rule.nodes.resize(npoints);
    rule.weights.resize(npoints);
    const int n = npoints;
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-based initial guess for the i-th root of P_n.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Evaluate P_n(x) and P_{n-1}(x) by upward recurrence.
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;  // roots found from the +1 end; store ascending
        rule.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    auto [pos, inserted] = cache.emplace(npoints, std::move(rule));
    return pos->second;
}

/// ∫_a^b f(u) du by a single N-point Gauss–Legendre rule.
template <typename F>
double integrate_gl(F&& f, double a, double b, int npoints) {
    const QuadRule& rule = gauss_legendre(npoints);
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * f(mid + hw * rule.nodes[i]);
    return acc * hw;
}

}  // namespace stickyheat
