// Discrete Laplacian with ghost-cell boundaries, its action on cell-averaged
// test functions, the lattice heat semigroup via exact eigendecomposition,
// and the polygonal embedding of particle states into C[0,1].
//
// Grid convention: n cells, values x_1..x_n. Ghost cells implement the
// boundary: x_0 = alpha0*x_1 and x_{n+1} = alpha0*x_n, with alpha0 = 1 the
// zero-flux (Neumann) wall and alpha0 = 0 the absorbing (Dirichlet) wall.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "stickyheat/spectral.hpp"

namespace stickyheat {

/// Particle state on the n-cell lattice.
struct LatticeState {
    int n = 0;
    std::vector<double> x;
    int alpha0 = 1;  // 1 = Neumann, 0 = Dirichlet

    LatticeState() = default;
    LatticeState(int n_, std::vector<double> x_, int alpha0_)
        : n(n_), x(std::move(x_)), alpha0(alpha0_) {
        if (n <= 0 || static_cast<int>(x.size()) != n)
            throw std::invalid_argument("LatticeState: x length must equal n >= 1");
        if (alpha0 != 0 && alpha0 != 1)
            throw std::invalid_argument("LatticeState: alpha0 must be 0 or 1");
    }
};

/// (Δx)_k = n²·(x_{k+1} + x_{k-1} − 2x_k) with ghost values by the alpha0
/// rule. Symmetric as a matrix; nonpositive quadratic form.
inline std::vector<double> apply_laplacian(const LatticeState& s) {
    const int n = s.n;
    const double n2 = static_cast<double>(n) * n;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double left = (k > 0) ? s.x[static_cast<std::size_t>(k - 1)]
                                    : s.alpha0 * s.x[0];
        const double right = (k < n - 1) ? s.x[static_cast<std::size_t>(k + 1)]
                                         : s.alpha0 * s.x[static_cast<std::size_t>(n - 1)];
        out[static_cast<std::size_t>(k)] =
            n2 * (right + left - 2.0 * s.x[static_cast<std::size_t>(k)]);
    }
    return out;
}

/// Same stencil acting on a cell-averaged test function. In the pairing
/// ⟨state, ·⟩ this operator is the exact adjoint of the drift's Laplacian
/// (summation by parts with matching ghost rules), which is what makes the
/// finite-n martingale statistic free of spatial discretization error.
inline GridFunction apply_tilde_delta(const GridFunction& phi, int alpha0) {
    if (alpha0 != 0 && alpha0 != 1)
        throw std::invalid_argument("apply_tilde_delta: alpha0 must be 0 or 1");
    LatticeState tmp(phi.n, phi.values, alpha0);
    return GridFunction(phi.n, apply_laplacian(tmp));
}

/// Heat semigroup generated by ½Δ on the n-cell lattice, built once from the
/// dense symmetric eigendecomposition; exact at any t, O(n²) per apply.
class HeatKernel {
public:
    static HeatKernel build(int n, int alpha0) {
        if (n < 1) throw std::invalid_argument("HeatKernel: n must be >= 1");
        if (alpha0 != 0 && alpha0 != 1)
            throw std::invalid_argument("HeatKernel: alpha0 must be 0 or 1");
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        const double n2 = static_cast<double>(n) * n;
        for (int k = 0; k < n; ++k) {
            double diag = -2.0;
            if (k == 0) diag += alpha0;
            if (k == n - 1) diag += alpha0;
            a(k, k) = 0.5 * n2 * diag;
            if (k + 1 < n) {
                a(k, k + 1) = 0.5 * n2;
                a(k + 1, k) = 0.5 * n2;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("HeatKernel: eigendecomposition failed");
        HeatKernel kernel;
        kernel.n_ = n;
        kernel.alpha0_ = alpha0;
        kernel.eigval_ = es.eigenvalues();
        kernel.eigvec_ = es.eigenvectors();
        // The zero-flux wall has the constant vector in its kernel, exactly;
        // pin the top eigenvalue to 0 so long-time limits are clean.
        const double scale = 0.5 * n2 * 4.0;
        for (int m = 0; m < n; ++m) {
            if (std::abs(kernel.eigval_(m)) <= 1e-12 * scale) kernel.eigval_(m) = 0.0;
            if (kernel.eigval_(m) > 0.0)
                throw std::runtime_error("HeatKernel: positive eigenvalue, decomposition bad");
        }
        if (alpha0 == 0 && kernel.eigval_.maxCoeff() >= 0.0)
            throw std::runtime_error("HeatKernel: absorbing wall must be strictly dissipative");
        return kernel;
    }

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] int alpha0() const { return alpha0_; }
    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const { return eigval_; }
    [[nodiscard]] Eigen::VectorXd eigenvector(int m) const { return eigvec_.col(m); }

    /// Kernel entry p_{k,l}(t) = n·Σ_m v_m(k)·exp(λ_m t)·v_m(l); 1-based k,l.
    [[nodiscard]] double entry(double t, int k, int l) const {
        if (t < 0.0) throw std::invalid_argument("HeatKernel::entry: t must be >= 0");
        if (k < 1 || k > n_ || l < 1 || l > n_)
            throw std::invalid_argument("HeatKernel::entry: index out of range");
        double acc = 0.0;
        for (int m = 0; m < n_; ++m)
            acc += eigvec_(k - 1, m) * std::exp(eigval_(m) * t) * eigvec_(l - 1, m);
        return n_ * acc;
    }

    /// Semigroup action (1/n)·p(t)·v = V·exp(Λt)·Vᵀ·v on cell data.
    [[nodiscard]] std::vector<double> apply(double t, const std::vector<double>& v) const {
        if (t < 0.0) throw std::invalid_argument("HeatKernel::apply: t must be >= 0");
        if (static_cast<int>(v.size()) != n_)
            throw std::invalid_argument("HeatKernel::apply: length mismatch");
        Eigen::Map<const Eigen::VectorXd> vv(v.data(), n_);
        Eigen::VectorXd coef = eigvec_.transpose() * vv;
        for (int m = 0; m < n_; ++m) coef(m) *= std::exp(eigval_(m) * t);
        Eigen::VectorXd out = eigvec_ * coef;
        return std::vector<double>(out.data(), out.data() + n_);
    }

private:
    HeatKernel() = default;
    int n_ = 0;
    int alpha0_ = 1;
    Eigen::VectorXd eigval_;
    Eigen::MatrixXd eigvec_;
};

/// Piecewise-linear embedding: on cell k, X̃(u) = (un−k+1)·x_k + (k−un)·x_{k−1}
/// with the ghost value x_0 = alpha0·x_1; u = 1 is assigned by left limit so
/// the embedding is continuous on all of [0,1].
inline double polygonal_interpolate(const LatticeState& s, double u) {
    if (!(u >= 0.0 && u <= 1.0))
        throw std::invalid_argument("polygonal_interpolate: u must be in [0,1]");
    const int n = s.n;
    int k = static_cast<int>(std::floor(u * n)) + 1;
    if (k > n) k = n;  // u = 1
    const double xk = s.x[static_cast<std::size_t>(k - 1)];
    const double xkm1 = (k >= 2) ? s.x[static_cast<std::size_t>(k - 2)] : s.alpha0 * s.x[0];
    const double w = u * n - (k - 1);
    return w * xk + (1.0 - w) * xkm1;
}

}  // namespace stickyheat
