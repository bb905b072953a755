// Correlated Wiener-increment synthesis for the lattice system. Two
// cross-validating backends produce increments with covariance qⁿ·dt:
//
//   spectral — B_{k,j} = √n·μ_j·⟨π_k,e_j⟩, so B·Bᵀ = qⁿ in exact arithmetic,
//              driven by J i.i.d. normals per step (J = spectral truncation);
//   factor   — a symmetric square root of an explicitly supplied qⁿ
//              (eigendecomposition with roundoff-negative eigenvalues clipped
//              at zero), driven by n normals per step.
//
// All draws come from the counter-based generator in rng.hpp, so an ensemble
// is a pure function of (master_seed, path) no matter how work is scheduled.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "stickyheat/rng.hpp"
#include "stickyheat/spectral.hpp"

namespace stickyheat {

enum class NoiseBackend { spectral, factor };

/// Immutable synthesis matrix for one lattice resolution.
struct NoiseFactor {
    int n = 0;
    NoiseBackend backend = NoiseBackend::spectral;
    Eigen::MatrixXd matrix;      // n × cols; increments = matrix·ξ·√dt
    std::string clip_warning;    // non-empty if PSD repair clipped real mass

    [[nodiscard]] int cols() const { return static_cast<int>(matrix.cols()); }
};

/// Spectral synthesis straight from the eigenpairs.
inline NoiseFactor build_noise_factor(const EigenSpec& spec, int n) {
    if (n < 1) throw std::invalid_argument("build_noise_factor: n must be >= 1");
    NoiseFactor f;
    f.n = n;
    f.backend = NoiseBackend::spectral;
    const auto c = cell_coefficients(spec, n);
    const int J = static_cast<int>(spec.truncation());
    f.matrix = Eigen::MatrixXd::Zero(n, J);
    const double rootn = std::sqrt(static_cast<double>(n));
    for (int j = 0; j < J; ++j)
        for (int k = 0; k < n; ++k)
            f.matrix(k, j) = rootn * spec.pairs[static_cast<std::size_t>(j)].first *
                             c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    return f;
}

/// Square-root synthesis from an explicit covariance matrix. Rejects inputs
/// that are not covariances (min eigenvalue < −1e-8·‖q‖_∞); clips the
/// roundoff-negative part at zero and records a warning when the clipped
/// mass exceeds 1e-8·trace.
inline NoiseFactor build_noise_factor_from_matrix(const Eigen::MatrixXd& q) {
    if (q.rows() < 1 || q.rows() != q.cols())
        throw std::invalid_argument("build_noise_factor_from_matrix: need square q, n >= 1");
    const int n = static_cast<int>(q.rows());
    const double scale = std::max(1e-300, q.cwiseAbs().maxCoeff());
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("build_noise_factor_from_matrix: q is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("build_noise_factor_from_matrix: eigendecomposition failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev.minCoeff() < -1e-8 * scale)
        throw std::invalid_argument(
            "build_noise_factor_from_matrix: min eigenvalue " + format_double(ev.minCoeff()) +
            " is too negative for a covariance (threshold " + format_double(-1e-8 * scale) + ")");
    double clipped = 0.0;
    Eigen::VectorXd roots(n);
    for (int m = 0; m < n; ++m) {
        if (ev(m) > 0.0) {
            roots(m) = std::sqrt(ev(m));
        } else {
            clipped += -ev(m);
            roots(m) = 0.0;
        }
    }
    NoiseFactor f;
    f.n = n;
    f.backend = NoiseBackend::factor;
    f.matrix = es.eigenvectors() * roots.asDiagonal();
    const double trace = std::max(1e-300, q.trace());
    if (clipped > 1e-8 * trace)
        f.clip_warning = "PSD repair clipped eigenvalue mass " + format_double(clipped) +
                         " exceeding 1e-8*trace(q) = " + format_double(1e-8 * trace);
    return f;
}

/// Backend-dispatching builder working from the eigenpairs in both cases.
inline NoiseFactor build_noise_factor(const EigenSpec& spec, int n, NoiseBackend backend) {
    if (backend == NoiseBackend::spectral) return build_noise_factor(spec, n);
    if (n < 1) throw std::invalid_argument("build_noise_factor: n must be >= 1");
    return build_noise_factor_from_matrix(q_matrix(spec, n));
}

/// Allocation-free core: writes the n increments for (path, step) into out,
/// using xi as scratch for the driving normals. Covariance is qⁿ·dt.
inline void sample_increments_into(const NoiseFactor& factor, const SeedPolicy& seeds,
                                   std::uint64_t path, std::uint64_t step, double dt,
                                   NoiseStream stream, double* xi, double* out) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_increments: dt must be > 0");
    const int cols = factor.cols();
    const int n = factor.n;
    if (cols == 0) {
        for (int k = 0; k < n; ++k) out[k] = 0.0;
        return;
    }
    normal_fill(seeds, path, step, stream, xi, static_cast<std::size_t>(cols));
    const double root_dt = std::sqrt(dt);
    Eigen::Map<const Eigen::VectorXd> xiv(xi, cols);
    Eigen::Map<Eigen::VectorXd> ov(out, n);
    ov.noalias() = factor.matrix * xiv;
    ov *= root_dt;
}

/// Convenience wrapper returning the increment vector.
inline std::vector<double> sample_increments(const NoiseFactor& factor, const SeedPolicy& seeds,
                                             std::uint64_t path, std::uint64_t step, double dt,
                                             NoiseStream stream = NoiseStream::dynamics) {
    std::vector<double> xi(static_cast<std::size_t>(std::max(1, factor.cols())));
    std::vector<double> out(static_cast<std::size_t>(factor.n));
    sample_increments_into(factor, seeds, path, step, dt, stream, xi.data(), out.data());
    return out;
}

}  // namespace stickyheat
