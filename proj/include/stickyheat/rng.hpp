// Counter-based random number generation. Every draw is a pure function of
// (master_seed, path, step, component, stream), so ensembles are bit-for-bit
// reproducible regardless of execution order, batching, or thread count.
//
// Generator: Philox-4x64 with 10 rounds (Salmon et al.'s multiply-bumped-key
// construction). Uniforms map the top 53 bits into (0,1); normals go through
// Wichura's AS241 double-precision inverse CDF, which is exact to ~1e-15 and
// branch-stable, so a path's noise never depends on evaluation context.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace stickyheat {

namespace detail {

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

}  // namespace detail

/// Keyed 256-bit counter block cipher (10-round Philox-4x64 structure).
struct Philox4x64 {
    static constexpr std::uint64_t M0 = 0xD2E7470EE14C6C93ull;
    static constexpr std::uint64_t M1 = 0xCA5A826395121157ull;
    static constexpr std::uint64_t W0 = 0x9E3779B97F4A7C15ull;  // golden-ratio Weyl step
    static constexpr std::uint64_t W1 = 0xBB67AE8584CAA73Bull;

    static std::array<std::uint64_t, 4> block(std::uint64_t key0, std::uint64_t key1,
                                              std::array<std::uint64_t, 4> ctr) {
        std::uint64_t k0 = key0, k1 = key1;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t hi0, lo0, hi1, lo1;
            detail::mulhilo64(M0, ctr[0], hi0, lo0);
            detail::mulhilo64(M1, ctr[2], hi1, lo1);
            ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
            k0 += W0;
            k1 += W1;
        }
        return ctr;
    }
};

/// Independent logical noise streams sharing one master seed. Keeping the
/// stream id inside the counter (not the key) means adding a stream never
/// perturbs draws of another.
enum class NoiseStream : std::uint64_t {
    dynamics = 0,   // lattice / scalar SDE driving noise
    oracle = 1,     // time-change construction's own Brownian driver
    auxiliary = 2,  // calibration and test ensembles
};

/// Deterministic seeding contract: one master seed; (path, step, component,
/// stream) index every scalar draw injectively.
struct SeedPolicy {
    std::uint64_t master_seed = 0;
};

/// Top-53-bit uniform on the open interval (0,1); never returns 0 or 1.
inline double u64_to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

/// Inverse standard-normal CDF, Wichura's algorithm AS241 (PPND16 variant).
/// Max absolute error ~3e-16 over (0,1); monotone; pure.
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("inverse_normal_cdf: p must lie in (0,1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                      6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                    1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                  1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        val = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        val = num / den;
    }
    return (q < 0.0) ? -val : val;
}

namespace detail {

inline std::array<std::uint64_t, 4> raw_block(const SeedPolicy& seeds, std::uint64_t path,
                                              std::uint64_t step, std::uint64_t block,
                                              NoiseStream stream) {
    return Philox4x64::block(seeds.master_seed, path,
                             {step, block, static_cast<std::uint64_t>(stream), 0});
}

}  // namespace detail

/// One scalar N(0,1) draw at logical coordinates (path, step, component).
/// Components are packed four per cipher block; hot loops should prefer
/// normal_fill, which shares blocks across a whole component range.
inline double normal_draw(const SeedPolicy& seeds, std::uint64_t path, std::uint64_t step,
                          std::uint64_t component, NoiseStream stream) {
    const auto blk = detail::raw_block(seeds, path, step, component >> 2, stream);
    return inverse_normal_cdf(u64_to_unit(blk[component & 3]));
}

/// Fill out[0..count) with the draws for components [0, count) of one step.
inline void normal_fill(const SeedPolicy& seeds, std::uint64_t path, std::uint64_t step,
                        NoiseStream stream, double* out, std::size_t count) {
    std::size_t c = 0;
    while (c < count) {
        const auto blk = detail::raw_block(seeds, path, step, c >> 2, stream);
        for (std::size_t w = c & 3; w < 4 && c < count; ++w, ++c)
            out[c] = inverse_normal_cdf(u64_to_unit(blk[w]));
    }
}

}  // namespace stickyheat
