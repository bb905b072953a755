// Shared numeric utilities: compensated summation, FNV hashing for config
// fingerprints, and deterministic float formatting for file output.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stickyheat {

/// Kahan–Neumaier compensated accumulator. Used for every ensemble reduction
/// so that sums are independent of how paths were batched across threads
/// (results are merged in path-index order, then reduced once).
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    [[nodiscard]] double value() const { return sum + comp; }
};

/// Sum a vector with compensation, in index order.
inline double ksum(const std::vector<double>& v) {
    KahanSum s;
    for (double x : v) s.add(x);
    return s.value();
}

inline double sqr(double x) { return x * x; }

/// Sample mean of a vector (compensated). Empty input is a caller bug.
inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean_of: empty sample");
    return ksum(v) / static_cast<double>(v.size());
}

/// Unbiased sample standard deviation; zero for a single observation.
inline double stddev_of(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("stddev_of: empty sample");
    if (v.size() == 1) return 0.0;
    const double m = mean_of(v);
    KahanSum s;
    for (double x : v) s.add(sqr(x - m));
    return std::sqrt(s.value() / static_cast<double>(v.size() - 1));
}

/// 64-bit FNV-1a. Fingerprints canonicalized config text; not cryptographic.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Deterministic shortest-faithful text for a double: %.17g always
/// round-trips, and the C locale keeps the byte stream platform-stable.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace stickyheat
