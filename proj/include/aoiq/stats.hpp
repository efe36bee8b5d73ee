#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include <boost/math/distributions/students_t.hpp>

namespace aoiq {

/// Across-replication summary of one scalar. se and ci95 are NaN with fewer
/// than two replications.
struct Estimate {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    double ci95 = std::numeric_limits<double>::quiet_NaN();  // half-width
    int n = 0;

    bool has_ci() const { return n >= 2 && std::isfinite(ci95); }
    bool covers(double value) const { return has_ci() && std::abs(mean - value) <= ci95; }
    double z(double value) const { return (mean - value) / se; }
    bool within_se(double value, double k) const {
        return has_ci() && std::abs(mean - value) <= k * se;
    }
};

/// Non-finite entries (replications without data) are skipped.
inline Estimate summarize(std::span<const double> xs) {
    Estimate e;
    double sum = 0.0;
    for (double x : xs)
        if (std::isfinite(x)) {
            sum += x;
            ++e.n;
        }
    if (e.n == 0) return e;
    e.mean = sum / e.n;
    if (e.n < 2) return e;
    double ss = 0.0;
    for (double x : xs)
        if (std::isfinite(x)) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / (e.n - 1) / e.n);
    const boost::math::students_t_distribution<double> t(e.n - 1);
    e.ci95 = boost::math::quantile(t, 0.975) * e.se;
    return e;
}

// splitmix64 finalizer; used to derive independent generator seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t replication,
                                    std::uint64_t purpose) {
    return mix64(mix64(mix64(master) ^ replication) ^ (purpose * 0xd1b54a32d192ed03ULL));
}

}  // namespace aoiq
