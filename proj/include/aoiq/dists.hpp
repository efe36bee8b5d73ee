#pragma once

// Service and repair time laws: exact moments, Laplace-Stieltjes transforms
// and their derivatives, CDFs and sampling.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aoiq/error.hpp"

namespace aoiq {

using Rng = std::mt19937_64;

namespace detail {

// Uniform on [0,1) with 53 random bits; portable across standard libraries.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double draw_exponential(Rng& rng, double rate) {
    return -std::log1p(-uniform01(rng)) / rate;
}

inline void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidParameter(std::string(what) + " must be positive and finite");
}

}  // namespace detail

struct Exponential {
    double rate;
    bool operator==(const Exponential&) const = default;
};

struct Erlang {
    int shape;
    double rate;
    bool operator==(const Erlang&) const = default;
};

// Two-branch mixture: with probability p an Exp(rate1) draw, else Exp(rate2).
struct HyperExp2 {
    double p;
    double rate1;
    double rate2;
    bool operator==(const HyperExp2&) const = default;
};

struct Deterministic {
    double value;
    bool operator==(const Deterministic&) const = default;
};

using Distribution = std::variant<Exponential, Erlang, HyperExp2, Deterministic>;

inline void validate(const Distribution& d) {
    std::visit(
        [](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                detail::require_positive(x.rate, "exp rate");
            } else if constexpr (std::is_same_v<T, Erlang>) {
                if (x.shape < 1) throw InvalidParameter("erlang shape must be >= 1");
                detail::require_positive(x.rate, "erlang rate");
            } else if constexpr (std::is_same_v<T, HyperExp2>) {
                if (!(x.p > 0.0 && x.p <= 1.0)) throw InvalidParameter("h2 p must lie in (0,1]");
                detail::require_positive(x.rate1, "h2 rate1");
                detail::require_positive(x.rate2, "h2 rate2");
            } else {
                detail::require_positive(x.value, "det value");
            }
        },
        d);
}

inline Distribution make_exponential(double rate) {
    Distribution d = Exponential{rate};
    validate(d);
    return d;
}

inline Distribution make_erlang(int shape, double rate) {
    Distribution d = Erlang{shape, rate};
    validate(d);
    return d;
}

inline Distribution make_deterministic(double value) {
    Distribution d = Deterministic{value};
    validate(d);
    return d;
}

/// Balanced-means two-phase hyper-exponential with mean m1: rates 2p/m1 and
/// 2(1-p)/m1, so each branch carries half of the mean. p = 1 has no second
/// branch and maps to Exp(1/m1), which keeps the mean at m1.
inline Distribution make_h2_balanced(double m1, double p) {
    detail::require_positive(m1, "h2 mean m1");
    if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("h2 p must lie in (0,1]");
    if (p == 1.0) return Exponential{1.0 / m1};
    return HyperExp2{p, 2.0 * p / m1, 2.0 * (1.0 - p) / m1};
}

/// Exact raw moment E[X^order] for order in {1,2,3}.
inline double moment(const Distribution& d, int order) {
    if (order < 1 || order > 3) throw DomainError("moment order must be 1, 2 or 3");
    const double fact = order == 1 ? 1.0 : (order == 2 ? 2.0 : 6.0);
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return fact / std::pow(x.rate, order);
            } else if constexpr (std::is_same_v<T, Erlang>) {
                double rising = 1.0;
                for (int j = 0; j < order; ++j) rising *= x.shape + j;
                return rising / std::pow(x.rate, order);
            } else if constexpr (std::is_same_v<T, HyperExp2>) {
                return fact * (x.p / std::pow(x.rate1, order) +
                               (1.0 - x.p) / std::pow(x.rate2, order));
            } else {
                return std::pow(x.value, order);
            }
        },
        d);
}

inline double mean(const Distribution& d) { return moment(d, 1); }

/// E[exp(-s X)] for s >= 0.
inline double lst(const Distribution& d, double s) {
    if (!(s >= 0.0)) throw DomainError("LST argument must be >= 0");
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return x.rate / (x.rate + s);
            } else if constexpr (std::is_same_v<T, Erlang>) {
                return std::pow(x.rate / (x.rate + s), x.shape);
            } else if constexpr (std::is_same_v<T, HyperExp2>) {
                return x.p * x.rate1 / (x.rate1 + s) + (1.0 - x.p) * x.rate2 / (x.rate2 + s);
            } else {
                return std::exp(-s * x.value);
            }
        },
        d);
}

/// 1 - E[exp(-s X)], evaluated without cancellation for small s.
inline double lst_complement(const Distribution& d, double s) {
    if (!(s >= 0.0)) throw DomainError("LST argument must be >= 0");
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return s / (x.rate + s);
            } else if constexpr (std::is_same_v<T, Erlang>) {
                return -std::expm1(-x.shape * std::log1p(s / x.rate));
            } else if constexpr (std::is_same_v<T, HyperExp2>) {
                return x.p * s / (x.rate1 + s) + (1.0 - x.p) * s / (x.rate2 + s);
            } else {
                return -std::expm1(-s * x.value);
            }
        },
        d);
}

/// d^order/ds^order of the LST, order in {1,2}. At s = 0 these are -E[X]
/// and E[X^2].
inline double lst_deriv(const Distribution& d, double s, int order) {
    if (order != 1 && order != 2) throw DomainError("LST derivative order must be 1 or 2");
    if (!(s >= 0.0)) throw DomainError("LST argument must be >= 0");
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                const double q = x.rate + s;
                return order == 1 ? -x.rate / (q * q) : 2.0 * x.rate / (q * q * q);
            } else if constexpr (std::is_same_v<T, Erlang>) {
                const double k = x.shape;
                const double base = std::pow(x.rate / (x.rate + s), x.shape);
                const double q = x.rate + s;
                return order == 1 ? -k * base / q : k * (k + 1.0) * base / (q * q);
            } else if constexpr (std::is_same_v<T, HyperExp2>) {
                const double q1 = x.rate1 + s;
                const double q2 = x.rate2 + s;
                if (order == 1)
                    return -x.p * x.rate1 / (q1 * q1) - (1.0 - x.p) * x.rate2 / (q2 * q2);
                return 2.0 * x.p * x.rate1 / (q1 * q1 * q1) +
                       2.0 * (1.0 - x.p) * x.rate2 / (q2 * q2 * q2);
            } else {
                const double e = std::exp(-s * x.value);
                return order == 1 ? -x.value * e : x.value * x.value * e;
            }
        },
        d);
}

inline double cdf(const Distribution& d, double t) {
    if (t < 0.0) return 0.0;
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return -std::expm1(-x.rate * t);
            } else if constexpr (std::is_same_v<T, Erlang>) {
                // 1 - sum_{n<k} e^{-rt} (rt)^n / n!
                const double rt = x.rate * t;
                double term = std::exp(-rt);
                double tail = 0.0;
                for (int n = 0; n < x.shape; ++n) {
                    tail += term;
                    term *= rt / (n + 1);
                }
                return 1.0 - tail;
            } else if constexpr (std::is_same_v<T, HyperExp2>) {
                return -x.p * std::expm1(-x.rate1 * t) - (1.0 - x.p) * std::expm1(-x.rate2 * t);
            } else {
                return t >= x.value ? 1.0 : 0.0;
            }
        },
        d);
}

inline double sample(const Distribution& d, Rng& rng) {
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return detail::draw_exponential(rng, x.rate);
            } else if constexpr (std::is_same_v<T, Erlang>) {
                double sum = 0.0;
                for (int j = 0; j < x.shape; ++j) sum += detail::draw_exponential(rng, x.rate);
                return sum;
            } else if constexpr (std::is_same_v<T, HyperExp2>) {
                const bool first = detail::uniform01(rng) < x.p;
                return detail::draw_exponential(rng, first ? x.rate1 : x.rate2);
            } else {
                return x.value;
            }
        },
        d);
}

// Same law rescaled so its mean becomes new_mean (shape parameters kept).
inline Distribution with_mean(const Distribution& d, double new_mean) {
    detail::require_positive(new_mean, "mean");
    const double f = mean(d) / new_mean;
    return std::visit(
        [&](const auto& x) -> Distribution {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return Exponential{x.rate * f};
            } else if constexpr (std::is_same_v<T, Erlang>) {
                return Erlang{x.shape, x.rate * f};
            } else if constexpr (std::is_same_v<T, HyperExp2>) {
                return HyperExp2{x.p, x.rate1 * f, x.rate2 * f};
            } else {
                return Deterministic{new_mean};
            }
        },
        d);
}

// ---------------------------------------------------------------------------
// Literal syntax: exp(rate=..), erlang(k=..,rate=..), h2(m1=..,p=..), det(value=..).
// Also accepted: exp(mean=..) and h2(p=..,rate1=..,rate2=..) for unbalanced mixtures.

inline std::string to_literal(const Distribution& d) {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                os << "exp(rate=" << x.rate << ")";
            } else if constexpr (std::is_same_v<T, Erlang>) {
                os << "erlang(k=" << x.shape << ",rate=" << x.rate << ")";
            } else if constexpr (std::is_same_v<T, HyperExp2>) {
                os << "h2(p=" << x.p << ",rate1=" << x.rate1 << ",rate2=" << x.rate2 << ")";
            } else {
                os << "det(value=" << x.value << ")";
            }
        },
        d);
    return os.str();
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline double parse_number(std::string_view text) {
    const std::string s(trim(text));
    if (s.empty()) throw InvalidParameter("empty number");
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InvalidParameter("not a number: '" + s + "'");
    }
    if (used != s.size()) throw InvalidParameter("not a number: '" + s + "'");
    return v;
}

}  // namespace detail

/// Parses a distribution literal. Throws InvalidParameter on malformed text
/// or invalid parameter values.
inline Distribution parse_distribution(std::string_view text) {
    using detail::trim;
    const std::string_view t = trim(text);
    const auto open = t.find('(');
    if (open == std::string_view::npos || t.back() != ')')
        throw InvalidParameter("malformed distribution literal '" + std::string(t) + "'");
    const std::string family(trim(t.substr(0, open)));
    const std::string_view body = t.substr(open + 1, t.size() - open - 2);

    std::vector<std::pair<std::string, double>> args;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        auto comma = body.find(',', pos);
        if (comma == std::string_view::npos) comma = body.size();
        const std::string_view item = trim(body.substr(pos, comma - pos));
        if (!item.empty()) {
            const auto eq = item.find('=');
            if (eq == std::string_view::npos)
                throw InvalidParameter("expected name=value in '" + std::string(item) + "'");
            args.emplace_back(std::string(trim(item.substr(0, eq))),
                              detail::parse_number(item.substr(eq + 1)));
        }
        pos = comma + 1;
    }

    auto take = [&](const char* name) -> std::optional<double> {
        for (auto it = args.begin(); it != args.end(); ++it) {
            if (it->first == name) {
                const double v = it->second;
                args.erase(it);
                return v;
            }
        }
        return std::nullopt;
    };
    auto need = [&](const char* name) -> double {
        auto v = take(name);
        if (!v) throw InvalidParameter(family + "(...) requires '" + name + "'");
        return *v;
    };

    Distribution d;
    if (family == "exp") {
        if (auto m = take("mean")) {
            detail::require_positive(*m, "exp mean");
            d = Exponential{1.0 / *m};
        } else {
            d = Exponential{need("rate")};
        }
    } else if (family == "erlang") {
        const double k = need("k");
        if (k != std::floor(k) || k < 1 || k > 1000)
            throw InvalidParameter("erlang k must be a positive integer");
        d = Erlang{static_cast<int>(k), need("rate")};
    } else if (family == "h2") {
        if (auto m1 = take("m1")) {
            d = make_h2_balanced(*m1, need("p"));
        } else {
            const double p = need("p");
            d = HyperExp2{p, need("rate1"), need("rate2")};
        }
    } else if (family == "det") {
        d = Deterministic{need("value")};
    } else {
        throw InvalidParameter("unknown distribution family '" + family + "'");
    }
    if (!args.empty()) throw InvalidParameter("unknown argument '" + args.front().first + "'");
    validate(d);
    return d;
}

inline std::string family_name(const Distribution& d) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return "exp";
            } else if constexpr (std::is_same_v<T, Erlang>) {
                return "erlang" + std::to_string(x.shape);
            } else if constexpr (std::is_same_v<T, HyperExp2>) {
                return "h2";
            } else {
                return "det";
            }
        },
        d);
}

}  // namespace aoiq
