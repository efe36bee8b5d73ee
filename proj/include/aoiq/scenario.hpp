#pragma once

// Scenario configuration: explicit systems, figure presets and sweeps.
//
// Text format, one `key = value` per line, '#' starts a comment:
//
//   preset = fig3
//   alpha = 0.05
//   replications = 50
//
// or an explicit system:
//
//   lambda  = 0.5, 0.12
//   service = erlang(k=2, rate=4)
//   repair  = exp(rate=3.3333333333)
//   alpha   = 0.1
//   sweep   = lambda1
//   grid    = 0.3, 0.5, 0.7

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aoiq/des.hpp"
#include "aoiq/dists.hpp"
#include "aoiq/error.hpp"
#include "aoiq/params.hpp"
#include "aoiq/transforms.hpp"

namespace aoiq {

enum class Figure { fig3, fig4, fig5, fig6a, fig6b };
enum class SweepVar { lambda1, rho1, alpha, repair_mean, availability };
enum class ServiceFamily { exp, erlang2, h2 };

inline std::string to_string(Figure f) {
    switch (f) {
        case Figure::fig3: return "fig3";
        case Figure::fig4: return "fig4";
        case Figure::fig5: return "fig5";
        case Figure::fig6a: return "fig6a";
        case Figure::fig6b: return "fig6b";
    }
    return "?";
}

inline std::string to_string(SweepVar v) {
    switch (v) {
        case SweepVar::lambda1: return "lambda1";
        case SweepVar::rho1: return "rho1";
        case SweepVar::alpha: return "alpha";
        case SweepVar::repair_mean: return "repair_mean";
        case SweepVar::availability: return "availability";
    }
    return "?";
}

inline std::string to_string(ServiceFamily f) {
    switch (f) {
        case ServiceFamily::exp: return "exp";
        case ServiceFamily::erlang2: return "erlang2";
        case ServiceFamily::h2: return "h2";
    }
    return "?";
}

struct Sweep {
    SweepVar var = SweepVar::lambda1;
    std::vector<double> grid;
};

/// One curve of a scenario: a source count and a service law.
struct Case {
    int n_sources = 1;
    std::string service_label;
    std::optional<ServiceFamily> family;  // preset cases only
};

struct Scenario {
    std::optional<Figure> preset;

    // Explicit system; used when no preset is given.
    std::optional<SystemParams> params;

    // Preset knobs (caption defaults), each overridable.
    std::vector<int> n_sources{2, 3, 4};
    std::vector<ServiceFamily> families{ServiceFamily::erlang2, ServiceFamily::h2};
    double lambda1 = 0.3;
    double other_lambda = 0.12;
    double mean_service = 0.5;  // E[S], by default the generalized completion mean
    double mean_repair = 0.3;
    double alpha = 0.1;
    double h2_p = 0.7;
    bool raw_service_mean = false;

    std::optional<Sweep> sweep;

    // Simulation settings.
    Horizon horizon = Horizon::deliveries(1e5);
    double warmup = 0.1;
    int replications = 10;
    std::uint64_t seed = 1;

    std::vector<Case> cases() const {
        std::vector<Case> out;
        if (!preset) {
            out.push_back(Case{static_cast<int>(params->sources.size()),
                               family_name(params->service), std::nullopt});
            return out;
        }
        for (auto fam : families)
            for (int n : n_sources) out.push_back(Case{n, to_string(fam), fam});
        return out;
    }

    /// Raw service mean beta1 used by preset cases.
    double preset_service_mean() const {
        return raw_service_mean ? mean_service : mean_service / (1.0 + alpha * mean_repair);
    }

    /// System at the scenario's base point (no sweep applied).
    SystemParams base_params(const Case& c) const {
        if (!preset) return *params;
        const double b1 = preset_service_mean();
        Distribution svc;
        switch (*c.family) {
            case ServiceFamily::exp: svc = make_exponential(1.0 / b1); break;
            case ServiceFamily::erlang2: svc = make_erlang(2, 2.0 / b1); break;
            case ServiceFamily::h2: svc = make_h2_balanced(b1, h2_p); break;
        }
        std::vector<double> lambdas{lambda1};
        for (int i = 1; i < c.n_sources; ++i) lambdas.push_back(other_lambda);
        return make_params(lambdas, svc, make_exponential(1.0 / mean_repair), alpha);
    }

    /// System at one sweep point. Other knobs stay at their base values.
    SystemParams point_params(const Case& c, double x) const {
        SystemParams p = base_params(c);
        if (!sweep) return p;
        switch (sweep->var) {
            case SweepVar::lambda1:
            case SweepVar::availability: p.sources.at(0).lambda = x; break;
            case SweepVar::rho1: {
                const double eh = preset && !raw_service_mean ? mean_service
                                                              : completion_moments(p).eH;
                p.sources.at(0).lambda = x / eh;
                break;
            }
            case SweepVar::alpha: p.alpha = x; break;
            case SweepVar::repair_mean: p.repair = with_mean(p.repair, x); break;
        }
        p.validate();
        return p;
    }

    /// x-column value written to CSV for grid value x: the grid value itself,
    /// except for availability sweeps where the grid is lambda1 and the
    /// column carries the resulting availability.
    std::optional<double> sweep_column(const Case& c, double x) const {
        if (!sweep || sweep->var != SweepVar::availability) return x;
        const UnreliableQueue q(point_params(c, x));
        if (!q.stable()) return std::nullopt;
        return q.availability();
    }

    SimConfig sim_config(const SystemParams& p) const {
        SimConfig cfg;
        cfg.params = p;
        cfg.horizon = horizon;
        cfg.warmup_fraction = warmup;
        cfg.replications = replications;
        cfg.master_seed = seed;
        return cfg;
    }
};

namespace detail {

inline std::vector<double> grid_range(double start, double step, double stop) {
    std::vector<double> g;
    const int n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
    for (int i = 0; i <= n; ++i) g.push_back(std::round((start + i * step) * 1e12) / 1e12);
    return g;
}

inline void apply_preset(Scenario& s, Figure f) {
    s.preset = f;
    s.n_sources = {2, 3, 4};
    s.families = {ServiceFamily::erlang2, ServiceFamily::h2};
    s.lambda1 = 0.3;
    switch (f) {
        case Figure::fig3: s.sweep = Sweep{SweepVar::lambda1, grid_range(0.3, 0.1, 0.9)}; break;
        case Figure::fig4: s.sweep = Sweep{SweepVar::rho1, grid_range(0.05, 0.05, 0.45)}; break;
        case Figure::fig5:
            s.families = {ServiceFamily::exp, ServiceFamily::erlang2, ServiceFamily::h2};
            s.sweep = Sweep{SweepVar::alpha, grid_range(0.0, 0.05, 0.5)};
            break;
        case Figure::fig6a:
            s.n_sources = {2, 4};
            s.families = {ServiceFamily::h2};
            s.sweep = Sweep{SweepVar::repair_mean, grid_range(0.1, 0.1, 0.9)};
            break;
        case Figure::fig6b:
            s.n_sources = {2, 4};
            s.families = {ServiceFamily::h2};
            s.sweep = Sweep{SweepVar::availability, grid_range(0.06, 0.06, 0.6)};
            break;
    }
}

inline std::optional<Figure> figure_from(std::string_view v) {
    for (auto f : {Figure::fig3, Figure::fig4, Figure::fig5, Figure::fig6a, Figure::fig6b})
        if (to_string(f) == v) return f;
    return std::nullopt;
}

inline std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        auto comma = v.find(',', pos);
        if (comma == std::string_view::npos) comma = v.size();
        const auto item = trim(v.substr(pos, comma - pos));
        if (!item.empty()) out.emplace_back(item);
        pos = comma + 1;
    }
    return out;
}

}  // namespace detail

/// Parses scenario text. Every error names the offending key and line.
inline Scenario parse_scenario(std::string_view text) {
    struct Entry {
        std::string value;
        int line;
    };
    std::map<std::string, Entry> entries;
    {
        std::istringstream in{std::string(text)};
        std::string raw;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string_view line = raw;
            if (auto hash = line.find('#'); hash != std::string_view::npos)
                line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ParseError("", line_no, "expected 'key = value'");
            const std::string key(detail::trim(line.substr(0, eq)));
            if (key.empty()) throw ParseError("", line_no, "empty key");
            if (entries.count(key)) throw ParseError(key, line_no, "duplicate key");
            entries.emplace(key, Entry{std::string(detail::trim(line.substr(eq + 1))), line_no});
        }
    }

    static const char* const known[] = {
        "preset",       "lambda",      "service",      "repair",     "alpha",
        "n_sources",    "service_dists", "lambda1",    "other_lambda", "mean_service",
        "mean_repair",  "h2_p",        "raw_service_mean", "sweep",  "grid",
        "replications", "horizon",     "horizon_time", "warmup",     "seed"};
    for (const auto& [key, e] : entries) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ParseError(key, e.line, "unknown key");
    }

    auto get = [&](const char* key) -> const Entry* {
        auto it = entries.find(key);
        return it == entries.end() ? nullptr : &it->second;
    };
    auto number = [&](const char* key, const Entry& e) {
        try {
            return detail::parse_number(e.value);
        } catch (const InvalidParameter& ex) {
            throw ParseError(key, e.line, ex.what());
        }
    };
    auto positive = [&](const char* key, const Entry& e) {
        const double v = number(key, e);
        if (!(v > 0.0)) throw ParseError(key, e.line, "must be positive");
        return v;
    };
    auto number_list = [&](const char* key, const Entry& e) {
        std::vector<double> out;
        for (const auto& item : detail::split_list(e.value)) {
            try {
                out.push_back(detail::parse_number(item));
            } catch (const InvalidParameter& ex) {
                throw ParseError(key, e.line, ex.what());
            }
        }
        if (out.empty()) throw ParseError(key, e.line, "empty list");
        return out;
    };
    auto dist = [&](const char* key, const Entry& e) {
        try {
            return parse_distribution(e.value);
        } catch (const InvalidParameter& ex) {
            throw ParseError(key, e.line, ex.what());
        }
    };

    Scenario s;
    if (const auto* e = get("preset")) {
        const auto f = detail::figure_from(e->value);
        if (!f) throw ParseError("preset", e->line, "unknown preset '" + e->value + "'");
        detail::apply_preset(s, *f);
        for (const char* key : {"lambda", "service", "repair"})
            if (const auto* x = get(key))
                throw ParseError(key, x->line, "not allowed together with a preset");
    } else {
        for (const char* key : {"n_sources", "service_dists", "lambda1", "other_lambda",
                                "mean_service", "mean_repair", "h2_p", "raw_service_mean"})
            if (const auto* x = get(key)) throw ParseError(key, x->line, "requires a preset");
        const auto* lam = get("lambda");
        if (!lam) throw ParseError("lambda", 0, "missing source arrival rates");
        const auto rates = number_list("lambda", *lam);
        for (double r : rates)
            if (!(r > 0.0)) throw ParseError("lambda", lam->line, "arrival rates must be positive");
        const auto* svc = get("service");
        if (!svc) throw ParseError("service", 0, "missing service distribution");
        const Distribution service = dist("service", *svc);
        Distribution repair = Exponential{1.0};
        if (const auto* rep = get("repair")) repair = dist("repair", *rep);
        double alpha = 0.0;
        if (const auto* a = get("alpha")) alpha = number("alpha", *a);
        if (!(alpha >= 0.0)) throw ParseError("alpha", get("alpha")->line, "must be >= 0");
        s.params = make_params(rates, service, repair, alpha);
    }

    if (s.preset) {
        if (const auto* e = get("alpha")) {
            s.alpha = number("alpha", *e);
            if (!(s.alpha >= 0.0)) throw ParseError("alpha", e->line, "must be >= 0");
        }
        if (const auto* e = get("lambda1")) s.lambda1 = positive("lambda1", *e);
        if (const auto* e = get("other_lambda")) s.other_lambda = positive("other_lambda", *e);
        if (const auto* e = get("mean_service")) s.mean_service = positive("mean_service", *e);
        if (const auto* e = get("mean_repair")) s.mean_repair = positive("mean_repair", *e);
        if (const auto* e = get("h2_p")) {
            s.h2_p = number("h2_p", *e);
            if (!(s.h2_p > 0.0 && s.h2_p <= 1.0)) throw ParseError("h2_p", e->line, "must lie in (0,1]");
        }
        if (const auto* e = get("raw_service_mean")) {
            if (e->value == "true") s.raw_service_mean = true;
            else if (e->value == "false") s.raw_service_mean = false;
            else throw ParseError("raw_service_mean", e->line, "expected true or false");
        }
        if (const auto* e = get("n_sources")) {
            s.n_sources.clear();
            for (double v : number_list("n_sources", *e)) {
                if (v != std::floor(v) || v < 1 || v > 64)
                    throw ParseError("n_sources", e->line, "source counts must be integers in [1,64]");
                s.n_sources.push_back(static_cast<int>(v));
            }
        }
        if (const auto* e = get("service_dists")) {
            s.families.clear();
            for (const auto& name : detail::split_list(e->value)) {
                if (name == "exp") s.families.push_back(ServiceFamily::exp);
                else if (name == "erlang2") s.families.push_back(ServiceFamily::erlang2);
                else if (name == "h2") s.families.push_back(ServiceFamily::h2);
                else throw ParseError("service_dists", e->line, "unknown family '" + name + "'");
            }
            if (s.families.empty()) throw ParseError("service_dists", e->line, "empty list");
        }
    }

    if (const auto* e = get("sweep")) {
        if (e->value == "none") {
            s.sweep.reset();
        } else {
            std::optional<SweepVar> var;
            for (auto v : {SweepVar::lambda1, SweepVar::rho1, SweepVar::alpha,
                           SweepVar::repair_mean, SweepVar::availability})
                if (to_string(v) == e->value) var = v;
            if (!var) throw ParseError("sweep", e->line, "unknown sweep variable '" + e->value + "'");
            const auto* g = get("grid");
            if (!g && !(s.sweep && s.sweep->var == *var))
                throw ParseError("grid", e->line, "sweep requires a grid");
            s.sweep = Sweep{*var, s.sweep ? s.sweep->grid : std::vector<double>{}};
        }
    }
    if (const auto* g = get("grid")) {
        if (!s.sweep) throw ParseError("grid", g->line, "grid given without a sweep variable");
        s.sweep->grid = number_list("grid", *g);
        for (std::size_t i = 1; i < s.sweep->grid.size(); ++i)
            if (!(s.sweep->grid[i] > s.sweep->grid[i - 1]))
                throw ParseError("grid", g->line, "grid must be strictly increasing");
        const double lo = s.sweep->grid.front();
        const bool zero_ok = s.sweep->var == SweepVar::alpha;
        if (zero_ok ? lo < 0.0 : !(lo > 0.0))
            throw ParseError("grid", g->line, "grid values out of range");
    }

    if (const auto* e = get("replications")) {
        const double r = number("replications", *e);
        if (r != std::floor(r) || r < 0 || r > 1e7)
            throw ParseError("replications", e->line, "must be a nonnegative integer");
        s.replications = static_cast<int>(r);
    }
    if (const auto* e = get("horizon")) s.horizon = Horizon::deliveries(positive("horizon", *e));
    if (const auto* e = get("horizon_time")) {
        if (get("horizon")) throw ParseError("horizon_time", e->line, "conflicts with 'horizon'");
        s.horizon = Horizon::time(positive("horizon_time", *e));
    }
    if (const auto* e = get("warmup")) {
        s.warmup = number("warmup", *e);
        if (!(s.warmup >= 0.0 && s.warmup < 1.0)) throw ParseError("warmup", e->line, "must lie in [0,1)");
    }
    if (const auto* e = get("seed")) {
        std::size_t used = 0;
        try {
            s.seed = std::stoull(e->value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != e->value.size() || e->value.front() == '-')
            throw ParseError("seed", e->line, "must be a nonnegative integer");
    }
    return s;
}

}  // namespace aoiq
