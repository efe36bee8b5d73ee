#pragma once

// Invariant suite behind `aoiq selfcheck`: one named pass/fail line per
// property, covering every module.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "aoiq/aoi.hpp"
#include "aoiq/des.hpp"
#include "aoiq/dists.hpp"
#include "aoiq/report.hpp"
#include "aoiq/scenario.hpp"
#include "aoiq/transforms.hpp"

namespace aoiq {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace numeric {

/// Richardson-extrapolated derivative of order 1 or 2. Central stencils are
/// used when x - h0 stays inside the domain [lo, inf), forward ones otherwise.
inline double richardson(const std::function<double(double)>& f, double x, int order, double h0,
                         double lo = 0.0) {
    const bool central = x - h0 >= lo;
    auto d = [&](double h) {
        if (order == 1) {
            if (central) return (f(x + h) - f(x - h)) / (2.0 * h);
            return (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h);
        }
        if (central) return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        return (2.0 * f(x) - 5.0 * f(x + h) + 4.0 * f(x + 2.0 * h) - f(x + 3.0 * h)) / (h * h);
    };
    // Central error series runs in h^2, h^4, h^6; forward in h^2, h^3, h^4,
    // so the forward table gets one extra level.
    const int levels = central ? 3 : 4;
    double t[4][4];
    for (int i = 0; i < levels; ++i) t[i][0] = d(h0 / std::pow(2.0, i));
    for (int j = 1; j < levels; ++j) {
        const double ratio = central ? std::pow(4.0, j) : std::pow(2.0, j + 1);
        for (int i = j; i < levels; ++i)
            t[i][j] = t[i][j - 1] + (t[i][j - 1] - t[i - 1][j - 1]) / (ratio - 1.0);
    }
    return t[levels - 1][levels - 1];
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace numeric

/// Stable system points of every figure preset (base point and each grid value).
inline std::vector<std::pair<std::string, SystemParams>> preset_points() {
    std::vector<std::pair<std::string, SystemParams>> out;
    for (auto f : {Figure::fig3, Figure::fig4, Figure::fig5, Figure::fig6a, Figure::fig6b}) {
        Scenario sc;
        detail::apply_preset(sc, f);
        for (const auto& c : sc.cases()) {
            auto label = [&](const std::string& x) {
                return to_string(f) + "/N" + std::to_string(c.n_sources) + "/" + c.service_label +
                       "/" + x;
            };
            const auto base = sc.base_params(c);
            if (UnreliableQueue(base).stable()) out.emplace_back(label("base"), base);
            for (double x : sc.sweep->grid) {
                const auto p = sc.point_params(c, x);
                if (UnreliableQueue(p).stable()) out.emplace_back(label(fmt9(x)), p);
            }
        }
    }
    return out;
}

namespace detail {

inline std::vector<Distribution> reference_distributions() {
    return {make_exponential(2.0),
            make_erlang(2, 4.0),
            make_erlang(3, 1.5),
            make_h2_balanced(0.5, 0.7),
            HyperExp2{0.3, 5.0, 0.8},
            make_deterministic(0.7)};
}

/// One-sample Kolmogorov-Smirnov statistic sqrt(n)*D_n.
inline double ks_statistic(const Distribution& d, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> xs(n);
    for (auto& x : xs) x = sample(d, rng);
    std::sort(xs.begin(), xs.end());
    // Compare at each distinct value, on both sides of the jump.
    double dmax = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && xs[j] == xs[i]) ++j;
        const double below = cdf(d, std::nextafter(xs[i], -1.0));
        dmax = std::max({dmax, std::abs(static_cast<double>(i) / n - below),
                         std::abs(static_cast<double>(j) / n - cdf(d, xs[i]))});
        i = j;
    }
    return std::sqrt(static_cast<double>(n)) * dmax;
}

// Asymptotic Kolmogorov quantile for significance 0.001.
inline constexpr double kKsCritical001 = 1.94947;

}  // namespace detail

inline std::vector<CheckResult> selfcheck_dists() {
    std::vector<CheckResult> out;
    const auto dists = detail::reference_distributions();

    {
        double worst = 0.0;
        std::string where;
        for (const auto& d : dists) {
            if (std::holds_alternative<Deterministic>(d)) continue;  // checked separately below
            for (double s : {0.0, 0.1, 1.0, 10.0})
                for (int order : {1, 2}) {
                    const double h0 = (order == 1 ? 1e-3 : 1e-2) * std::max(1.0, s);
                    const double fd = numeric::richardson([&](double x) { return lst(d, x); }, s,
                                                          order, h0);
                    const double e = numeric::rel_err(lst_deriv(d, s, order), fd);
                    if (e > worst) {
                        worst = e;
                        where = to_literal(d) + " s=" + fmt9(s) + " order=" + std::to_string(order);
                    }
                }
        }
        const auto det = make_deterministic(0.7);
        for (double s : {0.0, 0.1, 1.0, 10.0})
            for (int order : {1, 2}) {
                const double fd =
                    numeric::richardson([&](double x) { return lst(det, x); }, s, order, 1e-2);
                worst = std::max(worst, numeric::rel_err(lst_deriv(det, s, order), fd));
            }
        out.push_back({"dists: lst_deriv matches finite differences", worst <= 1e-8,
                       "max rel err " + fmt9(worst) + (where.empty() ? "" : " at " + where)});
    }
    {
        bool ok = true;
        for (const auto& d : dists) ok = ok && moment(d, 1) * moment(d, 1) <= moment(d, 2) * (1 + 1e-15);
        out.push_back({"dists: m1^2 <= m2", ok, ""});
    }
    {
        double worst = 0.0;
        for (double p : {0.55, 0.7, 0.9, 0.99})
            for (double m1 : {0.2, 0.5, 2.0}) {
                const auto d = make_h2_balanced(m1, p);
                const double c2 = moment(d, 2) / (m1 * m1) - 1.0;
                const double back = (1.0 + std::sqrt((c2 - 1.0) / (c2 + 1.0))) / 2.0;
                worst = std::max(worst, std::abs(back - p));
            }
        out.push_back({"dists: balanced H2 recovers p from c^2", worst <= 1e-12,
                       "max abs err " + fmt9(worst)});
    }
    {
        bool ok = true;
        std::ostringstream det;
        std::uint64_t seed = 11;
        for (const auto& d : dists) {
            const double k = detail::ks_statistic(d, 100000, seed++);
            ok = ok && k < detail::kKsCritical001;
            det << family_name(d) << "=" << fmt9(k) << " ";
        }
        out.push_back({"dists: KS test of samples at 0.001", ok, det.str()});
    }
    return out;
}

inline std::vector<CheckResult> selfcheck_transforms() {
    std::vector<CheckResult> out;
    const auto points = preset_points();

    double worst_d = 0.0, worst_pgf = 0.0, worst_little = 0.0, worst_origin = 0.0;
    std::string where_d;
    for (const auto& [label, p] : points) {
        const UnreliableQueue q(p);
        for (double a : {0.05, 0.1, 0.3, 1.0, 3.0})
            for (int order : {1, 2}) {
                const double fd = numeric::richardson([&](double x) { return q.sojourn_lst(x); }, a,
                                                      order, 1e-3 * std::max(1.0, a));
                const double e = numeric::rel_err(q.sojourn_lst_deriv(a, order), fd);
                if (e > worst_d) {
                    worst_d = e;
                    where_d = label + " a=" + fmt9(a) + " order=" + std::to_string(order);
                }
            }
        worst_pgf = std::max({worst_pgf, std::abs(q.pgf_queue(1.0) - 1.0),
                              std::abs(q.pgf_system(1.0) - 1.0)});
        // Backward Richardson derivative of Q at 1: reflect so the stencil is forward.
        const double dq = -numeric::richardson([&](double u) { return q.pgf_system(1.0 - u); }, 0.0,
                                               1, 1e-3);
        worst_little = std::max(worst_little, numeric::rel_err(dq, q.mean_system_size()));
        // 1 - H*(a) cancels near zero, so the stencil stays coarse.
        const double d0 = numeric::richardson([&](double x) { return q.sojourn_lst(x); }, 0.0, 1, 1e-2);
        worst_origin = std::max({worst_origin, numeric::rel_err(-d0, q.mean_sojourn()),
                                 numeric::rel_err(-q.sojourn_lst_deriv(0.0, 1), q.mean_sojourn())});
    }
    out.push_back({"transforms: sojourn LST derivatives match Richardson", worst_d <= 1e-6,
                   "max rel err " + fmt9(worst_d) + " at " + where_d + " over " +
                       std::to_string(points.size()) + " preset points"});
    out.push_back({"transforms: P(1) = Q(1) = 1", worst_pgf <= 1e-9, "max err " + fmt9(worst_pgf)});
    out.push_back({"transforms: Q'(1) equals mean system size", worst_little <= 1e-6,
                   "max rel err " + fmt9(worst_little)});
    out.push_back({"transforms: -W*'(0+) equals mean sojourn", worst_origin <= 1e-8,
                   "max rel err " + fmt9(worst_origin)});

    {
        bool ok = true;
        for (const auto& [label, p0] : points) {
            SystemParams p = p0;
            p.alpha = 0.0;
            const UnreliableQueue q(p);
            const double b1 = mean(p.service);
            for (double a : {0.0, 0.3, 2.0}) ok = ok && q.kernel(a) == a;
            ok = ok && std::abs(q.idle_prob() - (1.0 - p.total_lambda() * b1)) <= 1e-14;
            ok = ok && q.availability() == 1.0;
            const double pk = p.total_lambda() * moment(p.service, 2) /
                              (2.0 * (1.0 - p.total_lambda() * b1));
            ok = ok && numeric::rel_err(q.mean_waiting(), pk) <= 1e-12;
        }
        out.push_back({"transforms: alpha = 0 reduces to the classic M/G/1", ok, ""});
    }
    return out;
}

inline std::vector<CheckResult> selfcheck_aoi() {
    std::vector<CheckResult> out;
    const auto points = preset_points();
    double worst_l1 = 0.0, worst_re = 0.0;
    bool bound = true;
    for (const auto& [label, p] : points) {
        const auto r = aaoi_all(p);
        for (const auto& s : r.sources) {
            const auto& L = s.lemmas;
            worst_l1 = std::max(worst_l1, numeric::rel_err(L.a24 - L.a25, L.l1));
            worst_re = std::max(worst_re, numeric::rel_err(reassembled_aaoi(s, r.mean_completion),
                                                           s.delta_substitution));
            bound = bound && s.delta_substitution >= 1.0 / s.lambda + r.mean_completion;
        }
    }
    out.push_back({"aoi: l1 = a24 - a25", worst_l1 <= 1e-10, "max rel err " + fmt9(worst_l1)});
    out.push_back({"aoi: parts reassemble to the closed form", worst_re <= 1e-10,
                   "max rel err " + fmt9(worst_re)});
    out.push_back({"aoi: delta >= 1/lambda + E[H]", bound, ""});

    auto monotone = [](Figure f) {
        Scenario sc;
        detail::apply_preset(sc, f);
        bool ok = true;
        std::string det;
        for (const auto& c : sc.cases()) {
            double prev = -1.0;
            for (double x : sc.sweep->grid) {
                const auto p = sc.point_params(c, x);
                if (!UnreliableQueue(p).stable()) break;
                const double d = aaoi_all(p).sources.front().delta_substitution;
                if (d < prev) {
                    ok = false;
                    det += to_string(f) + "/N" + std::to_string(c.n_sources) + "/" +
                           c.service_label + " drops at " + fmt9(x) + "; ";
                }
                prev = d;
            }
        }
        return std::pair{ok, det};
    };
    {
        const auto [ok, det] = monotone(Figure::fig5);
        out.push_back({"aoi: delta nondecreasing in alpha", ok, det});
    }
    {
        const auto [ok, det] = monotone(Figure::fig6a);
        out.push_back({"aoi: delta nondecreasing in repair mean", ok, det});
    }
    return out;
}

inline std::vector<CheckResult> selfcheck_des() {
    std::vector<CheckResult> out;
    // Small stable system with breakdowns and two heterogeneous-rate sources.
    SimConfig cfg;
    cfg.params = make_params({0.5, 0.2}, make_erlang(2, 5.0), make_exponential(1.0 / 0.3), 0.2);
    cfg.horizon = Horizon::deliveries(20000);
    cfg.replications = 20;
    cfg.master_seed = 20240601;
    const UnreliableQueue q(cfg.params);

    std::vector<ReplicationStats> runs;
    bool conserving = true, ordered = true;
    for (int r = 0; r < cfg.replications; ++r) {
        long n = 0;
        auto sink = [&](const TraceEvent& e) {
            if (e.type == "arrival") ++n;
            if (e.type == "departure") --n;
            const bool busy = e.mode != ServerMode::idle;
            conserving = conserving && (busy == (n > 0)) &&
                         static_cast<long>(e.queue_len) == n - (busy ? 1 : 0);
        };
        try {
            runs.push_back(run_replication(cfg, r, r == 0 ? TraceSink(sink) : TraceSink{}));
        } catch (const std::logic_error&) {
            ordered = false;
        }
    }
    out.push_back({"des: server idle iff system empty", conserving, ""});
    out.push_back({"des: per-source deliveries in generation order", ordered, ""});
    if (!ordered) return out;

    double decomp = 0.0;
    bool fractions = true;
    for (const auto& r : runs) {
        decomp = std::max(decomp, r.max_decomposition_error);
        fractions = fractions && r.idle_fraction >= 0.0 && r.idle_fraction <= r.availability_fraction &&
                    r.availability_fraction <= 1.0;
    }
    out.push_back({"des: T = W + service + repairs for every packet", decomp <= 1e-9,
                   "max err " + fmt9(decomp)});
    out.push_back({"des: 0 <= idle fraction <= availability fraction <= 1", fractions, ""});

    auto col = [&](auto get) {
        std::vector<double> v;
        for (const auto& r : runs) v.push_back(get(r));
        return summarize(v);
    };
    auto within = [](const Estimate& e, double v) {
        return std::string("sim ") + fmt9(e.mean) + " se " + fmt9(e.se) + " vs " + fmt9(v);
    };
    {
        const auto e = col([](const ReplicationStats& r) { return r.idle_fraction; });
        out.push_back({"des: idle fraction vs p0 (3 SE)", e.within_se(q.idle_prob(), 3), within(e, q.idle_prob())});
    }
    {
        const auto e = col([](const ReplicationStats& r) { return r.availability_fraction; });
        out.push_back({"des: availability fraction vs P_a (3 SE)", e.within_se(q.availability(), 3),
                       within(e, q.availability())});
    }
    for (std::size_t i = 0; i < cfg.pgf_points.size(); ++i) {
        const double z = cfg.pgf_points[i];
        const auto e = col([&](const ReplicationStats& r) { return r.pgf[i]; });
        out.push_back({"des: system-size pgf at z=" + fmt9(z) + " (3 SE)",
                       e.within_se(q.pgf_system(z), 3), within(e, q.pgf_system(z))});
    }
    for (std::size_t k = 0; k < cfg.params.sources.size(); ++k) {
        const auto e = col([&](const ReplicationStats& r) {
            return r.sources[k].aaoi - r.sources[k].aaoi_cycles;
        });
        out.push_back({"des: source " + std::to_string(k + 1) + " AAoI area and cycle estimators agree (3 SE)",
                       e.within_se(0.0, 3), within(e, 0.0)});
    }
    {
        SimConfig nofail = cfg;
        nofail.params.alpha = 1e-9;
        nofail.replications = 3;
        nofail.horizon = Horizon::deliveries(5000);
        const auto r = run_experiment(nofail);
        out.push_back({"des: availability fraction -> 1 as alpha -> 0",
                       r.availability_fraction.mean > 1.0 - 1e-6, fmt9(r.availability_fraction.mean)});
    }
    {
        SimConfig small = cfg;
        small.replications = 2;
        small.horizon = Horizon::deliveries(3000);
        const auto a = run_replication(small, 1);
        const auto b = run_replication(small, 1);
        const bool same = a.sources[0].aaoi == b.sources[0].aaoi &&
                          a.mean_system_size == b.mean_system_size && a.packets == b.packets;
        out.push_back({"des: identical seed reproduces identical output", same, ""});
    }
    {
        // Per-source laws: exp(mean 0.2) and det(0.6), no breakdowns.
        SimConfig het;
        het.params = make_params({0.4, 0.4}, make_exponential(5.0), make_exponential(1.0), 0.0);
        het.params.sources[1].service = make_deterministic(0.6);
        het.horizon = Horizon::deliveries(20000);
        het.replications = 10;
        het.master_seed = 5;
        bool ok = true;
        std::string det;
        const double want[2] = {0.2, 0.6};
        for (std::size_t k = 0; k < 2; ++k) {
            std::vector<double> v;
            for (int r = 0; r < het.replications; ++r) {
                const auto s = run_replication(het, r).sources[k];
                v.push_back(s.mean_sojourn - s.mean_waiting);
            }
            const auto e = summarize(v);
            // A deterministic law has no spread to compare against.
            ok = ok && (k == 1 ? std::abs(e.mean - want[k]) < 1e-12 : e.within_se(want[k], 3));
            det += "source " + std::to_string(k + 1) + " " + within(e, want[k]) + "; ";
        }
        out.push_back({"des: per-source service laws are honoured", ok, det});
    }
    return out;
}

inline std::vector<CheckResult> selfcheck_cli() {
    std::vector<CheckResult> out;
    Scenario sc = parse_scenario("preset = fig3\nreplications = 0\n");
    const auto rows = sweep_case(sc, sc.cases().front());
    std::string text = std::string(kSweepHeader) + "\n";
    for (const auto& r : rows) text += r.to_csv() + "\n";
    std::istringstream in(text);
    const auto back = parse_sweep_csv(read_csv(in));
    std::string again = std::string(kSweepHeader) + "\n";
    for (const auto& r : back) again += r.to_csv() + "\n";
    out.push_back({"cli: sweep CSV round-trips through the reader", again == text && back.size() == rows.size(), ""});

    bool rejected = false;
    try {
        parse_scenario("preset = fig3\nbogus = 1\n");
    } catch (const ParseError& e) {
        rejected = e.key() == "bogus" && e.line() == 2;
    }
    out.push_back({"cli: unknown key reported with key and line", rejected, ""});
    return out;
}

inline std::vector<CheckResult> run_selfcheck() {
    std::vector<CheckResult> all;
    for (auto part : {selfcheck_dists, selfcheck_transforms, selfcheck_aoi, selfcheck_des, selfcheck_cli}) {
        auto r = part();
        all.insert(all.end(), r.begin(), r.end());
    }
    return all;
}

}  // namespace aoiq
