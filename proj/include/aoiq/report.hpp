#pragma once

// Report assembly and CSV I/O behind the command-line subcommands.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aoiq/aoi.hpp"
#include "aoiq/des.hpp"
#include "aoiq/scenario.hpp"
#include "aoiq/transforms.hpp"

namespace aoiq {

// ---------------------------------------------------------------------------
// Formatting

inline std::string fmt9(double v) {
    if (!std::isfinite(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string fmt9(const std::optional<double>& v) { return v ? fmt9(*v) : ""; }

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw InvalidParameter("no CSV column '" + name + "'");
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    out.push_back(cell);
    return out;
}

}  // namespace detail

/// Reads the artifact's own CSV output (no quoting; cells never contain commas).
inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw InvalidParameter("empty CSV");
    t.header = detail::split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = detail::split_csv_line(line);
        if (row.size() != t.header.size())
            throw InvalidParameter("CSV row has " + std::to_string(row.size()) + " cells, expected " +
                                   std::to_string(t.header.size()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Writes via a temporary file and rename so readers never see partial output.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Analytic report

struct AnalyticReport {
    SystemParams params;
    CompletionMoments moments;
    double p0 = 0.0;
    double availability = 0.0;
    double mean_waiting = 0.0;
    double mean_sojourn = 0.0;
    double mean_system_size = 0.0;
    std::vector<double> rho_k;
    AaoiResult qm;  // unreliable server
    AaoiResult bl;  // same system, alpha = 0
};

/// Throws Unstable when the load is at or above one.
inline AnalyticReport analyze(const SystemParams& p) {
    const UnreliableQueue q(p);
    q.require_stable();
    AnalyticReport r;
    r.params = p;
    r.moments = q.moments();
    r.p0 = q.idle_prob();
    r.availability = q.availability();
    r.mean_waiting = q.mean_waiting();
    r.mean_sojourn = q.mean_sojourn();
    r.mean_system_size = q.mean_system_size();
    for (const auto& s : p.sources) r.rho_k.push_back(s.lambda * r.moments.eH);
    r.qm = aaoi_all(p);
    r.bl = baseline_aaoi(p);
    return r;
}

inline std::string format_params(const SystemParams& p) {
    std::ostringstream os;
    os << "sources:";
    for (const auto& s : p.sources) os << " " << s.id << ":" << fmt9(s.lambda);
    os << "\nservice: " << to_literal(p.service) << "\nrepair: " << to_literal(p.repair)
       << "\nalpha: " << fmt9(p.alpha) << "\n";
    return os.str();
}

inline std::string format_analytic(const AnalyticReport& r) {
    std::ostringstream os;
    os << format_params(r.params);
    os << "rho: " << fmt9(r.moments.rho) << "\n"
       << "E[H]: " << fmt9(r.moments.eH) << "\n"
       << "E[H^2]: " << fmt9(r.moments.eH2) << "\n"
       << "p0: " << fmt9(r.p0) << "\n"
       << "P_a: " << fmt9(r.availability) << "\n"
       << "E[W]: " << fmt9(r.mean_waiting) << "\n"
       << "E[T]: " << fmt9(r.mean_sojourn) << "\n"
       << "E[N]: " << fmt9(r.mean_system_size) << "\n";
    for (std::size_t k = 0; k < r.qm.sources.size(); ++k) {
        const auto& s = r.qm.sources[k];
        const auto& b = r.bl.sources[k];
        os << "source " << s.source_id << ":\n"
           << "  lambda: " << fmt9(s.lambda) << "\n"
           << "  rho_k: " << fmt9(r.rho_k[k]) << "\n"
           << "  p_b: " << fmt9(s.events.p_b) << "\n"
           << "  p_l: " << fmt9(s.events.p_l) << "\n"
           << "  W*(lambda_k): " << fmt9(s.w_star) << "\n"
           << "  W*'(lambda_k): " << fmt9(s.w_star_d1) << "\n"
           << "  W*''(lambda_k): " << fmt9(s.w_star_d2) << "\n"
           << "  l1: " << fmt9(s.lemmas.l1) << "\n"
           << "  l2: " << fmt9(s.lemmas.l2) << "\n"
           << "  l3: " << fmt9(s.lemmas.l3) << "\n"
           << "  a24: " << fmt9(s.lemmas.a24) << "\n"
           << "  a25: " << fmt9(s.lemmas.a25) << "\n"
           << "  E[XW]: " << fmt9(s.exw) << "\n"
           << "  delta[substitution]: " << fmt9(s.delta_substitution) << "\n"
           << "  delta[as_printed]: " << fmt9(s.delta_as_printed) << "\n"
           << "  baseline[substitution]: " << fmt9(b.delta_substitution) << "\n"
           << "  baseline[as_printed]: " << fmt9(b.delta_as_printed) << "\n";
    }
    return os.str();
}

inline const char* const kAnalyzeHeader =
    "n_sources,service_dist,source,lambda,rho,p0,p_a,mean_waiting,mean_sojourn,p_l,"
    "delta_substitution,delta_as_printed,baseline_substitution,baseline_as_printed";

inline std::string analyze_csv_rows(const Case& c, const AnalyticReport& r) {
    std::ostringstream os;
    for (std::size_t k = 0; k < r.qm.sources.size(); ++k) {
        const auto& s = r.qm.sources[k];
        const auto& b = r.bl.sources[k];
        os << c.n_sources << "," << c.service_label << "," << s.source_id << "," << fmt9(s.lambda)
           << "," << fmt9(r.moments.rho) << "," << fmt9(r.p0) << "," << fmt9(r.availability) << ","
           << fmt9(r.mean_waiting) << "," << fmt9(r.mean_sojourn) << "," << fmt9(s.events.p_l)
           << "," << fmt9(s.delta_substitution) << "," << fmt9(s.delta_as_printed) << ","
           << fmt9(b.delta_substitution) << "," << fmt9(b.delta_as_printed) << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Simulation report

inline std::string format_estimate(const Estimate& e) {
    if (!e.has_ci()) return fmt9(e.mean);
    return fmt9(e.mean) + " +/- " + fmt9(e.ci95);
}

inline std::string format_simulation(const SimulationReport& r) {
    std::ostringstream os;
    os << "replications: " << r.replications << "\n"
       << "idle fraction: " << format_estimate(r.idle_fraction) << "\n"
       << "availability fraction: " << format_estimate(r.availability_fraction) << "\n"
       << "mean system size: " << format_estimate(r.mean_system_size) << "\n"
       << "mean completion time: " << format_estimate(r.mean_completion) << "\n";
    for (std::size_t i = 0; i < r.pgf.size(); ++i)
        os << "system-size pgf at z=" << fmt9(r.pgf_points[i]) << ": " << format_estimate(r.pgf[i])
           << "\n";
    for (const auto& s : r.sources) {
        os << "source " << s.id << ":\n"
           << "  AAoI: " << format_estimate(s.aaoi) << "\n"
           << "  AAoI (cycle estimator): " << format_estimate(s.aaoi_cycles) << "\n"
           << "  mean sojourn: " << format_estimate(s.mean_sojourn) << "\n"
           << "  mean waiting: " << format_estimate(s.mean_waiting) << "\n"
           << "  p_l: " << format_estimate(s.p_l) << "\n"
           << "  E[XW]: " << format_estimate(s.exw) << "\n"
           << "  delivered: " << s.delivered << "\n";
    }
    return os.str();
}

inline const char* const kSimulateHeader =
    "n_sources,service_dist,source,aaoi_mean,aaoi_ci95,aaoi_cycles_mean,mean_sojourn,"
    "mean_waiting,p_l,exw,idle_fraction,availability_fraction,mean_system_size,replications,"
    "stable_flag";

inline std::string simulate_csv_rows(const Case& c, const SimulationReport& r, bool stable) {
    std::ostringstream os;
    for (const auto& s : r.sources)
        os << c.n_sources << "," << c.service_label << "," << s.id << "," << fmt9(s.aaoi.mean) << ","
           << fmt9(s.aaoi.ci95) << "," << fmt9(s.aaoi_cycles.mean) << "," << fmt9(s.mean_sojourn.mean)
           << "," << fmt9(s.mean_waiting.mean) << "," << fmt9(s.p_l.mean) << "," << fmt9(s.exw.mean)
           << "," << fmt9(r.idle_fraction.mean) << "," << fmt9(r.availability_fraction.mean) << ","
           << fmt9(r.mean_system_size.mean) << "," << r.replications << ","
           << (stable ? "true" : "false") << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Sweeps

inline const char* const kSweepHeader =
    "sweep_var,sweep_value,n_sources,service_dist,variant,delta_analytic,delta_baseline,"
    "delta_sim_mean,delta_sim_ci95,p0,p_a,p_l_analytic,p_l_sim,mean_sojourn_analytic,"
    "mean_sojourn_sim,stable_flag";

enum class Variant { substitution, as_printed };

inline std::string to_string(Variant v) {
    return v == Variant::substitution ? "substitution" : "as_printed";
}

struct SweepRow {
    std::string sweep_var;
    std::optional<double> sweep_value;
    int n_sources = 0;
    std::string service_dist;
    Variant variant = Variant::substitution;
    std::optional<double> delta_analytic, delta_baseline, delta_sim_mean, delta_sim_ci95, p0, p_a,
        p_l_analytic, p_l_sim, mean_sojourn_analytic, mean_sojourn_sim;
    bool stable = false;

    std::string to_csv() const {
        std::ostringstream os;
        os << sweep_var << "," << fmt9(sweep_value) << "," << n_sources << "," << service_dist << ","
           << to_string(variant) << "," << fmt9(delta_analytic) << "," << fmt9(delta_baseline) << ","
           << fmt9(delta_sim_mean) << "," << fmt9(delta_sim_ci95) << "," << fmt9(p0) << ","
           << fmt9(p_a) << "," << fmt9(p_l_analytic) << "," << fmt9(p_l_sim) << ","
           << fmt9(mean_sojourn_analytic) << "," << fmt9(mean_sojourn_sim) << ","
           << (stable ? "true" : "false");
        return os.str();
    }
};

inline std::vector<SweepRow> parse_sweep_csv(const CsvTable& t) {
    if (detail::split_csv_line(kSweepHeader) != t.header)
        throw InvalidParameter("CSV header does not match the sweep schema");
    auto num = [](const std::string& cell) -> std::optional<double> {
        if (cell.empty()) return std::nullopt;
        return detail::parse_number(cell);
    };
    std::vector<SweepRow> out;
    for (const auto& r : t.rows) {
        SweepRow s;
        s.sweep_var = r[0];
        s.sweep_value = num(r[1]);
        s.n_sources = std::stoi(r[2]);
        s.service_dist = r[3];
        if (r[4] == "substitution") s.variant = Variant::substitution;
        else if (r[4] == "as_printed") s.variant = Variant::as_printed;
        else throw InvalidParameter("unknown variant '" + r[4] + "'");
        s.delta_analytic = num(r[5]);
        s.delta_baseline = num(r[6]);
        s.delta_sim_mean = num(r[7]);
        s.delta_sim_ci95 = num(r[8]);
        s.p0 = num(r[9]);
        s.p_a = num(r[10]);
        s.p_l_analytic = num(r[11]);
        s.p_l_sim = num(r[12]);
        s.mean_sojourn_analytic = num(r[13]);
        s.mean_sojourn_sim = num(r[14]);
        if (r[15] != "true" && r[15] != "false") throw InvalidParameter("bad stable_flag");
        s.stable = r[15] == "true";
        out.push_back(s);
    }
    return out;
}

/// Rows for one case of a scenario: grid order, then variant. Simulation
/// columns are filled when the scenario has replications > 0.
inline std::vector<SweepRow> sweep_case(const Scenario& sc, const Case& c) {
    if (!sc.sweep) throw InvalidParameter("scenario has no sweep");
    std::vector<SweepRow> rows;
    for (double x : sc.sweep->grid) {
        const SystemParams p = sc.point_params(c, x);
        const UnreliableQueue q(p);
        SweepRow base;
        base.sweep_var = to_string(sc.sweep->var);
        base.sweep_value = sc.sweep_column(c, x);
        base.n_sources = c.n_sources;
        base.service_dist = c.service_label;
        base.stable = q.stable();
        std::optional<AnalyticReport> ar;
        std::optional<SimulationReport> sim;
        if (base.stable) {
            ar = analyze(p);
            if (sc.replications > 0) sim = run_experiment(sc.sim_config(p));
        }
        for (Variant v : {Variant::substitution, Variant::as_printed}) {
            SweepRow row = base;
            row.variant = v;
            if (ar) {
                const auto& s = ar->qm.sources.front();
                const auto& b = ar->bl.sources.front();
                const bool sub = v == Variant::substitution;
                row.delta_analytic = sub ? s.delta_substitution : s.delta_as_printed;
                row.delta_baseline = sub ? b.delta_substitution : b.delta_as_printed;
                row.p0 = ar->p0;
                row.p_a = ar->availability;
                row.p_l_analytic = s.events.p_l;
                row.mean_sojourn_analytic = ar->mean_sojourn;
            }
            if (sim) {
                const auto& ss = sim->sources.front();
                row.delta_sim_mean = ss.aaoi.mean;
                if (ss.aaoi.has_ci()) row.delta_sim_ci95 = ss.aaoi.ci95;
                row.p_l_sim = ss.p_l.mean;
                row.mean_sojourn_sim = ss.mean_sojourn.mean;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

inline std::string sweep_file_name(const Scenario& sc, const Case& c) {
    const std::string stem = sc.preset ? to_string(*sc.preset) : "sweep";
    return stem + "_" + c.service_label + ".csv";
}

/// Writes one CSV per service law (rows: grid order, then source count,
/// then variant). Returns the paths written.
inline std::vector<std::filesystem::path> run_sweep(const Scenario& sc,
                                                    const std::filesystem::path& out_dir) {
    std::vector<std::filesystem::path> written;
    std::vector<std::string> labels;
    for (const auto& c : sc.cases())
        if (std::find(labels.begin(), labels.end(), c.service_label) == labels.end())
            labels.push_back(c.service_label);
    for (const auto& label : labels) {
        std::vector<Case> cases;
        for (const auto& c : sc.cases())
            if (c.service_label == label) cases.push_back(c);
        std::vector<std::vector<SweepRow>> per_case;
        for (const auto& c : cases) per_case.push_back(sweep_case(sc, c));
        std::string content = std::string(kSweepHeader) + "\n";
        const std::size_t per_point = 2;
        for (std::size_t i = 0; i < sc.sweep->grid.size(); ++i)
            for (const auto& rows : per_case)
                for (std::size_t v = 0; v < per_point; ++v)
                    content += rows[i * per_point + v].to_csv() + "\n";
        const auto path = out_dir / sweep_file_name(sc, cases.front());
        write_file_atomic(path, content);
        written.push_back(path);
    }
    return written;
}

// ---------------------------------------------------------------------------
// Analytic vs simulation comparison for source 1

struct ComparePoint {
    int n_sources = 0;
    std::string service_label;
    std::optional<double> x;  // grid value, absent without a sweep
    bool stable = false;
    double delta_substitution = std::numeric_limits<double>::quiet_NaN();
    double delta_as_printed = std::numeric_limits<double>::quiet_NaN();
    double delta_baseline = std::numeric_limits<double>::quiet_NaN();
    Estimate sim;
    double z_substitution = std::numeric_limits<double>::quiet_NaN();
    double z_as_printed = std::numeric_limits<double>::quiet_NaN();
};

struct Comparison {
    std::string sweep_var;
    std::vector<ComparePoint> points;
    double aggregate_z_substitution = 0.0;
    double aggregate_z_as_printed = 0.0;
    double coverage_substitution = 0.0;  // fraction of compared points inside the CI
    double coverage_as_printed = 0.0;
    int compared = 0;
    std::string verdict;
};

inline Comparison run_compare(const Scenario& sc) {
    if (sc.replications < 2) throw InvalidParameter("compare needs at least 2 replications");
    Comparison cmp;
    cmp.sweep_var = sc.sweep ? to_string(sc.sweep->var) : "";
    std::vector<std::optional<double>> xs;
    if (sc.sweep)
        for (double x : sc.sweep->grid) xs.push_back(x);
    else
        xs.push_back(std::nullopt);

    int covered_sub = 0, covered_pr = 0;
    for (const auto& c : sc.cases()) {
        for (const auto& x : xs) {
            const SystemParams p = x ? sc.point_params(c, *x) : sc.base_params(c);
            ComparePoint pt;
            pt.n_sources = c.n_sources;
            pt.service_label = c.service_label;
            pt.x = x;
            pt.stable = UnreliableQueue(p).stable();
            if (pt.stable) {
                const auto qm = aaoi_all(p).sources.front();
                pt.delta_substitution = qm.delta_substitution;
                pt.delta_as_printed = qm.delta_as_printed;
                pt.delta_baseline = baseline_aaoi(p).sources.front().delta_substitution;
                pt.sim = run_experiment(sc.sim_config(p)).sources.front().aaoi;
                pt.z_substitution = pt.sim.z(pt.delta_substitution);
                pt.z_as_printed = pt.sim.z(pt.delta_as_printed);
                cmp.aggregate_z_substitution += std::abs(pt.z_substitution);
                cmp.aggregate_z_as_printed += std::abs(pt.z_as_printed);
                covered_sub += pt.sim.covers(pt.delta_substitution);
                covered_pr += pt.sim.covers(pt.delta_as_printed);
                ++cmp.compared;
            }
            cmp.points.push_back(pt);
        }
    }
    if (cmp.compared > 0) {
        cmp.coverage_substitution = static_cast<double>(covered_sub) / cmp.compared;
        cmp.coverage_as_printed = static_cast<double>(covered_pr) / cmp.compared;
    }
    const double a = cmp.aggregate_z_substitution, b = cmp.aggregate_z_as_printed;
    if (std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(a, b)))
        cmp.verdict = "tie";
    else
        cmp.verdict = a < b ? "substitution" : "as_printed";
    return cmp;
}

inline const char* const kCompareHeader =
    "sweep_var,sweep_value,n_sources,service_dist,delta_substitution,delta_as_printed,"
    "delta_baseline,delta_sim_mean,delta_sim_ci95,z_substitution,z_as_printed,stable_flag";

inline std::string compare_csv(const Comparison& c) {
    std::string out = std::string(kCompareHeader) + "\n";
    for (const auto& p : c.points) {
        std::ostringstream os;
        os << c.sweep_var << "," << fmt9(p.x) << "," << p.n_sources << "," << p.service_label << ","
           << fmt9(p.delta_substitution) << "," << fmt9(p.delta_as_printed) << ","
           << fmt9(p.delta_baseline) << "," << fmt9(p.sim.mean) << "," << fmt9(p.sim.ci95) << ","
           << fmt9(p.z_substitution) << "," << fmt9(p.z_as_printed) << ","
           << (p.stable ? "true" : "false") << "\n";
        out += os.str();
    }
    return out;
}

inline std::string format_compare(const Comparison& c) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-8s %3s %-8s %12s %12s %12s %21s %8s %8s\n",
                  c.sweep_var.empty() ? "point" : c.sweep_var.c_str(), "N", "service",
                  "substitution", "as_printed", "baseline", "simulated (95% CI)", "z_sub", "z_pr");
    os << line;
    for (const auto& p : c.points) {
        const std::string x = p.x ? fmt9(*p.x) : "-";
        if (!p.stable) {
            std::snprintf(line, sizeof line, "%-8s %3d %-8s %s\n", x.c_str(), p.n_sources,
                          p.service_label.c_str(), "unstable");
        } else {
            std::snprintf(line, sizeof line,
                          "%-8s %3d %-8s %12.6f %12.6f %12.6f %10.6f +/- %7.5f %8.2f %8.2f\n",
                          x.c_str(), p.n_sources, p.service_label.c_str(), p.delta_substitution,
                          p.delta_as_printed, p.delta_baseline, p.sim.mean, p.sim.ci95,
                          p.z_substitution, p.z_as_printed);
        }
        os << line;
    }
    os << "aggregate |z|: substitution=" << fmt9(c.aggregate_z_substitution)
       << " as_printed=" << fmt9(c.aggregate_z_as_printed) << "\n"
       << "coverage (inside 95% CI): substitution=" << fmt9(c.coverage_substitution)
       << " as_printed=" << fmt9(c.coverage_as_printed) << " over " << c.compared << " points\n"
       << "verdict: " << c.verdict << "\n";
    return os.str();
}

}  // namespace aoiq
