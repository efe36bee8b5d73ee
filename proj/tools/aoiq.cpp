// aoiq: analytic and simulated age of information for a multi-source
// queue whose server breaks down while serving.
//
// Exit status: 0 success, 1 instability or validation failure, 2 parse error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "aoiq/report.hpp"
#include "aoiq/scenario.hpp"
#include "aoiq/selfcheck.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kParse = 2;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::optional<double> horizon;
    std::string out;
    bool raw_service_mean = false;
    std::string trace;
};

struct ConfigReadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

aoiq::Scenario load(const Options& o) {
    std::ifstream in(o.config);
    if (!in) throw ConfigReadError("cannot read config '" + o.config + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    aoiq::Scenario sc = aoiq::parse_scenario(buf.str());
    if (o.seed) sc.seed = *o.seed;
    if (o.replications) sc.replications = *o.replications;
    if (o.horizon) sc.horizon = aoiq::Horizon::deliveries(*o.horizon);
    if (o.raw_service_mean) {
        if (!sc.preset) throw aoiq::InvalidParameter("--raw-service-mean applies to presets only");
        sc.raw_service_mean = true;
    }
    return sc;
}

// Points a command visits: each grid value, or the base point.
std::vector<std::optional<double>> points_of(const aoiq::Scenario& sc) {
    std::vector<std::optional<double>> xs;
    if (sc.sweep)
        for (double x : sc.sweep->grid) xs.emplace_back(x);
    else
        xs.emplace_back(std::nullopt);
    return xs;
}

aoiq::SystemParams params_at(const aoiq::Scenario& sc, const aoiq::Case& c,
                             const std::optional<double>& x) {
    return x ? sc.point_params(c, *x) : sc.base_params(c);
}

std::string point_title(const aoiq::Scenario& sc, const aoiq::Case& c,
                        const std::optional<double>& x) {
    std::string t = "== N=" + std::to_string(c.n_sources) + " service=" + c.service_label;
    if (x) t += " " + aoiq::to_string(sc.sweep->var) + "=" + aoiq::fmt9(*x);
    return t + " ==\n";
}

int cmd_analyze(const Options& o) {
    const auto sc = load(o);
    std::string csv = std::string(aoiq::kAnalyzeHeader) + "\n";
    int status = kOk;
    for (const auto& c : sc.cases())
        for (const auto& x : points_of(sc)) {
            std::cout << point_title(sc, c, x);
            try {
                const auto r = aoiq::analyze(params_at(sc, c, x));
                std::cout << aoiq::format_analytic(r);
                csv += aoiq::analyze_csv_rows(c, r);
            } catch (const aoiq::Unstable& e) {
                std::cout << "unstable: rho = " << aoiq::fmt9(e.rho()) << " >= 1\n";
                std::cerr << "error: " << e.what() << "\n";
                status = kFailure;
            }
        }
    if (!o.out.empty()) aoiq::write_file_atomic(std::filesystem::path(o.out) / "analyze.csv", csv);
    return status;
}

// Sum of lambda_k E[H_k]; per-source laws allowed.
double offered_load(const aoiq::SystemParams& p) {
    double rho = 0.0;
    for (std::size_t k = 0; k < p.sources.size(); ++k)
        rho += p.sources[k].lambda * aoiq::mean(p.service_of(k)) *
               (1.0 + p.alpha * aoiq::mean(p.repair_of(k)));
    return rho;
}

int cmd_simulate(const Options& o) {
    const auto sc = load(o);
    if (sc.replications < 1) throw aoiq::InvalidParameter("replications must be >= 1");
    std::string csv = std::string(aoiq::kSimulateHeader) + "\n";
    bool traced = false;
    for (const auto& c : sc.cases())
        for (const auto& x : points_of(sc)) {
            const auto p = params_at(sc, c, x);
            const double rho = offered_load(p);
            const bool stable = rho < 1.0 - aoiq::kStabilityMargin;
            std::cout << point_title(sc, c, x);
            if (!stable) std::cout << "warning: unstable, rho = " << aoiq::fmt9(rho) << "\n";
            const auto cfg = sc.sim_config(p);
            if (!o.trace.empty() && !traced) {
                std::string text = "time,event_type,source,queue_len,server_mode\n";
                aoiq::run_replication(cfg, 0, [&](const aoiq::TraceEvent& e) {
                    text += aoiq::fmt9(e.time) + "," + std::string(e.type) + "," +
                            std::to_string(e.source) + "," + std::to_string(e.queue_len) + "," +
                            std::string(aoiq::to_string(e.mode)) + "\n";
                });
                aoiq::write_file_atomic(o.trace, text);
                traced = true;
            }
            const auto r = aoiq::run_experiment(cfg);
            std::cout << aoiq::format_simulation(r);
            csv += aoiq::simulate_csv_rows(c, r, stable);
        }
    if (!o.out.empty())
        aoiq::write_file_atomic(std::filesystem::path(o.out) / "simulate.csv", csv);
    return kOk;
}

int cmd_compare(const Options& o) {
    const auto sc = load(o);
    const auto cmp = aoiq::run_compare(sc);
    const std::string text = aoiq::format_compare(cmp);
    std::cout << text;
    const std::filesystem::path dir = o.out.empty() ? "." : o.out;
    aoiq::write_file_atomic(dir / "compare.txt", text);
    aoiq::write_file_atomic(dir / "compare.csv", aoiq::compare_csv(cmp));
    return kOk;
}

int cmd_sweep(const Options& o) {
    const auto sc = load(o);
    if (!sc.sweep) throw aoiq::InvalidParameter("sweep needs a preset or a 'sweep' key");
    const std::filesystem::path dir = o.out.empty() ? "." : o.out;
    for (const auto& path : aoiq::run_sweep(sc, dir)) std::cout << "wrote " << path.string() << "\n";
    return kOk;
}

int cmd_selfcheck() {
    int failed = 0;
    const auto results = aoiq::run_selfcheck();
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty()) std::cout << "  [" << r.detail << "]";
        std::cout << "\n";
        failed += !r.pass;
    }
    std::cout << results.size() - failed << "/" << results.size() << " properties hold\n";
    return failed ? kFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Age of information in a multi-source queue with server breakdowns"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--replications", o.replications, "independent replications")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--horizon", o.horizon, "source-1 deliveries per replication")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", o.out, "output directory");
        sub->add_flag("--raw-service-mean", o.raw_service_mean,
                      "presets: use E[S] as the raw service mean");
    };
    auto* analyze = app.add_subcommand("analyze", "closed-form report");
    auto* simulate = app.add_subcommand("simulate", "discrete-event simulation report");
    auto* compare = app.add_subcommand("compare", "closed forms against simulation for source 1");
    auto* sweep = app.add_subcommand("sweep", "figure sweep CSVs");
    auto* selfcheck = app.add_subcommand("selfcheck", "run the invariant suite");
    for (auto* s : {analyze, simulate, compare, sweep}) common(s);
    simulate->add_option("--trace", o.trace, "event trace CSV of replication 0 of the first point");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kParse;
    }

    try {
        if (*analyze) return cmd_analyze(o);
        if (*simulate) return cmd_simulate(o);
        if (*compare) return cmd_compare(o);
        if (*sweep) return cmd_sweep(o);
        if (*selfcheck) return cmd_selfcheck();
    } catch (const aoiq::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const ConfigReadError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const aoiq::Unstable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
