#pragma once

// Discrete-event simulator of the multi-source FCFS queue with active
// breakdowns. The server can only fail while it serves; a failure freezes
// the remaining service, a repair is drawn and completed, and service then
// resumes with the frozen remainder under a fresh failure clock.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "aoiq/dists.hpp"
#include "aoiq/params.hpp"
#include "aoiq/stats.hpp"

namespace aoiq {

enum class ServerMode { idle, serving, repairing };

inline std::string_view to_string(ServerMode m) {
    switch (m) {
        case ServerMode::idle: return "idle";
        case ServerMode::serving: return "serving";
        case ServerMode::repairing: return "repairing";
    }
    return "?";
}

/// Piecewise-linear age process of one source at the destination. Age grows
/// with slope 1 from U = 0 at t = 0 and drops to t - g at each delivery.
class AoiTracker {
public:
    double last_time() const { return last_time_; }
    double last_generation() const { return last_gen_; }
    double area() const { return area_; }
    std::uint64_t delivered() const { return delivered_; }
    double age_at(double t) const { return t - last_gen_; }

    /// Area under the age curve over [0, t] for t at or after the last delivery.
    double area_until(double t) const { return area_ + trapezoid(last_time_, t); }

    void deliver(double t, double generation) {
        if (t < last_time_ || generation <= last_gen_ || generation > t)
            throw std::logic_error("out-of-order delivery in AoI tracker");
        area_ += trapezoid(last_time_, t);
        last_time_ = t;
        last_gen_ = generation;
        ++delivered_;
    }

private:
    double trapezoid(double t0, double t1) const {
        const double a0 = t0 - last_gen_;
        const double a1 = t1 - last_gen_;
        return 0.5 * (a1 * a1 - a0 * a0);
    }

    double last_time_ = 0.0;
    double last_gen_ = 0.0;
    double area_ = 0.0;
    std::uint64_t delivered_ = 0;
};

inline void aoi_area_update(AoiTracker& tracker, double t, double generation) {
    tracker.deliver(t, generation);
}

enum class ArrivalClass { unclassified, previous_in_system, previous_delivered };

struct SourceOccupancy {
    std::uint64_t arrivals = 0;   // arrivals so far
    std::uint64_t in_system = 0;  // packets queued or in service
};

/// Must be called before the new arrival is counted. Under per-source FCFS,
/// any same-source packet in the system implies the previous one is.
inline ArrivalClass classify_arrival(const SourceOccupancy& occ) {
    if (occ.arrivals == 0) return ArrivalClass::unclassified;
    return occ.in_system > 0 ? ArrivalClass::previous_in_system
                             : ArrivalClass::previous_delivered;
}

struct Horizon {
    enum class Kind { deliveries, time };
    Kind kind = Kind::deliveries;
    double value = 1e5;

    // Count of source-1 (first listed source) deliveries, warmup included.
    static Horizon deliveries(double n) { return {Kind::deliveries, n}; }
    static Horizon time(double t) { return {Kind::time, t}; }
};

struct SimConfig {
    SystemParams params;
    Horizon horizon;
    double warmup_fraction = 0.1;
    int replications = 1;
    std::uint64_t master_seed = 1;
    std::vector<double> pgf_points{0.3, 0.6, 0.9};
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const {
        params.validate();
        if (!(horizon.value > 0.0) || !std::isfinite(horizon.value))
            throw InvalidParameter("simulation horizon must be positive");
        if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
            throw InvalidParameter("warmup fraction must lie in [0,1)");
        if (replications < 1) throw InvalidParameter("replications must be >= 1");
    }
};

struct TraceEvent {
    double time;
    std::string_view type;  // arrival, service_start, failure, repair_end, departure
    int source;
    std::size_t queue_len;  // packets waiting, excluding the one at the server
    ServerMode mode;        // mode after the event
};

using TraceSink = std::function<void(const TraceEvent&)>;

struct SourceRunStats {
    int id = 0;
    double aaoi = std::numeric_limits<double>::quiet_NaN();         // area / window
    double aaoi_cycles = std::numeric_limits<double>::quiet_NaN();  // rate * mean(B)
    double mean_sojourn = std::numeric_limits<double>::quiet_NaN();
    double mean_waiting = std::numeric_limits<double>::quiet_NaN();
    double p_l = std::numeric_limits<double>::quiet_NaN();
    double exw = std::numeric_limits<double>::quiet_NaN();  // mean X*W
    // Split of exw by arrival class: E[X W 1{class}].
    double exw_in_system = std::numeric_limits<double>::quiet_NaN();
    double exw_delivered = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t recorded = 0;  // packets arriving inside the window
    std::uint64_t delivered = 0;
};

struct ReplicationStats {
    std::vector<SourceRunStats> sources;
    double window = 0.0;
    double idle_fraction = std::numeric_limits<double>::quiet_NaN();
    double availability_fraction = std::numeric_limits<double>::quiet_NaN();
    double mean_system_size = std::numeric_limits<double>::quiet_NaN();
    double mean_completion = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> pgf;
    std::uint64_t packets = 0;
    double max_decomposition_error = 0.0;  // max |T - (W + S + repairs)|
};

namespace detail {

inline constexpr std::uint64_t kStreamService = 1;
inline constexpr std::uint64_t kStreamFailure = 2;
inline constexpr std::uint64_t kStreamRepair = 3;
inline constexpr std::uint64_t kStreamArrivalBase = 100;

struct Packet {
    std::size_t src;
    double gen;
    double x;  // NaN for a source's first packet
    ArrivalClass cls;
    bool record;
    double service = 0.0;
    double repairs = 0.0;
    double start = 0.0;
};

}  // namespace detail

/// One independent replication. Deterministic in (config.master_seed, rep).
inline ReplicationStats run_replication(const SimConfig& config, int rep,
                                        const TraceSink& trace = {}) {
    using detail::Packet;
    config.validate();
    const auto& P = config.params;
    const std::size_t ns = P.sources.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    const auto seed = [&](std::uint64_t purpose) {
        return substream_seed(config.master_seed, static_cast<std::uint64_t>(rep), purpose);
    };
    Rng service_rng(seed(detail::kStreamService));
    Rng failure_rng(seed(detail::kStreamFailure));
    Rng repair_rng(seed(detail::kStreamRepair));
    std::vector<Rng> arrival_rng;
    for (std::size_t k = 0; k < ns; ++k) arrival_rng.emplace_back(seed(detail::kStreamArrivalBase + k));

    std::vector<double> next_arrival(ns);
    for (std::size_t k = 0; k < ns; ++k)
        next_arrival[k] = detail::draw_exponential(arrival_rng[k], P.sources[k].lambda);

    const bool by_time = config.horizon.kind == Horizon::Kind::time;
    const double t_open = by_time ? config.warmup_fraction * config.horizon.value : 0.0;
    const double t_close = by_time ? config.horizon.value : inf;
    const auto target = static_cast<std::uint64_t>(std::llround(config.horizon.value));
    const auto warm = static_cast<std::uint64_t>(
        std::floor(config.warmup_fraction * static_cast<double>(target)));

    double now = 0.0;
    ServerMode mode = ServerMode::idle;
    std::deque<Packet> queue;
    Packet current{};
    double service_end = inf, fail_at = inf, repair_end = inf, remaining = 0.0;
    std::size_t in_system = 0;

    std::vector<AoiTracker> trackers(ns);
    std::vector<SourceOccupancy> occ(ns);
    std::vector<double> last_arrival(ns, 0.0);
    std::uint64_t first_source_delivered = 0;

    bool open = false, closed = false, arrivals_stopped = false;
    double window_start = 0.0, window_end = 0.0;
    std::vector<double> area_at_open(ns, 0.0), area_at_close(ns, 0.0);
    double idle_time = 0.0, avail_time = 0.0, size_area = 0.0;
    std::vector<double> pgf_area(config.pgf_points.size(), 0.0);

    // Packet-level accumulators (packets arriving inside the window).
    struct Acc {
        std::uint64_t recorded = 0, delivered = 0, classified = 0, left = 0;
        double sum_t = 0.0, sum_w = 0.0, sum_xw = 0.0, sum_xw_l = 0.0, sum_b = 0.0;
    };
    std::vector<Acc> acc(ns);
    double sum_completion = 0.0;
    std::uint64_t completions = 0;
    double max_decomp = 0.0;

    auto emit = [&](std::string_view type, std::size_t src) {
        if (trace) trace(TraceEvent{now, type, P.sources[src].id, queue.size(), mode});
    };

    auto advance = [&](double t) {
        if (open && !closed) {
            const double dt = t - now;
            if (mode == ServerMode::idle) idle_time += dt;
            if (mode != ServerMode::repairing) avail_time += dt;
            size_area += dt * static_cast<double>(in_system);
            for (std::size_t i = 0; i < pgf_area.size(); ++i)
                pgf_area[i] += dt * std::pow(config.pgf_points[i], static_cast<double>(in_system));
        }
        now = t;
    };

    auto open_window = [&] {
        open = true;
        window_start = now;
        for (std::size_t k = 0; k < ns; ++k) area_at_open[k] = trackers[k].area_until(now);
    };

    auto close_window = [&] {
        closed = true;
        window_end = now;
        for (std::size_t k = 0; k < ns; ++k) area_at_close[k] = trackers[k].area_until(now);
        arrivals_stopped = true;
        std::fill(next_arrival.begin(), next_arrival.end(), inf);
    };

    auto start_service = [&](Packet p) {
        current = p;
        current.start = now;
        current.service = sample(P.service_of(p.src), service_rng);
        service_end = now + current.service;
        fail_at = P.alpha > 0.0 ? now + detail::draw_exponential(failure_rng, P.alpha) : inf;
        mode = ServerMode::serving;
        emit("service_start", p.src);
    };

    if (!by_time && warm == 0) open_window();

    while (true) {
        double server_t = inf;
        if (mode == ServerMode::serving) server_t = std::min(service_end, fail_at);
        else if (mode == ServerMode::repairing) server_t = repair_end;
        std::size_t arr_k = 0;
        double arr_t = inf;
        for (std::size_t k = 0; k < ns; ++k)
            if (next_arrival[k] < arr_t) {
                arr_t = next_arrival[k];
                arr_k = k;
            }
        const double t = std::min(server_t, arr_t);

        if (by_time) {
            if (!open && t >= t_open) {
                advance(t_open);
                open_window();
                continue;
            }
            if (!closed && t >= t_close) {
                advance(t_close);
                close_window();
                continue;
            }
        }
        if (t == inf) break;
        advance(t);

        if (server_t <= arr_t) {
            if (mode == ServerMode::serving && service_end <= fail_at) {
                const Packet p = current;
                const std::size_t k = p.src;
                mode = ServerMode::idle;
                service_end = fail_at = inf;
                --in_system;
                --occ[k].in_system;
                trackers[k].deliver(now, p.gen);
                if (p.record) {
                    auto& a = acc[k];
                    const double w = p.start - p.gen;
                    const double tt = now - p.gen;
                    ++a.delivered;
                    a.sum_t += tt;
                    a.sum_w += w;
                    if (p.cls != ArrivalClass::unclassified) {
                        a.sum_xw += p.x * w;
                        if (p.cls == ArrivalClass::previous_delivered) a.sum_xw_l += p.x * w;
                        a.sum_b += 0.5 * p.x * p.x + p.x * tt;
                    }
                    sum_completion += p.service + p.repairs;
                    ++completions;
                    max_decomp = std::max(max_decomp, std::abs(tt - (w + p.service + p.repairs)));
                }
                if (queue.empty()) {
                    emit("departure", k);
                } else {
                    const Packet next = queue.front();
                    queue.pop_front();
                    mode = ServerMode::serving;  // the next packet enters service at once
                    emit("departure", k);
                    start_service(next);
                }
                if (k == 0 && !by_time) {
                    ++first_source_delivered;
                    if (!open && first_source_delivered >= warm) open_window();
                    if (!closed && first_source_delivered >= target) close_window();
                }
            } else if (mode == ServerMode::serving) {
                remaining = service_end - now;
                const double r = sample(P.repair_of(current.src), repair_rng);
                current.repairs += r;
                repair_end = now + r;
                service_end = fail_at = inf;
                mode = ServerMode::repairing;
                emit("failure", current.src);
            } else {
                repair_end = inf;
                service_end = now + remaining;
                fail_at = now + detail::draw_exponential(failure_rng, P.alpha);
                mode = ServerMode::serving;
                emit("repair_end", current.src);
            }
        } else {
            const std::size_t k = arr_k;
            Packet p{};
            p.src = k;
            p.gen = now;
            p.cls = classify_arrival(occ[k]);
            p.x = occ[k].arrivals > 0 ? now - last_arrival[k] : nan;
            p.record = open && !closed;
            if (p.record) {
                auto& a = acc[k];
                ++a.recorded;
                if (p.cls != ArrivalClass::unclassified) {
                    ++a.classified;
                    if (p.cls == ArrivalClass::previous_delivered) ++a.left;
                }
            }
            ++occ[k].arrivals;
            ++occ[k].in_system;
            ++in_system;
            last_arrival[k] = now;
            next_arrival[k] = now + detail::draw_exponential(arrival_rng[k], P.sources[k].lambda);
            if (mode == ServerMode::idle) {
                mode = ServerMode::serving;
                emit("arrival", k);
                start_service(p);
            } else {
                queue.push_back(p);
                emit("arrival", k);
            }
        }
    }

    ReplicationStats out;
    out.window = window_end - window_start;
    const double win = out.window;
    if (win > 0.0) {
        out.idle_fraction = idle_time / win;
        out.availability_fraction = avail_time / win;
        out.mean_system_size = size_area / win;
        for (double a : pgf_area) out.pgf.push_back(a / win);
    } else {
        out.pgf.assign(pgf_area.size(), nan);
    }
    if (completions > 0) out.mean_completion = sum_completion / static_cast<double>(completions);
    out.max_decomposition_error = max_decomp;
    for (std::size_t k = 0; k < ns; ++k) {
        SourceRunStats s;
        const auto& a = acc[k];
        s.id = P.sources[k].id;
        s.recorded = a.recorded;
        s.delivered = a.delivered;
        out.packets += a.delivered;
        if (win > 0.0 && trackers[k].delivered() > 0)
            s.aaoi = (area_at_close[k] - area_at_open[k]) / win;
        if (a.delivered > 0) {
            s.mean_sojourn = a.sum_t / static_cast<double>(a.delivered);
            s.mean_waiting = a.sum_w / static_cast<double>(a.delivered);
        }
        if (a.classified > 0) {
            const double c = static_cast<double>(a.classified);
            s.p_l = static_cast<double>(a.left) / c;
            s.exw = a.sum_xw / c;
            s.exw_delivered = a.sum_xw_l / c;
            s.exw_in_system = (a.sum_xw - a.sum_xw_l) / c;
            if (win > 0.0) s.aaoi_cycles = static_cast<double>(a.recorded) / win * (a.sum_b / c);
        }
        out.sources.push_back(s);
    }
    return out;
}

struct SourceSimReport {
    int id = 0;
    Estimate aaoi;
    Estimate aaoi_cycles;
    Estimate mean_sojourn;
    Estimate mean_waiting;
    Estimate p_l;
    Estimate exw;
    Estimate exw_in_system;
    Estimate exw_delivered;
    std::uint64_t delivered = 0;
};

struct SimulationReport {
    int replications = 0;
    std::vector<SourceSimReport> sources;
    Estimate idle_fraction;
    Estimate availability_fraction;
    Estimate mean_system_size;
    Estimate mean_completion;
    std::vector<double> pgf_points;
    std::vector<Estimate> pgf;
    std::uint64_t delivered_total = 0;
    double max_decomposition_error = 0.0;

    const SourceSimReport& source(int id) const {
        for (const auto& s : sources)
            if (s.id == id) return s;
        throw InvalidParameter("unknown source id " + std::to_string(id));
    }
};

/// Runs all replications (concurrently when threads allow) and aggregates
/// them in replication-index order.
inline SimulationReport run_experiment(const SimConfig& config) {
    config.validate();
    const int reps = config.replications;
    std::vector<ReplicationStats> runs(static_cast<std::size_t>(reps));

    unsigned workers = config.threads ? config.threads : std::thread::hardware_concurrency();
    workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(reps));
    if (workers == 1) {
        for (int r = 0; r < reps; ++r) runs[r] = run_replication(config, r);
    } else {
        std::atomic<int> next{0};
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (int r = next++; r < reps; r = next++) runs[r] = run_replication(config, r);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    SimulationReport rep;
    rep.replications = reps;
    rep.pgf_points = config.pgf_points;
    std::vector<double> col(static_cast<std::size_t>(reps));
    auto gather = [&](auto getter) {
        for (int r = 0; r < reps; ++r) col[r] = getter(runs[r]);
        return summarize(col);
    };

    const std::size_t ns = config.params.sources.size();
    for (std::size_t k = 0; k < ns; ++k) {
        SourceSimReport s;
        s.id = config.params.sources[k].id;
        s.aaoi = gather([&](const ReplicationStats& r) { return r.sources[k].aaoi; });
        s.aaoi_cycles = gather([&](const ReplicationStats& r) { return r.sources[k].aaoi_cycles; });
        s.mean_sojourn = gather([&](const ReplicationStats& r) { return r.sources[k].mean_sojourn; });
        s.mean_waiting = gather([&](const ReplicationStats& r) { return r.sources[k].mean_waiting; });
        s.p_l = gather([&](const ReplicationStats& r) { return r.sources[k].p_l; });
        s.exw = gather([&](const ReplicationStats& r) { return r.sources[k].exw; });
        s.exw_in_system =
            gather([&](const ReplicationStats& r) { return r.sources[k].exw_in_system; });
        s.exw_delivered =
            gather([&](const ReplicationStats& r) { return r.sources[k].exw_delivered; });
        for (const auto& r : runs) s.delivered += r.sources[k].delivered;
        rep.delivered_total += s.delivered;
        rep.sources.push_back(s);
    }
    rep.idle_fraction = gather([](const ReplicationStats& r) { return r.idle_fraction; });
    rep.availability_fraction =
        gather([](const ReplicationStats& r) { return r.availability_fraction; });
    rep.mean_system_size = gather([](const ReplicationStats& r) { return r.mean_system_size; });
    rep.mean_completion = gather([](const ReplicationStats& r) { return r.mean_completion; });
    for (std::size_t i = 0; i < config.pgf_points.size(); ++i)
        rep.pgf.push_back(gather([&](const ReplicationStats& r) { return r.pgf[i]; }));
    for (const auto& r : runs)
        rep.max_decomposition_error = std::max(rep.max_decomposition_error, r.max_decomposition_error);
    return rep;
}

}  // namespace aoiq
