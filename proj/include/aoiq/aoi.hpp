#pragma once

// Closed-form average age of information per source.
//
// For source k with inter-arrival X and previous-packet sojourn T, the age
// area per update splits into E[X^2]/2 + E[X W] + E[X] E[H]. E[X W] is
// conditioned on whether the previous same-source packet is still in the
// system at the new arrival (event "b", X < T) or has already left
// (event "l"). All conditional terms reduce to W*(lambda_k) and its first
// two derivatives, where W* is the sojourn LST of the whole queue.

#include <utility>
#include <vector>

#include "aoiq/params.hpp"
#include "aoiq/transforms.hpp"

namespace aoiq {

struct EventProbs {
    double p_b = 0.0;  // previous same-source packet still in system
    double p_l = 0.0;  // previous same-source packet already delivered
};

struct LemmaTerms {
    double l1 = 0.0;   // E[(T_prev - X) X | b]
    double l2 = 0.0;   // E[(other-source work arriving during X) X | b]
    double l3 = 0.0;   // E[(other-source work ahead) X | l]
    double a24 = 0.0;  // E[T_prev X | b]
    double a25 = 0.0;  // E[X^2 | b]
};

struct SourceAaoi {
    int source_id = 0;
    double lambda = 0.0;
    double delta_substitution = 0.0;
    double delta_as_printed = 0.0;
    double w_star = 0.0;     // W*(lambda_k)
    double w_star_d1 = 0.0;  // W*'(lambda_k)
    double w_star_d2 = 0.0;  // W*''(lambda_k)
    double rho_other = 0.0;
    EventProbs events;
    LemmaTerms lemmas;
    double exw = 0.0;  // E[X W] assembled from the lemma terms
};

struct AaoiResult {
    std::vector<SourceAaoi> sources;
    double mean_waiting = 0.0;     // E[W]
    double mean_completion = 0.0;  // E[S] = E[H]

    const SourceAaoi& source(int id) const {
        for (const auto& s : sources)
            if (s.source_id == id) return s;
        throw InvalidParameter("unknown source id " + std::to_string(id));
    }
};

namespace detail {

inline double rho_other(const SystemParams& p, const UnreliableQueue& q, std::size_t k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < p.sources.size(); ++j)
        if (j != k) sum += p.sources[j].lambda * q.moments().eH;
    return sum;
}

inline EventProbs event_probs(const SystemParams& p, const UnreliableQueue& q, std::size_t k) {
    q.require_stable();
    const double lk = p.sources[k].lambda;
    const double hs = lst(q.service(), lk + q.alpha() * (1.0 - lst(q.repair(), lk)));
    const double pl = hs * lk * q.idle_prob() / (lk - q.lambda() * (1.0 - hs));
    return {1.0 - pl, pl};
}

inline LemmaTerms lemma_terms(const SystemParams& p, const UnreliableQueue& q, std::size_t k,
                              const EventProbs& ev) {
    const double lk = p.sources[k].lambda;
    const double w = q.sojourn_lst(lk);
    const double w1 = q.sojourn_lst_deriv(lk, 1);
    const double w2 = q.sojourn_lst_deriv(lk, 2);
    const double et = q.mean_waiting() + q.moments().eH;
    const double ro = rho_other(p, q, k);
    const double l2 = lk * lk;

    LemmaTerms t;
    // E[T 1{X<T} X] = E[T]/l + W*'/l - W*''
    t.a24 = (et / lk + w1 / lk - w2) / ev.p_b;
    // E[X^2 1{X<T}] = 2/l^2 - W*'' + 2W*'/l - 2W*/l^2
    t.a25 = (2.0 / l2 - w2 + 2.0 * w1 / lk - 2.0 * w / l2) / ev.p_b;
    t.l1 = (et - w1 + (2.0 * w - 2.0) / lk) / (lk * ev.p_b);
    t.l2 = ro / ev.p_b * (2.0 / l2 - w2 + 2.0 * w1 / lk - 2.0 * w / l2);
    t.l3 = ro / ev.p_l * (w2 - w1 / lk);
    return t;
}

inline SourceAaoi aaoi_source(const SystemParams& p, const UnreliableQueue& q, std::size_t k) {
    q.require_stable();
    const double lk = p.sources[k].lambda;
    const double ew = q.mean_waiting();
    const double es = q.moments().eH;

    SourceAaoi r;
    r.source_id = p.sources[k].id;
    r.lambda = lk;
    r.w_star = q.sojourn_lst(lk);
    r.w_star_d1 = q.sojourn_lst_deriv(lk, 1);
    r.w_star_d2 = q.sojourn_lst_deriv(lk, 2);
    r.rho_other = rho_other(p, q, k);
    r.events = event_probs(p, q, k);
    r.lemmas = lemma_terms(p, q, k, r.events);
    r.exw = r.events.p_b * (r.lemmas.l1 + r.lemmas.l2) + r.events.p_l * r.lemmas.l3;

    const double ro = r.rho_other;
    r.delta_substitution = ew + 2.0 * es + (2.0 * ro - 1.0) / lk +
                           2.0 * (1.0 - ro) * r.w_star / lk + (ro - 1.0) * r.w_star_d1;

    // Sum over the other sources with each transform taken at lambda_j.
    double tail = 0.0;
    for (std::size_t j = 0; j < p.sources.size(); ++j) {
        if (j == k) continue;
        const double lj = p.sources[j].lambda;
        const double rj = lj * es;
        tail += rj * (2.0 / lj + q.sojourn_lst_deriv(lj, 1) - 2.0 * q.sojourn_lst(lj) / lj);
    }
    r.delta_as_printed = ew + 2.0 * es + 2.0 * r.w_star / lk - r.w_star_d1 - 1.0 / lk + tail;
    return r;
}

}  // namespace detail

inline EventProbs event_probs(const SystemParams& p, int source_id) {
    const UnreliableQueue q(p);
    return detail::event_probs(p, q, p.index_of(source_id));
}

inline LemmaTerms lemma_terms(const SystemParams& p, int source_id) {
    const UnreliableQueue q(p);
    const auto k = p.index_of(source_id);
    return detail::lemma_terms(p, q, k, detail::event_probs(p, q, k));
}

/// (delta_substitution, delta_as_printed) for one source.
inline std::pair<double, double> aaoi_source(const SystemParams& p, int source_id) {
    const UnreliableQueue q(p);
    const auto r = detail::aaoi_source(p, q, p.index_of(source_id));
    return {r.delta_substitution, r.delta_as_printed};
}

inline AaoiResult aaoi_all(const SystemParams& p) {
    const UnreliableQueue q(p);
    q.require_stable();
    AaoiResult out;
    out.mean_waiting = q.mean_waiting();
    out.mean_completion = q.moments().eH;
    for (std::size_t k = 0; k < p.sources.size(); ++k)
        out.sources.push_back(detail::aaoi_source(p, q, k));
    return out;
}

/// Same system with a server that never fails.
inline AaoiResult baseline_aaoi(const SystemParams& p) {
    SystemParams bl = p;
    bl.alpha = 0.0;
    return aaoi_all(bl);
}

/// Age from its uncollapsed parts: lambda (E[X^2]/2 + E[XW] + E[X] E[H]).
inline double reassembled_aaoi(const SourceAaoi& s, double mean_completion) {
    const double l = s.lambda;
    return l * (1.0 / (l * l) + s.exw + mean_completion / l);
}

}  // namespace aoiq
