#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "aoiq/dists.hpp"
#include "aoiq/error.hpp"

namespace aoiq {

struct Source {
    int id = 0;
    double lambda = 0.0;
    // Per-source laws override the shared ones. Only the simulator accepts
    // sources whose laws differ from the shared law.
    std::optional<Distribution> service;
    std::optional<Distribution> repair;
};

struct SystemParams {
    std::vector<Source> sources;
    Distribution service = Exponential{1.0};
    Distribution repair = Exponential{1.0};
    double alpha = 0.0;  // server failure rate while serving

    double total_lambda() const {
        double sum = 0.0;
        for (const auto& s : sources) sum += s.lambda;
        return sum;
    }

    std::size_t index_of(int source_id) const {
        for (std::size_t i = 0; i < sources.size(); ++i)
            if (sources[i].id == source_id) return i;
        throw InvalidParameter("unknown source id " + std::to_string(source_id));
    }

    const Distribution& service_of(std::size_t idx) const {
        const auto& s = sources.at(idx);
        return s.service ? *s.service : service;
    }

    const Distribution& repair_of(std::size_t idx) const {
        const auto& s = sources.at(idx);
        return s.repair ? *s.repair : repair;
    }

    bool homogeneous() const {
        return std::all_of(sources.begin(), sources.end(), [&](const Source& s) {
            return (!s.service || *s.service == service) && (!s.repair || *s.repair == repair);
        });
    }

    void validate() const {
        if (sources.empty()) throw InvalidParameter("at least one source is required");
        for (std::size_t i = 0; i < sources.size(); ++i) {
            const auto& s = sources[i];
            if (!(s.lambda > 0.0) || !std::isfinite(s.lambda))
                throw InvalidParameter("arrival rate of source " + std::to_string(s.id) +
                                       " must be positive");
            for (std::size_t j = 0; j < i; ++j)
                if (sources[j].id == s.id)
                    throw InvalidParameter("duplicate source id " + std::to_string(s.id));
            if (s.service) aoiq::validate(*s.service);
            if (s.repair) aoiq::validate(*s.repair);
        }
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            throw InvalidParameter("failure rate alpha must be >= 0");
        aoiq::validate(service);
        aoiq::validate(repair);
    }
};

/// Sources get ids 1..N in the order of lambdas.
inline SystemParams make_params(const std::vector<double>& lambdas, Distribution service,
                                Distribution repair, double alpha) {
    SystemParams p;
    for (std::size_t i = 0; i < lambdas.size(); ++i)
        p.sources.push_back(Source{static_cast<int>(i + 1), lambdas[i], {}, {}});
    p.service = std::move(service);
    p.repair = std::move(repair);
    p.alpha = alpha;
    p.validate();
    return p;
}

}  // namespace aoiq
