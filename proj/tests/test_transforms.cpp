#include <cmath>

#include <gtest/gtest.h>

#include "aoiq/des.hpp"
#include "aoiq/selfcheck.hpp"
#include "aoiq/transforms.hpp"
#include "oracles.hpp"

using namespace aoiq;

namespace {

// Exponential service (mean 0.5), exponential repair (mean 0.3), alpha 0.1.
SystemParams reference(double lambda) {
    return make_params({lambda}, make_exponential(2.0), make_exponential(1.0 / 0.3), 0.1);
}

SystemParams mm1(double lambda, double mu) {
    return make_params({lambda}, make_exponential(mu), make_exponential(1.0), 0.0);
}

}  // namespace

TEST(Transforms, KernelReferenceValues) {
    const auto p = reference(0.5);
    EXPECT_NEAR(breakdown_kernel(p, 1.0), 1.0230769230769231, 1e-15);
    EXPECT_EQ(breakdown_kernel(p, 0.0), 0.0);
    const auto q = mm1(0.5, 1.0);
    for (double a : {0.0, 0.4, 7.0}) EXPECT_EQ(breakdown_kernel(q, a), a);
}

TEST(Transforms, CompletionMomentsReferenceValues) {
    const auto m = completion_moments(reference(0.5));
    EXPECT_NEAR(m.eH, 0.515, 1e-15);
    EXPECT_NEAR(m.eH2, 0.53945, 1e-15);
    const auto b = completion_moments(mm1(0.5, 2.0));
    EXPECT_DOUBLE_EQ(b.eH, 0.5);
    EXPECT_DOUBLE_EQ(b.eH2, 0.5);
}

TEST(Transforms, CompletionMomentsMatchDerivativesOfClosedFormLst) {
    // H*(a) = mu / (mu + a + alpha (1 - r / (r + a))), written out directly so
    // central differences can straddle zero.
    const double mu = 2.0, r = 1.0 / 0.3, alpha = 0.1;
    auto H = [&](double a) { return mu / (mu + a + alpha * (1.0 - r / (r + a))); };
    const auto m = completion_moments(reference(0.5));
    EXPECT_NEAR(-oracle::richardson(H, 0.0, 1), m.eH, 1e-10);
    EXPECT_NEAR(oracle::richardson(H, 0.0, 2), m.eH2, 1e-8);
    // Third derivative: central stencil in h^2, one Richardson step.
    auto d3 = [&](double h) {
        return (H(2 * h) - 2 * H(h) + 2 * H(-h) - H(-2 * h)) / (2 * h * h * h);
    };
    const double third = (4 * d3(5e-3) - d3(1e-2)) / 3;
    EXPECT_NEAR(-third, m.eH3, 1e-6 * m.eH3);
}

TEST(Transforms, IdleProbabilityAndAvailability) {
    EXPECT_NEAR(idle_prob(reference(0.5)), 0.7425, 1e-15);
    EXPECT_NEAR(availability(reference(0.5)), 0.9925, 1e-15);
    EXPECT_NEAR(availability(reference(0.96)), 0.9856, 1e-15);
    const auto classic = make_params({1.0}, make_exponential(2.0), make_exponential(1.0), 0.0);
    EXPECT_DOUBLE_EQ(idle_prob(classic), 0.5);
    EXPECT_EQ(availability(classic), 1.0);
    EXPECT_NEAR(idle_prob(reference(1e-12)), 1.0, 1e-11);
}

TEST(Transforms, MM1SojournTransform) {
    const auto p = mm1(0.5, 1.0);
    EXPECT_NEAR(sojourn_lst(p, 1.0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(sojourn_lst_deriv(p, 1.0, 1), -2.0 / 9.0, 1e-15);
    for (double a : {0.05, 0.3, 1.0, 3.0}) {
        EXPECT_NEAR(sojourn_lst(p, a), oracle::mm1_sojourn_lst(0.5, 1.0, a), 1e-14);
        const double want = 2.0 * 0.5 / std::pow(0.5 + a, 3);
        EXPECT_NEAR(sojourn_lst_deriv(p, a, 2), want, 1e-13 * want);
    }
}

TEST(Transforms, SojournTransformNormalisedAndDecreasing) {
    for (const auto& [label, p] : preset_points()) {
        const UnreliableQueue q(p);
        EXPECT_NEAR(q.sojourn_lst(0.0), 1.0, 1e-15) << label;
        EXPECT_NEAR(q.sojourn_lst(1e-9), 1.0, 1e-8) << label;
        EXPECT_LT(q.sojourn_lst(10.0), q.sojourn_lst(1.0)) << label;
    }
}

TEST(Transforms, SojournDerivativesMatchRichardsonOnPresets) {
    for (const auto& [label, p] : preset_points()) {
        const UnreliableQueue q(p);
        std::vector<double> as{0.05, 0.1, 0.3, 1.0, 3.0, p.sources.front().lambda};
        for (double a : as)
            for (int order : {1, 2}) {
                const double fd = oracle::richardson([&](double x) { return q.sojourn_lst(x); }, a, order);
                EXPECT_NEAR(q.sojourn_lst_deriv(a, order), fd, 1e-6 * std::abs(fd))
                    << label << " a=" << a << " order=" << order;
            }
    }
}

TEST(Transforms, DerivativeAtOriginIsMinusMeanSojourn) {
    for (const auto& [label, p] : preset_points()) {
        const UnreliableQueue q(p);
        const double et = q.mean_waiting() + q.moments().eH;
        EXPECT_NEAR(-q.sojourn_lst_deriv(1e-12, 1), et, 1e-8 * et) << label;
        // Just above the series cutoff the quotient-rule branch takes over.
        const double a = 2e-5;
        EXPECT_NEAR(-q.sojourn_lst_deriv(a, 1), et - q.sojourn_moment2() * a, 1e-7 * et) << label;
    }
}

TEST(Transforms, SecondSojournMomentMatchesCurvatureAtOrigin) {
    const auto p = reference(0.5);
    const UnreliableQueue q(p);
    // Richardson from a = 0.05 down would lose digits; compare with the
    // quotient-rule second derivative near the origin instead.
    EXPECT_NEAR(q.sojourn_lst_deriv(2e-5, 2), q.sojourn_moment2(), 1e-4 * q.sojourn_moment2());
    // M/M/1: T ~ Exp(mu - lambda) so E[T^2] = 2/(mu-lambda)^2.
    EXPECT_NEAR(UnreliableQueue(mm1(0.5, 1.0)).sojourn_moment2(), 8.0, 1e-12);
}

TEST(Transforms, MeanValues) {
    const auto p = make_params({0.5}, make_exponential(2.0), make_exponential(1.0), 0.0);
    EXPECT_NEAR(mean_waiting(p), 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(mean_sojourn(p), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(mean_system_size(p), 1.0 / 3.0, 1e-15);
    const auto r = reference(0.5);
    const double pk = oracle::pk_mean_wait(0.5, 0.515, 0.53945);
    EXPECT_NEAR(mean_waiting(r), pk, 1e-15);
    EXPECT_NEAR(mean_sojourn(reference(1e-9)), 0.515, 1e-9);
}

TEST(Transforms, MeanWaitingGrowsTowardsSaturation) {
    double prev = 0.0;
    for (double l : {0.5, 1.0, 1.5, 1.8, 1.9, 1.94}) {
        const double w = mean_waiting(reference(l));
        EXPECT_GT(w, prev);
        prev = w;
    }
    EXPECT_GT(prev, 10.0);
}

TEST(Transforms, PgfsNormalisedAndAnchored) {
    for (const auto& [label, p] : preset_points()) {
        const UnreliableQueue q(p);
        EXPECT_NEAR(q.pgf_queue(1.0), 1.0, 1e-9) << label;
        EXPECT_NEAR(q.pgf_system(1.0), 1.0, 1e-9) << label;
        EXPECT_NEAR(q.pgf_system(0.0), q.idle_prob(), 1e-15) << label;
        EXPECT_NEAR(q.pgf_system(1.0 - 1e-9), 1.0, 1e-8) << label;
    }
}

TEST(Transforms, SystemPgfSlopeIsLittlesLaw) {
    for (const auto& [label, p] : preset_points()) {
        const UnreliableQueue q(p);
        // Backward three-point slopes at 1 with one Richardson step.
        auto slope = [&](double h) {
            return (3 * q.pgf_system(1.0) - 4 * q.pgf_system(1.0 - h) + q.pgf_system(1.0 - 2 * h)) / (2 * h);
        };
        const double d = (4 * slope(5e-4) - slope(1e-3)) / 3;
        const double little = p.total_lambda() * q.mean_sojourn();
        EXPECT_NEAR(d, little, 1e-6 * little) << label;
        EXPECT_NEAR(q.mean_system_size(), little, 1e-15) << label;
    }
}

TEST(Transforms, MM1SystemSizeIsGeometric) {
    const auto p = mm1(0.5, 1.0);
    for (double z : {0.0, 0.3, 0.6, 0.9}) EXPECT_NEAR(pgf_system(p, z), 0.5 / (1.0 - 0.5 * z), 1e-14);
    // Waiting count: P(0) = 1 - rho^2, P(n) = (1-rho) rho^(n+1).
    for (double z : {0.0, 0.3, 0.9})
        EXPECT_NEAR(pgf_queue(p, z), 0.75 + 0.5 * 0.25 * z / (1.0 - 0.5 * z), 1e-14);
}

TEST(Transforms, NoFailureReduction) {
    for (const auto& [label, p0] : preset_points()) {
        SystemParams p = p0;
        p.alpha = 0.0;
        const UnreliableQueue q(p);
        const double b1 = mean(p.service), b2 = moment(p.service, 2);
        EXPECT_EQ(q.kernel(0.7), 0.7);
        EXPECT_DOUBLE_EQ(q.moments().eH, b1);
        EXPECT_DOUBLE_EQ(q.moments().eH2, b2);
        EXPECT_NEAR(q.idle_prob(), 1.0 - p.total_lambda() * b1, 1e-15);
        EXPECT_EQ(q.availability(), 1.0);
        EXPECT_NEAR(q.mean_waiting(), oracle::pk_mean_wait(p.total_lambda(), b1, b2), 1e-13) << label;
    }
}

TEST(Transforms, UnstableAndHeterogeneousRejected) {
    const auto hot = reference(1.95);
    EXPECT_FALSE(UnreliableQueue(hot).stable());
    EXPECT_THROW(mean_waiting(hot), Unstable);
    EXPECT_THROW(sojourn_lst(hot, 1.0), Unstable);
    EXPECT_THROW(pgf_system(hot, 0.5), Unstable);
    try {
        idle_prob(hot);
        FAIL();
    } catch (const Unstable& e) {
        EXPECT_NEAR(e.rho(), 1.95 * 0.515, 1e-12);
    }
    auto het = reference(0.3);
    het.sources.push_back({2, 0.2, make_exponential(3.0), std::nullopt});
    EXPECT_THROW(UnreliableQueue{het}, InvalidParameter);
    EXPECT_THROW(sojourn_lst(reference(0.5), -1.0), DomainError);
    EXPECT_THROW(pgf_queue(reference(0.5), 1.5), DomainError);
}

TEST(Transforms, SteadyStateAgreesWithSimulation) {
    SimConfig cfg;
    cfg.params = reference(0.5);
    cfg.horizon = Horizon::deliveries(50000);
    cfg.replications = 20;
    cfg.master_seed = 77;
    const auto r = run_experiment(cfg);
    const UnreliableQueue q(cfg.params);
    EXPECT_TRUE(r.idle_fraction.within_se(q.idle_prob(), 3)) << r.idle_fraction.mean;
    EXPECT_TRUE(r.availability_fraction.within_se(q.availability(), 3)) << r.availability_fraction.mean;
    EXPECT_TRUE(r.mean_completion.within_se(q.moments().eH, 3)) << r.mean_completion.mean;
    EXPECT_TRUE(r.mean_system_size.within_se(q.mean_system_size(), 3)) << r.mean_system_size.mean;
    for (std::size_t i = 0; i < r.pgf.size(); ++i)
        EXPECT_TRUE(r.pgf[i].within_se(q.pgf_system(r.pgf_points[i]), 3)) << r.pgf_points[i];
}
