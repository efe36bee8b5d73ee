#include <cmath>

#include <gtest/gtest.h>

#include "aoiq/aoi.hpp"
#include "aoiq/des.hpp"
#include "aoiq/scenario.hpp"
#include "aoiq/selfcheck.hpp"
#include "oracles.hpp"

using namespace aoiq;

namespace {

Scenario preset(Figure f) {
    Scenario sc;
    detail::apply_preset(sc, f);
    return sc;
}

Case fig3_case(int n, ServiceFamily fam) { return Case{n, to_string(fam), fam}; }

SimConfig sim(const SystemParams& p, int reps, double horizon, std::uint64_t seed) {
    SimConfig cfg;
    cfg.params = p;
    cfg.horizon = Horizon::deliveries(horizon);
    cfg.replications = reps;
    cfg.master_seed = seed;
    return cfg;
}

}  // namespace

TEST(Aoi, MM1ReducesToClosedForm) {
    for (double lambda : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto p = make_params({lambda}, make_exponential(1.0), make_exponential(1.0), 0.0);
        const auto [sub, printed] = aaoi_source(p, 1);
        const double want = oracle::mm1_aaoi(lambda, 1.0);
        EXPECT_NEAR(sub, want, 1e-9 * want) << lambda;
        EXPECT_NEAR(printed, want, 1e-9 * want) << lambda;
    }
    const auto p = make_params({0.5}, make_exponential(1.0), make_exponential(1.0), 0.0);
    EXPECT_NEAR(aaoi_source(p, 1).first, 3.5, 3.5e-9);
}

TEST(Aoi, SingleSourceStructure) {
    const auto p = make_params({0.6}, make_erlang(2, 5.0), make_exponential(2.0), 0.3);
    const UnreliableQueue q(p);
    const auto ev = event_probs(p, 1);
    EXPECT_NEAR(ev.p_l, q.sojourn_lst(0.6), 1e-14);
    const auto lt = lemma_terms(p, 1);
    EXPECT_EQ(lt.l2, 0.0);
    EXPECT_EQ(lt.l3, 0.0);
}

TEST(Aoi, EventProbabilitiesUseTotalRateTransform) {
    for (const auto& [label, p] : preset_points()) {
        const UnreliableQueue q(p);
        for (const auto& s : p.sources) {
            const auto ev = event_probs(p, s.id);
            EXPECT_NEAR(ev.p_l, q.sojourn_lst(s.lambda), 1e-12) << label;
            EXPECT_NEAR(ev.p_b + ev.p_l, 1.0, 1e-15);
            EXPECT_GT(ev.p_l, 0.0);
            EXPECT_LT(ev.p_l, 1.0);
        }
    }
}

TEST(Aoi, LemmaOneDecomposition) {
    for (const auto& [label, p] : preset_points()) {
        const auto t = lemma_terms(p, 1);
        EXPECT_NEAR(t.a24 - t.a25, t.l1, 1e-10 * std::abs(t.l1)) << label;
    }
}

TEST(Aoi, PartsReassembleToClosedForm) {
    for (const auto& [label, p] : preset_points()) {
        const auto r = aaoi_all(p);
        for (const auto& s : r.sources) {
            const double re = reassembled_aaoi(s, r.mean_completion);
            EXPECT_NEAR(re, s.delta_substitution, 1e-10 * s.delta_substitution) << label;
        }
    }
}

TEST(Aoi, LowerBound) {
    for (const auto& [label, p] : preset_points()) {
        const auto r = aaoi_all(p);
        for (const auto& s : r.sources) {
            EXPECT_GE(s.delta_substitution, 1.0 / s.lambda + r.mean_completion) << label;
            EXPECT_GE(s.delta_as_printed, std::max(1.0 / s.lambda, r.mean_completion)) << label;
        }
    }
}

TEST(Aoi, SymmetricSourcesShareTheirAge) {
    const auto p = make_params({0.2, 0.2, 0.2}, make_h2_balanced(0.5, 0.7), make_exponential(3.0), 0.1);
    const auto r = aaoi_all(p);
    for (const auto& s : r.sources) {
        EXPECT_NEAR(s.delta_substitution, r.sources[0].delta_substitution, 1e-12 * s.delta_substitution);
        EXPECT_NEAR(s.delta_as_printed, r.sources[0].delta_as_printed, 1e-12 * s.delta_as_printed);
    }
}

TEST(Aoi, VariantsCoincideForTwoEqualRateSources) {
    const auto p = make_params({0.3, 0.3}, make_erlang(2, 4.0), make_exponential(1.0 / 0.3), 0.1);
    const auto [sub, printed] = aaoi_source(p, 1);
    EXPECT_NEAR(sub, printed, 1e-12 * sub);
}

TEST(Aoi, PrintedVariantEvaluatesOtherTransformsAtTheirOwnRates) {
    const auto sc = preset(Figure::fig3);
    const auto p = sc.point_params(fig3_case(4, ServiceFamily::h2), 0.5);
    const UnreliableQueue q(p);
    const double l1 = p.sources[0].lambda, eh = q.moments().eH;
    double want = q.mean_waiting() + 2 * eh + 2 * q.sojourn_lst(l1) / l1 - q.sojourn_lst_deriv(l1, 1) - 1 / l1;
    for (std::size_t j = 1; j < p.sources.size(); ++j) {
        const double lj = p.sources[j].lambda;
        want += lj * eh * (2 / lj + q.sojourn_lst_deriv(lj, 1) - 2 * q.sojourn_lst(lj) / lj);
    }
    EXPECT_NEAR(aaoi_source(p, 1).second, want, 1e-12 * want);
    EXPECT_GT(std::abs(aaoi_source(p, 1).first - want), 1e-3);
}

TEST(Aoi, SlowerSourceIsStaler) {
    const auto sc = preset(Figure::fig3);
    for (auto fam : {ServiceFamily::erlang2, ServiceFamily::h2}) {
        const auto r = aaoi_all(sc.base_params(fig3_case(2, fam)));
        EXPECT_GT(r.source(2).delta_substitution, r.source(1).delta_substitution);
    }
}

TEST(Aoi, NoFailuresMatchesBaseline) {
    for (const auto& [label, p0] : preset_points()) {
        SystemParams p = p0;
        p.alpha = 0.0;
        const auto qm = aaoi_all(p), bl = baseline_aaoi(p0);
        for (std::size_t k = 0; k < qm.sources.size(); ++k) {
            EXPECT_EQ(qm.sources[k].delta_substitution, bl.sources[k].delta_substitution) << label;
            EXPECT_EQ(qm.sources[k].delta_as_printed, bl.sources[k].delta_as_printed) << label;
        }
    }
}

TEST(Aoi, BreakdownsNeverHelp) {
    const auto sc = preset(Figure::fig3);
    for (const auto& c : sc.cases())
        for (double x : sc.sweep->grid) {
            const auto p = sc.point_params(c, x);
            EXPECT_GT(aaoi_all(p).sources[0].delta_substitution,
                      baseline_aaoi(p).sources[0].delta_substitution)
                << c.service_label << " N" << c.n_sources << " l1=" << x;
        }
}

TEST(Aoi, NondecreasingInFailureRateAndRepairMean) {
    for (auto f : {Figure::fig5, Figure::fig6a}) {
        const auto sc = preset(f);
        for (const auto& c : sc.cases()) {
            double prev = 0.0;
            for (double x : sc.sweep->grid) {
                const auto p = sc.point_params(c, x);
                if (!UnreliableQueue(p).stable()) break;
                const double d = aaoi_all(p).sources[0].delta_substitution;
                EXPECT_GE(d, prev) << to_string(f) << " " << c.service_label << " N" << c.n_sources << " x=" << x;
                prev = d;
            }
        }
    }
}

TEST(Aoi, GapToBaselineWidensWithFailureRate) {
    const auto sc = preset(Figure::fig5);
    for (const auto& c : sc.cases()) {
        double prev = -1.0;
        for (double x : sc.sweep->grid) {
            const auto p = sc.point_params(c, x);
            if (!UnreliableQueue(p).stable()) break;
            const double gap = aaoi_all(p).sources[0].delta_substitution -
                               baseline_aaoi(p).sources[0].delta_substitution;
            EXPECT_GT(gap, prev) << c.service_label << " N" << c.n_sources << " alpha=" << x;
            prev = gap;
        }
    }
}

TEST(Aoi, UnstableRejected) {
    const auto p = make_params({1.0, 1.0}, make_exponential(1.5), make_exponential(1.0), 0.1);
    EXPECT_THROW(aaoi_all(p), Unstable);
    EXPECT_THROW(event_probs(p, 1), Unstable);
    EXPECT_THROW(aaoi_source(make_params({0.2}, make_exponential(1.0), make_exponential(1.0), 0.0), 7),
                 InvalidParameter);
}

// Simulation oracles on the two-source Fig. 3 point (lambda1 = 0.3, Erlang-2).

class AoiVersusSimulation : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        const auto sc = preset(Figure::fig3);
        params_ = new SystemParams(sc.base_params(fig3_case(2, ServiceFamily::erlang2)));
        report_ = new SimulationReport(run_experiment(sim(*params_, 100, 10000, 31)));
    }
    static void TearDownTestSuite() {
        delete params_;
        delete report_;
    }
    static SystemParams* params_;
    static SimulationReport* report_;
};

SystemParams* AoiVersusSimulation::params_ = nullptr;
SimulationReport* AoiVersusSimulation::report_ = nullptr;

TEST_F(AoiVersusSimulation, DeliveredFractionMatchesEventProbability) {
    const auto& s = report_->source(1);
    const double pl = event_probs(*params_, 1).p_l;
    EXPECT_TRUE(s.p_l.within_se(pl, 3)) << s.p_l.mean << " se " << s.p_l.se << " vs " << pl;
}

TEST_F(AoiVersusSimulation, InSystemPartOfCrossMomentIsExact) {
    const auto& s = report_->source(1);
    const auto r = aaoi_all(*params_).sources[0];
    const double want = r.events.p_b * (r.lemmas.l1 + r.lemmas.l2);
    EXPECT_TRUE(s.exw_in_system.within_se(want, 3))
        << s.exw_in_system.mean << " se " << s.exw_in_system.se << " vs " << want;
}

TEST_F(AoiVersusSimulation, WeightedLemmaSumMatchesCrossMoment) {
    const auto& s = report_->source(1);
    const double want = aaoi_all(*params_).sources[0].exw;
    EXPECT_TRUE(s.exw.within_se(want, 3)) << s.exw.mean << " se " << s.exw.se << " vs " << want;
}

TEST_F(AoiVersusSimulation, MeanSojournMatches) {
    const auto& s = report_->source(1);
    const double want = mean_sojourn(*params_);
    EXPECT_TRUE(s.mean_sojourn.within_se(want, 3)) << s.mean_sojourn.mean << " vs " << want;
}
