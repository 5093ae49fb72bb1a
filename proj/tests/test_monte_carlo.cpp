#include <gtest/gtest.h>

#include "sfdm/first_passage.hpp"
#include "sfdm/monte_carlo.hpp"

using namespace sfdm;

namespace {

ModelParams params_at(double w_plus, double delta_lambda, double beta) {
    ModelParams p;
    p.w_plus = w_plus;
    p.delta_lambda = delta_lambda;
    p.beta = beta;
    return p;
}

ReducedTrialConfig flat_config(std::size_t n) {
    ReducedTrialConfig c;
    c.dt = 1e-3;
    c.y_lower = -0.5;
    c.y_upper = 0.5;
    c.y0 = 0.0;
    c.n_trials = n;
    c.master_seed = 7;
    return c;
}

auto zero_drift = [](double) { return 0.0; };

}  // namespace

TEST(Seeding, StreamsDependOnSeedAndIndexOnly) {
    auto a = trial_engine(42, 5);
    auto b = trial_engine(42, 5);
    auto c = trial_engine(42, 6);
    auto d = trial_engine(43, 5);
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
    EXPECT_NE(x, d());
}

TEST(Reduced, SameSeedSameOutcomes) {
    const auto c = flat_config(200);
    auto trial = [&](std::uint64_t i) { return simulate_1d(zero_drift, -1.0, 1.0, 0.5, c, i); };
    const auto a = run_trials(trial, c.n_trials);
    const auto b = run_trials(trial, c.n_trials);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].decision, b[i].decision);
        EXPECT_EQ(a[i].decision_time, b[i].decision_time);
    }
    // trial i is the same whether run alone or in a batch
    const auto solo = trial(17);
    EXPECT_EQ(solo.decision_time, a[17].decision_time);
}

TEST(Reduced, FlatSplitAndMeanTime) {
    auto c = flat_config(20000);
    const double by = 0.5;
    auto trial = [&](std::uint64_t i) { return simulate_1d(zero_drift, -1.0, 1.0, by, c, i); };
    const auto s = ensemble(trial, c.n_trials);
    ASSERT_EQ(s.n_decided, c.n_trials);
    EXPECT_LT(std::abs(s.p_a - 0.5), 3.0 * *s.p_a_se);
    const double exact = 0.25 / (by * by);  // (y0 - L)(R - y0) / beta^2
    EXPECT_LT(std::abs(s.mean_rt - exact), 3.0 * *s.rt_se);
}

TEST(Reduced, ZeroNoiseIsDeterministicDescent) {
    // drift toward y = 1 with no noise: crosses 0.5 at a predictable step
    auto c = flat_config(3);
    c.dt = 0.01;
    auto drift = [](double) { return 1.0; };
    for (std::uint64_t i = 0; i < 3; ++i) {
        const auto o = simulate_1d(drift, -1.0, 1.0, 0.0, c, i);
        EXPECT_EQ(o.decision, Decision::pool_1);
        EXPECT_NEAR(*o.decision_time, 0.5, 0.011);
    }
    c.pool_1_side = -1;
    EXPECT_EQ(simulate_1d(drift, -1.0, 1.0, 0.0, c, 0).decision, Decision::pool_2);
}

TEST(Reduced, NoDecisionWhenStuck) {
    auto c = flat_config(1);
    c.t_max = 1.0;
    const auto o = simulate_1d(zero_drift, -1.0, 1.0, 0.0, c, 0);
    EXPECT_EQ(o.decision, Decision::none);
    EXPECT_FALSE(o.decision_time.has_value());
    const auto s = summarize({o});
    EXPECT_EQ(s.undecided_fraction, 1.0);
    EXPECT_TRUE(std::isnan(s.p_a));
}

TEST(Reduced, SingleTrialHasNoStandardErrors) {
    const auto c = flat_config(1);
    const auto s = ensemble([&](std::uint64_t i) { return simulate_1d(zero_drift, -1.0, 1.0, 0.5, c, i); }, 1);
    EXPECT_EQ(s.n_decided, 1u);
    EXPECT_FALSE(s.p_a_se.has_value());
    EXPECT_FALSE(s.rt_se.has_value());
}

TEST(Reduced, LeavingTheGridIsInvalid) {
    auto c = flat_config(1);
    c.y_lower = -5.0;
    c.y_upper = 5.0;
    auto drift = [](double) { return 10.0; };
    const auto o = simulate_1d(drift, -1.0, 1.0, 0.0, c, 0);
    EXPECT_FALSE(o.valid);
    EXPECT_EQ(summarize({o}).n_invalid, 1u);
}

TEST(Reduced, AgreesWithQuadratureOnModel) {
    const auto r = reduce(params_at(2.45, 1e-3, 0.3));
    const auto b = behavior(r);
    ReducedTrialConfig c;
    c.dt = 0.01;
    c.y_lower = b.interval_lo;
    c.y_upper = b.interval_hi;
    c.pool_1_side = b.correct_side;
    c.n_trials = 4000;
    c.master_seed = 3;
    const auto s = ensemble([&](std::uint64_t i) { return simulate_1d(r, c, i); }, c.n_trials);
    EXPECT_EQ(s.n_invalid, 0u);
    EXPECT_LT(std::abs(s.p_a - b.performance_split), 3.0 * *s.p_a_se);
    EXPECT_LT(std::abs(s.mean_rt - b.reaction_time), 3.0 * *s.rt_se);
}

TEST(Rates, InvalidConfigRejected) {
    TrialConfig c;
    c.dt = 0.0;
    EXPECT_THROW(c.validate(), Error);
    ReducedTrialConfig r;
    r.y0 = 3.0;
    EXPECT_THROW(r.validate(), Error);
}

TEST(Rates, ZeroNoiseNeverClamps) {
    const ModelParams p = params_at(2.6, 1e-3, 0.0);
    const auto eqs = find_equilibria(p, 40);
    TrialConfig c;
    c.initial = {0.9, 0.9};
    c.decision_threshold = default_decision_threshold(eqs);
    const auto o = simulate_2d(p, c, 0);
    EXPECT_EQ(o.clamp_events, 0u);
    EXPECT_EQ(o.decision, Decision::pool_1);
}

TEST(Rates, UnbiasedIsSymmetric) {
    const ModelParams p = params_at(2.6, 0.0, 0.3);
    const auto eqs = find_equilibria(p, 40);
    TrialConfig c;
    c.initial = eqs.find(Role::spontaneous)->location;
    c.decision_threshold = default_decision_threshold(eqs);
    c.n_trials = 2000;
    c.master_seed = 11;
    const auto s = ensemble([&](std::uint64_t i) { return simulate_2d(p, c, i); }, c.n_trials);
    EXPECT_EQ(s.n_decided, c.n_trials);
    EXPECT_LT(std::abs(s.p_a - 0.5), 3.0 * *s.p_a_se);
}

TEST(Rates, BiasFavoursFirstPool) {
    // start on the diagonal: the biased saddle sits on the separatrix itself
    const ModelParams p = params_at(2.45, 0.05, 0.3);
    const auto eqs = find_equilibria(p, 40);
    TrialConfig c;
    c.initial = find_equilibria(params_at(2.45, 0.0, 0.3), 40).find(Role::spontaneous)->location;
    c.decision_threshold = default_decision_threshold(eqs);
    c.n_trials = 1000;
    const auto s = ensemble([&](std::uint64_t i) { return simulate_2d(p, c, i); }, c.n_trials);
    EXPECT_GT(s.p_a, 0.5 + 3.0 * *s.p_a_se);
}
