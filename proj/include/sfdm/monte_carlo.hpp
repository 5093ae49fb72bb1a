#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "sfdm/equilibria.hpp"
#include "sfdm/errors.hpp"
#include "sfdm/model.hpp"
#include "sfdm/parallel.hpp"
#include "sfdm/reduction.hpp"

namespace sfdm {

enum class Decision { pool_1, pool_2, none };

inline std::string_view to_string(Decision d) {
    switch (d) {
        case Decision::pool_1: return "pool-1";
        case Decision::pool_2: return "pool-2";
        case Decision::none: return "none";
    }
    return "unknown";
}

/// 2D trials: Euler-Maruyama on the rate model until either rate first
/// exceeds the decision threshold.
struct TrialConfig {
    double dt = 0.01;
    double t_max = 5000.0;
    double decision_threshold = 0.0;
    Vec2 initial;
    std::uint64_t master_seed = 0;
    std::size_t n_trials = 1000;

    void validate() const {
        if (!(dt > 0.0)) throw config_error("dt must be > 0");
        if (!(t_max >= dt)) throw config_error("t_max must be >= dt");
        if (n_trials < 1) throw config_error("n_trials must be >= 1");
        if (!std::isfinite(decision_threshold)) throw config_error("decision_threshold must be finite");
    }
};

/// 1D trials on the reduced SDE, absorbed at y_lower or y_upper.
struct ReducedTrialConfig {
    double dt = 0.01;
    double t_max = 5000.0;
    double y0 = 0.0;
    double y_lower = -1.0;
    double y_upper = 1.0;
    /// +1: crossing y_upper counts as pool 1, -1: crossing y_lower does.
    int pool_1_side = +1;
    /// Also stop when the Brownian bridge between two inside points crosses a
    /// threshold, which removes the O(sqrt(dt)) overshoot bias of discrete
    /// monitoring.
    bool brownian_bridge = true;
    std::uint64_t master_seed = 0;
    std::size_t n_trials = 1000;

    void validate() const {
        if (!(dt > 0.0)) throw config_error("dt must be > 0");
        if (!(t_max >= dt)) throw config_error("t_max must be >= dt");
        if (n_trials < 1) throw config_error("n_trials must be >= 1");
        if (!(y_lower < y_upper)) throw config_error("y_lower must be below y_upper");
        if (!(y0 >= y_lower && y0 <= y_upper)) throw config_error("y0 must lie between the thresholds");
        if (pool_1_side != 1 && pool_1_side != -1) throw config_error("pool_1_side must be +1 or -1");
    }
};

struct TrialOutcome {
    Decision decision = Decision::none;
    std::optional<double> decision_time;
    Vec2 final_state;  ///< (nu1, nu2) for 2D trials, (y, 0) for 1D trials
    bool valid = true;  ///< false when a 1D trial left the manifold grid
    std::size_t clamp_events = 0;
};

/// Counter-based stream derivation: the generator of trial i depends only on
/// (master_seed, i), so trials can run in any order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 trial_engine(std::uint64_t master_seed, std::uint64_t trial_index) {
    const std::uint64_t a = splitmix64(master_seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(trial_index + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
    return std::mt19937_64(seq);
}

/// Midway between the spontaneous state and the decision state along the
/// larger rate coordinate.
inline double default_decision_threshold(const EquilibriumSet& eqs) {
    const Equilibrium* s0 = eqs.find(Role::spontaneous);
    const Equilibrium* d1 = eqs.find(Role::decision_1);
    if (s0 == nullptr || d1 == nullptr)
        throw numerical_error("NoDecisionStates", "default threshold needs spontaneous and decision states");
    return 0.5 * (std::max(s0->location.x, s0->location.y) + std::max(d1->location.x, d1->location.y));
}

inline TrialOutcome simulate_2d(const ModelParams& params, const TrialConfig& config, std::uint64_t trial_index) {
    auto rng = trial_engine(config.master_seed, trial_index);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = params.beta * std::sqrt(config.dt);
    const auto steps = static_cast<std::size_t>(std::floor(config.t_max / config.dt + 1e-9));
    TrialOutcome out;
    Vec2 v = config.initial;
    for (std::size_t s = 1; s <= steps; ++s) {
        const Vec2 f = drift(v, params);
        Vec2 next{v.x + f.x * config.dt, v.y + f.y * config.dt};
        if (sd > 0.0) {
            next.x += sd * normal(rng);
            next.y += sd * normal(rng);
        }
        const Vec2 clamped{std::clamp(next.x, 0.0, params.nu_max), std::clamp(next.y, 0.0, params.nu_max)};
        if (!(clamped == next)) ++out.clamp_events;
        v = clamped;
        const bool up1 = v.x > config.decision_threshold;
        const bool up2 = v.y > config.decision_threshold;
        if (up1 || up2) {
            out.decision = (up1 && (!up2 || v.x >= v.y)) ? Decision::pool_1 : Decision::pool_2;
            out.decision_time = static_cast<double>(s) * config.dt;
            break;
        }
    }
    out.final_state = v;
    return out;
}

/// Reduced trials with an arbitrary drift y -> g(y) defined on [lo, hi].
template <class Drift>
TrialOutcome simulate_1d(Drift&& drift_fn, double lo, double hi, double beta_y, const ReducedTrialConfig& config,
                         std::uint64_t trial_index) {
    auto rng = trial_engine(config.master_seed, trial_index);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double sd = beta_y * std::sqrt(config.dt);
    const double var = beta_y * beta_y * config.dt;
    const auto steps = static_cast<std::size_t>(std::floor(config.t_max / config.dt + 1e-9));
    const Decision at_upper = config.pool_1_side > 0 ? Decision::pool_1 : Decision::pool_2;
    const Decision at_lower = config.pool_1_side > 0 ? Decision::pool_2 : Decision::pool_1;

    TrialOutcome out;
    double y = config.y0;
    auto finish = [&](Decision d, std::size_t s) {
        out.decision = d;
        out.decision_time = static_cast<double>(s) * config.dt;
    };
    if (y >= config.y_upper) finish(at_upper, 0);
    else if (y <= config.y_lower) finish(at_lower, 0);
    for (std::size_t s = 1; s <= steps && out.decision == Decision::none; ++s) {
        if (y < lo || y > hi) {
            out.valid = false;
            break;
        }
        double next = y + drift_fn(y) * config.dt;
        if (sd > 0.0) next += sd * normal(rng);
        if (next >= config.y_upper) {
            finish(at_upper, s);
        } else if (next <= config.y_lower) {
            finish(at_lower, s);
        } else if (config.brownian_bridge && var > 0.0) {
            // crossing probability of the bridge from y to next
            const double pu = std::exp(-2.0 * (config.y_upper - y) * (config.y_upper - next) / var);
            const double pl = std::exp(-2.0 * (y - config.y_lower) * (next - config.y_lower) / var);
            if (pu > 1e-300 || pl > 1e-300) {
                const double u = uniform(rng);
                if (u < pu) finish(at_upper, s);
                else if (u < pu + pl) finish(at_lower, s);
            }
        }
        y = next;
    }
    out.final_state = {y, 0.0};
    return out;
}

/// Reduced trials on dy = g(x*(y), y) dt + beta_y dW.
inline TrialOutcome simulate_1d(const Reduction& red, const ReducedTrialConfig& config, std::uint64_t trial_index) {
    const auto& curve = red.curve;
    auto g = [&](double y) { return slow_field(curve.x_at(y), y, red.frame, red.params); };
    return simulate_1d(g, curve.y_min(), curve.y_max(), red.frame.beta_y, config, trial_index);
}

struct EnsembleSummary {
    std::size_t n_trials = 0;
    std::size_t n_decided = 0;
    std::size_t n_pool_1 = 0;
    std::size_t n_invalid = 0;
    std::size_t clamp_events = 0;
    double p_a = std::numeric_limits<double>::quiet_NaN();  ///< pool-1 fraction of decided trials
    std::optional<double> p_a_se;
    double mean_rt = std::numeric_limits<double>::quiet_NaN();  ///< over decided trials
    std::optional<double> rt_se;
    double undecided_fraction = 0.0;
};

/// Aggregates outcomes in trial-index order, so the result does not depend
/// on how the trials were scheduled.
inline EnsembleSummary summarize(const std::vector<TrialOutcome>& outcomes) {
    EnsembleSummary s;
    s.n_trials = outcomes.size();
    double sum_t = 0.0;
    for (const auto& o : outcomes) {
        s.clamp_events += o.clamp_events;
        if (!o.valid) {
            ++s.n_invalid;
            continue;
        }
        if (o.decision == Decision::none) continue;
        ++s.n_decided;
        if (o.decision == Decision::pool_1) ++s.n_pool_1;
        sum_t += *o.decision_time;
    }
    const std::size_t valid = s.n_trials - s.n_invalid;
    s.undecided_fraction = valid > 0 ? static_cast<double>(valid - s.n_decided) / static_cast<double>(valid) : 0.0;
    if (s.n_decided == 0) return s;
    const auto nd = static_cast<double>(s.n_decided);
    s.p_a = static_cast<double>(s.n_pool_1) / nd;
    s.mean_rt = sum_t / nd;
    if (s.n_decided >= 2) {
        s.p_a_se = std::sqrt(s.p_a * (1.0 - s.p_a) / nd);
        double ss = 0.0;
        for (const auto& o : outcomes)
            if (o.valid && o.decision != Decision::none) ss += (*o.decision_time - s.mean_rt) * (*o.decision_time - s.mean_rt);
        s.rt_se = std::sqrt(ss / (nd - 1.0) / nd);
    }
    return s;
}

/// Runs trial(i) for i in [0, n_trials) and keeps every outcome.
template <class Trial>
std::vector<TrialOutcome> run_trials(Trial&& trial, std::size_t n_trials) {
    if (n_trials < 1) throw config_error("n_trials must be >= 1");
    std::vector<TrialOutcome> out(n_trials);
    parallel_for(n_trials, [&](std::size_t i) { out[i] = trial(static_cast<std::uint64_t>(i)); });
    return out;
}

template <class Trial>
EnsembleSummary ensemble(Trial&& trial, std::size_t n_trials) {
    return summarize(run_trials(std::forward<Trial>(trial), n_trials));
}

}  // namespace sfdm
