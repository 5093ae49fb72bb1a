// Walks one parameter set through the whole pipeline: equilibria, slow
// manifold, potential, stationary density, behavior and a small ensemble.

#include <cstdio>

#include "sfdm/sfdm.hpp"

int main() {
    sfdm::ModelParams p;
    p.w_plus = 2.45;
    p.delta_lambda = 1e-3;
    p.beta = 0.3;

    const auto red = sfdm::reduce(p);
    std::printf("equilibria at w+ = %.4f:\n", p.w_plus);
    for (const auto& e : red.equilibria.equilibria)
        std::printf("  (%9.5f, %9.5f)  %-14s %s\n", e.location.x, e.location.y,
                    std::string(to_string(e.stability)).c_str(), std::string(to_string(e.role)).c_str());

    const auto& f = red.frame;
    std::printf("frame: mu1 = %.5f  mu2 = %.5f  epsilon = %.4f  beta_y = %.4f\n", f.mu1, f.mu2, f.epsilon, f.beta_y);
    std::printf("slow manifold on [%.3f, %.3f], valid = %s\n", red.curve.y_min(), red.curve.y_max(),
                red.curve.valid ? "yes" : "no");

    const auto b = sfdm::find_barriers(red.potential);
    std::printf("barriers: a- = %.4f  a+ = %.4f  (%s)\n", b.a_minus, b.a_plus,
                std::string(to_string(b.regime)).c_str());

    const auto qs = sfdm::stationary_density_1d(red.potential);
    const double mean_nu1 = sfdm::moment(qs, red.curve, f, [](sfdm::Vec2 v) { return v.x; });
    std::printf("stationary <nu1> = %.4f Hz\n", mean_nu1);

    const auto beh = sfdm::behavior(red);
    std::printf("quadrature: P_a = %.4f  RT = %.3f ms\n", beh.performance, beh.reaction_time);

    sfdm::ReducedTrialConfig c;
    c.y_lower = beh.interval_lo;
    c.y_upper = beh.interval_hi;
    c.pool_1_side = beh.correct_side;
    c.n_trials = 2000;
    c.master_seed = 1;
    const auto s = sfdm::ensemble([&](std::uint64_t i) { return sfdm::simulate_1d(red, c, i); }, c.n_trials);
    std::printf("monte carlo: P_a = %.4f +- %.4f  RT = %.3f +- %.3f ms\n", s.p_a, *s.p_a_se, s.mean_rt, *s.rt_se);
    return 0;
}
