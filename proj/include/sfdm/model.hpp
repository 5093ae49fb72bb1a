#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "sfdm/errors.hpp"
#include "sfdm/linalg.hpp"

namespace sfdm {

/// Scalar parameters of the two-pool stochastic rate model
///
///   dnu_i = [-nu_i + phi(lambda_i + w_i1 nu_1 + w_i2 nu_2)] dt + beta dW_i,
///   phi(z) = nu_c / (1 + exp(-b z + alpha)),
///
/// with lambda_2 = lambda_1 - delta_lambda, self-coupling w_plus and
/// cross-coupling cross_sign * w_inhib.
struct ModelParams {
    double lambda1 = 33.0;
    double delta_lambda = 0.0;
    double w_plus = 2.5695;
    double w_inhib = 1.9;
    double beta = 3e-3;
    double nu_c = 15.0;
    double b = 0.25;
    double alpha = 11.1;
    double nu_max = 20.0;
    /// Sign applied to w_inhib in the off-diagonal couplings. -1 makes the
    /// pools compete; +1 is kept for sensitivity checks only.
    double cross_sign = -1.0;

    double lambda2() const { return lambda1 - delta_lambda; }

    /// Throws a config error naming the first violated invariant.
    void validate() const {
        const double all[] = {lambda1, delta_lambda, w_plus, w_inhib, beta, nu_c, b, alpha, nu_max};
        for (double v : all)
            if (!std::isfinite(v)) throw config_error("model parameters must be finite");
        if (!(nu_c > 0.0)) throw config_error("nu_c must be > 0");
        if (!(b > 0.0)) throw config_error("b must be > 0");
        if (!(beta >= 0.0)) throw config_error("beta must be >= 0");
        if (!(nu_max > nu_c)) throw config_error("nu_max must exceed nu_c");
        if (!(delta_lambda >= 0.0)) throw config_error("delta_lambda must be >= 0");
        if (cross_sign != 1.0 && cross_sign != -1.0) throw config_error("cross_sign must be +1 or -1");
    }
};

/// Firing rates of the two pools, both finite and non-negative.
class RateState {
public:
    RateState(double nu1, double nu2) : nu1_(nu1), nu2_(nu2) {
        if (!std::isfinite(nu1) || !std::isfinite(nu2)) throw precondition_error("rate state must be finite");
        if (nu1 < 0.0 || nu2 < 0.0) throw precondition_error("rates must be non-negative");
    }
    explicit RateState(Vec2 v) : RateState(v.x, v.y) {}

    double nu1() const { return nu1_; }
    double nu2() const { return nu2_; }
    Vec2 vec() const { return {nu1_, nu2_}; }
    bool inside(const ModelParams& p) const { return nu1_ <= p.nu_max && nu2_ <= p.nu_max; }

private:
    double nu1_;
    double nu2_;
};

struct ConnectivityMatrix {
    double w11, w12, w21, w22;

    static ConnectivityMatrix from(const ModelParams& p) {
        const double cross = p.cross_sign * p.w_inhib;
        return {p.w_plus, cross, cross, p.w_plus};
    }
};

inline constexpr double kSigmoidExponentClamp = 500.0;

inline double sigmoid(double z, const ModelParams& p) {
    const double e = std::clamp(-p.b * z + p.alpha, -kSigmoidExponentClamp, kSigmoidExponentClamp);
    return p.nu_c / (1.0 + std::exp(e));
}

/// b phi (1 - phi/nu_c), written as b nu_c / (2 + e^u + e^-u) so the upper
/// tail does not lose precision to 1 - phi/nu_c cancelling.
inline double sigmoid_prime(double z, const ModelParams& p) {
    const double u = std::clamp(-p.b * z + p.alpha, -kSigmoidExponentClamp, kSigmoidExponentClamp);
    return p.b * p.nu_c / (2.0 + std::exp(u) + std::exp(-u));
}

/// Synaptic inputs z_i = lambda_i + w_i1 nu_1 + w_i2 nu_2.
inline Vec2 synaptic_input(Vec2 nu, const ModelParams& p) {
    const auto w = ConnectivityMatrix::from(p);
    return {p.lambda1 + w.w11 * nu.x + w.w12 * nu.y, p.lambda2() + w.w21 * nu.x + w.w22 * nu.y};
}

/// Deterministic drift F(nu) = -nu + Phi(Lambda + W nu). Accepts any point
/// of the plane: the reduction evaluates it off the positive quadrant.
inline Vec2 drift(Vec2 nu, const ModelParams& p) {
    const Vec2 z = synaptic_input(nu, p);
    return {-nu.x + sigmoid(z.x, p), -nu.y + sigmoid(z.y, p)};
}

inline Vec2 drift(const RateState& s, const ModelParams& p) { return drift(s.vec(), p); }

inline Mat2 jacobian(Vec2 nu, const ModelParams& p) {
    const auto w = ConnectivityMatrix::from(p);
    const Vec2 z = synaptic_input(nu, p);
    const double d1 = sigmoid_prime(z.x, p);
    const double d2 = sigmoid_prime(z.y, p);
    return {-1.0 + w.w11 * d1, w.w12 * d1, w.w21 * d2, -1.0 + w.w22 * d2};
}

inline Mat2 jacobian(const RateState& s, const ModelParams& p) { return jacobian(s.vec(), p); }

}  // namespace sfdm
