#include <gtest/gtest.h>

#include <random>

#include "sfdm/model.hpp"
#include "sfdm/model_json.hpp"

using namespace sfdm;

namespace {

ModelParams params_at(double w_plus, double delta_lambda) {
    ModelParams p;
    p.w_plus = w_plus;
    p.delta_lambda = delta_lambda;
    return p;
}

Mat2 fd_jacobian(Vec2 v, const ModelParams& p, double h = 1e-6) {
    const Vec2 fx = 0.5 / h * (drift(v + Vec2{h, 0}, p) - drift(v - Vec2{h, 0}, p));
    const Vec2 fy = 0.5 / h * (drift(v + Vec2{0, h}, p) - drift(v - Vec2{0, h}, p));
    return Mat2::from_columns(fx, fy);
}

}  // namespace

TEST(Sigmoid, MidpointIsHalfCeiling) {
    const ModelParams p;
    EXPECT_DOUBLE_EQ(sigmoid(p.alpha / p.b, p), 7.5);
}

TEST(Sigmoid, SaturationLimits) {
    const ModelParams p;
    EXPECT_DOUBLE_EQ(sigmoid(1e6, p), 15.0);
    EXPECT_LT(sigmoid(-1e6, p), 1e-200);
    EXPECT_TRUE(std::isfinite(sigmoid(-1e300, p)));
    EXPECT_TRUE(std::isfinite(sigmoid(1e300, p)));
}

TEST(Sigmoid, ValueAtZero) {
    // 15 / (1 + e^11.1), 40-digit evaluation
    EXPECT_NEAR(sigmoid(0.0, ModelParams{}), 0.00022668143161462699181, 1e-18);
}

TEST(Sigmoid, StrictlyIncreasingAndBounded) {
    const ModelParams p;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-50.0, 150.0);
    for (int i = 0; i < 1000; ++i) {
        double a = u(rng), b = u(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        EXPECT_LT(sigmoid(a, p), sigmoid(b, p));
        EXPECT_GT(sigmoid(a, p), 0.0);
        EXPECT_LT(sigmoid(a, p), p.nu_c);
    }
}

TEST(SigmoidPrime, MaximumAtMidpoint) {
    const ModelParams p;
    EXPECT_NEAR(sigmoid_prime(p.alpha / p.b, p), 0.9375, 1e-15);
}

TEST(SigmoidPrime, MatchesCentralDifference) {
    const ModelParams p;
    const double h = 1e-5;
    for (double z = -10.0; z <= 100.0; z += 0.37) {
        const double fd = (sigmoid(z + h, p) - sigmoid(z - h, p)) / (2 * h);
        // rounding of the difference quotient is about eps * nu_c / h near saturation
        EXPECT_NEAR(sigmoid_prime(z, p), fd, 1e-6 * std::abs(fd) + 1e-9) << z;
    }
}

TEST(SigmoidPrime, FlatTails) {
    const ModelParams p;
    EXPECT_LT(sigmoid_prime(1e4, p), 1e-200);
    EXPECT_LT(sigmoid_prime(-1e4, p), 1e-200);
    EXPECT_GT(sigmoid_prime(100.0, p), 0.0);
}

TEST(Drift, ValueAtOrigin) {
    // 40-digit oracle at w+ = 2.5695, delta_lambda = 1e-3
    const Vec2 f = drift(Vec2{0.0, 0.0}, params_at(2.5695, 1e-3));
    EXPECT_NEAR(f.x, 0.82021975823911163348, 1e-14);
    EXPECT_NEAR(f.y, 0.82002593755275128866, 1e-14);
}

TEST(Drift, SwapSymmetryWhenUnbiased) {
    const ModelParams p = params_at(2.3, 0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    for (int i = 0; i < 200; ++i) {
        const Vec2 v{u(rng), u(rng)};
        const Vec2 a = drift(v, p);
        const Vec2 b = drift(Vec2{v.y, v.x}, p);
        EXPECT_NEAR(a.x, b.y, 1e-12);  // summation order differs after the swap
        EXPECT_NEAR(a.y, b.x, 1e-12);
    }
    const Vec2 d = drift(Vec2{3.0, 3.0}, p);
    EXPECT_DOUBLE_EQ(d.x, d.y);
}

TEST(Jacobian, MatchesFiniteDifferenceOnRandomStates) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    std::uniform_real_distribution<double> w(1.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const ModelParams p = params_at(w(rng), 1e-3);
        const Vec2 v{u(rng), u(rng)};
        const Mat2 j = jacobian(RateState(v), p);
        const Mat2 fd = fd_jacobian(v, p);
        const double scale = std::max(1.0, max_abs(j));
        EXPECT_LE(max_abs(j - fd), 1e-5 * scale) << v.x << " " << v.y;
    }
}

TEST(Jacobian, BisymmetricOnDiagonalWhenUnbiased) {
    const Mat2 j = jacobian(Vec2{2.0, 2.0}, params_at(2.5, 0.0));
    EXPECT_DOUBLE_EQ(j.a11, j.a22);
    EXPECT_DOUBLE_EQ(j.a12, j.a21);
}

TEST(Jacobian, SaturatedStateApproachesMinusIdentity) {
    ModelParams p = params_at(2.5, 0.0);
    p.cross_sign = +1.0;  // all couplings excitatory, so both inputs saturate
    const Mat2 j = jacobian(Vec2{2000.0, 2000.0}, p);
    EXPECT_LT(max_abs(j - Mat2{-1.0, 0.0, 0.0, -1.0}), 1e-12);
}

TEST(ModelParams, CrossCouplingIsInhibitoryByDefault) {
    const auto w = ConnectivityMatrix::from(ModelParams{});
    EXPECT_DOUBLE_EQ(w.w12, -1.9);
    EXPECT_DOUBLE_EQ(w.w21, -1.9);
    EXPECT_DOUBLE_EQ(w.w11, 2.5695);
}

TEST(ModelParams, ValidationRejectsBrokenInvariants) {
    auto broken = [](auto mutate) {
        ModelParams p;
        mutate(p);
        return p;
    };
    EXPECT_NO_THROW(ModelParams{}.validate());
    EXPECT_THROW(broken([](ModelParams& p) { p.nu_c = 0.0; }).validate(), Error);
    EXPECT_THROW(broken([](ModelParams& p) { p.b = -1.0; }).validate(), Error);
    EXPECT_THROW(broken([](ModelParams& p) { p.beta = -1e-3; }).validate(), Error);
    EXPECT_THROW(broken([](ModelParams& p) { p.nu_max = 10.0; }).validate(), Error);
    EXPECT_THROW(broken([](ModelParams& p) { p.delta_lambda = -1e-4; }).validate(), Error);
    EXPECT_THROW(broken([](ModelParams& p) { p.lambda1 = NAN; }).validate(), Error);
}

TEST(RateState, RejectsNegativeAndNonFinite) {
    EXPECT_THROW(RateState(-1e-9, 1.0), Error);
    EXPECT_THROW(RateState(1.0, INFINITY), Error);
    EXPECT_NO_THROW(RateState(0.0, 0.0));
}

TEST(ModelJson, RoundTrip) {
    ModelParams p = params_at(2.45, 1e-4);
    p.beta = 0.3;
    const auto back = model_params_from_json(to_json(p));
    EXPECT_EQ(to_json(back), to_json(p));
    EXPECT_EQ(to_json(p).size(), 9u);
}

TEST(ModelJson, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(model_params_from_json(nlohmann::json{{"w_plus", 2.0}, {"gain", 1.0}}), Error);
    EXPECT_THROW(model_params_from_json(nlohmann::json{{"w_plus", "2.0"}}), Error);
    EXPECT_THROW(model_params_from_json(nlohmann::json{{"nu_max", 5.0}}), Error);
    try {
        model_params_from_json(nlohmann::json{{"cross_sign", 1.0}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::config);
    }
}
