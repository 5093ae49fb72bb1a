#include <gtest/gtest.h>

#include <random>

#include "sfdm/interpolation.hpp"
#include "sfdm/linalg.hpp"

using namespace sfdm;

TEST(Linalg, EigenvaluesMatchTraceAndDeterminant) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const Mat2 m{u(rng), u(rng), u(rng), u(rng)};
        const auto mu = eigenvalues(m);
        EXPECT_NEAR((mu[0] + mu[1]).real(), m.trace(), 1e-12);
        EXPECT_NEAR((mu[0] * mu[1]).real(), m.det(), 1e-11);
        EXPECT_NEAR((mu[0] * mu[1]).imag(), 0.0, 1e-11);
    }
}

TEST(Linalg, EigenvectorSatisfiesDefinition) {
    const Mat2 m{-0.9, 0.4, 0.3, -0.2};
    for (const auto& mu : eigenvalues(m)) {
        const Vec2 v = eigenvector(m, mu.real());
        const Vec2 r = m * v - mu.real() * v;
        EXPECT_NEAR(norm(v), 1.0, 1e-14);
        EXPECT_LT(norm(r), 1e-14);
    }
}

TEST(Linalg, InverseOfSingularThrows) {
    EXPECT_THROW(inverse(Mat2{1.0, 2.0, 2.0, 4.0}), Error);
}

TEST(Linalg, BernoulliLimitsAndSymmetry) {
    EXPECT_DOUBLE_EQ(bernoulli(0.0), 1.0);
    for (double x : {1e-9, 1e-3, 0.5, 3.0, 40.0, 800.0}) {
        // B(-x) - B(x) = x
        EXPECT_NEAR(bernoulli(-x) - bernoulli(x), x, 1e-12 * std::max(1.0, x));
        const double ref = x < 30.0 ? std::log(x / std::expm1(x)) : std::log(x) - x;  // e^-x below rounding
        EXPECT_NEAR(log_bernoulli(x), ref, 1e-12 * std::max(1.0, x)) << x;
    }
    EXPECT_GE(bernoulli(1e4), 0.0);
    EXPECT_NEAR(log_bernoulli(1e4), std::log(1e4) - 1e4, 1e-9);
}

TEST(Linalg, TridiagonalSolveAgreesWithDenseProduct) {
    const std::size_t n = 50;
    std::vector<double> lo(n), d(n), up(n), x(n), rhs(n), sol(n);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        lo[i] = i > 0 ? -u(rng) : 0.0;
        up[i] = i + 1 < n ? -u(rng) : 0.0;
        d[i] = 3.0;
        x[i] = u(rng);
    }
    for (std::size_t i = 0; i < n; ++i)
        rhs[i] = d[i] * x[i] + (i > 0 ? lo[i] * x[i - 1] : 0.0) + (i + 1 < n ? up[i] * x[i + 1] : 0.0);
    TridiagonalSolver s;
    s.solve(lo, d, up, rhs, sol);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(sol[i], x[i], 1e-13);
}

TEST(Linalg, TridiagonalZeroPivotThrows) {
    std::vector<double> lo{0.0, 1.0}, d{0.0, 1.0}, up{1.0, 0.0}, rhs{1.0, 1.0}, x(2);
    TridiagonalSolver s;
    EXPECT_THROW(s.solve(lo, d, up, rhs, x), Error);
}

TEST(Interpolation, MonotoneCubicPreservesMonotoneData) {
    std::vector<double> xs{0, 1, 2, 3, 4, 5}, fs{0, 0.1, 0.2, 3.0, 3.1, 3.2};
    MonotoneCubic c(xs, fs);
    double prev = c(0.0);
    for (double x = 0.01; x <= 5.0; x += 0.01) {
        const double v = c(x);
        EXPECT_GE(v, prev - 1e-15);
        prev = v;
    }
    for (std::size_t k = 0; k < xs.size(); ++k) EXPECT_DOUBLE_EQ(c(xs[k]), fs[k]);
}

TEST(Interpolation, MonotoneCubicIsThirdOrderOnSmoothData) {
    auto err = [](int n) {
        std::vector<double> xs(n), fs(n);
        for (int k = 0; k < n; ++k) {
            xs[k] = static_cast<double>(k) / (n - 1);
            fs[k] = std::exp(xs[k]);
        }
        MonotoneCubic c(xs, fs);
        double e = 0.0;
        for (double x = 0.1; x < 0.9; x += 0.0137) e = std::max(e, std::abs(c(x) - std::exp(x)));
        return e;
    };
    EXPECT_GT(std::log2(err(41) / err(81)), 2.5);
}
