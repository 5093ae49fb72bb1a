#include <gtest/gtest.h>

#include "sfdm/reduction.hpp"

using namespace sfdm;

namespace {

ModelParams params_at(double w_plus, double delta_lambda) {
    ModelParams p;
    p.w_plus = w_plus;
    p.delta_lambda = delta_lambda;
    return p;
}

double curvature_at_origin(const Reduction& r) {
    const auto& G = r.potential.G();
    const std::size_t m = r.curve.zero_index;
    return G[m + 1] + G[m - 1] - 2.0 * G[m];
}

}  // namespace

TEST(Frame, SaddleRegimeEigenvalues) {
    const ModelParams p = params_at(2.6, 1e-3);
    const auto f = linearize_at_spontaneous(p);
    // 40-digit oracle
    EXPECT_NEAR(f.mu1, -0.84266254592367518, 1e-9);
    EXPECT_NEAR(f.mu2, 0.011578595388764169, 1e-9);
    EXPECT_NEAR(f.S0.x, 0.95096018919681054, 1e-9);
    EXPECT_NEAR(f.S0.y, 0.97044474718007648, 1e-9);
}

TEST(Frame, EpsilonBelowFold) {
    const auto f = linearize_at_spontaneous(params_at(2.45, 1e-3));
    EXPECT_NEAR(f.epsilon, 0.064303807636127783, 1e-9);
    EXPECT_LT(f.epsilon, 1.0);
    EXPECT_GT(f.epsilon, 0.0);
}

TEST(Frame, ReconstructsJacobianAndInverse) {
    for (double w : {2.0, 2.45, 2.5685, 2.6, 2.9}) {
        const ModelParams p = params_at(w, 1e-3);
        const auto f = linearize_at_spontaneous(p);
        const Mat2 rebuilt = f.P * Mat2::diag(f.mu1, f.mu2) * f.P_inv;
        EXPECT_LE(max_abs(rebuilt - jacobian(f.S0, p)), 1e-10) << w;
        EXPECT_LE(max_abs(f.P * f.P_inv - Mat2::identity()), 1e-12) << w;
        EXPECT_GE(std::abs(f.mu1), std::abs(f.mu2));
        for (int j = 0; j < 2; ++j) {
            EXPECT_NEAR(norm(f.P.column(j)), 1.0, 1e-14);
            EXPECT_GT(f.P.column(j).y, 0.0);
        }
        EXPECT_NEAR(f.beta_y, p.beta * std::hypot(f.P_inv.a21, f.P_inv.a22), 1e-18);
    }
}

TEST(Frame, JacobianEigenvaluesAreAlwaysReal) {
    // symmetric cross-coupling gives J12 J21 = w_I^2 phi'(z1) phi'(z2) >= 0
    for (double w : {1.0, 2.0, 3.0})
        for (double nu = 0.0; nu <= 20.0; nu += 0.5) {
            const auto mu = eigenvalues(jacobian(Vec2{nu, 20.0 - nu}, params_at(w, 1e-3)));
            EXPECT_EQ(mu[0].imag(), 0.0);
        }
}

TEST(ChartField, VanishesAtOriginAndLinearizesToDiagonal) {
    const ModelParams p = params_at(2.45, 1e-3);
    const auto f = linearize_at_spontaneous(p);
    const Vec2 h0 = chart_field(0.0, 0.0, f, p);
    EXPECT_LE(norm_inf(h0), 1e-10);
    const double e = 1e-6;
    const Vec2 dx = 0.5 / e * (chart_field(e, 0.0, f, p) - chart_field(-e, 0.0, f, p));
    const Vec2 dy = 0.5 / e * (chart_field(0.0, e, f, p) - chart_field(0.0, -e, f, p));
    EXPECT_NEAR(dx.x, f.mu1, 1e-6);
    EXPECT_NEAR(dx.y, 0.0, 1e-6);
    EXPECT_NEAR(dy.x, 0.0, 1e-6);
    EXPECT_NEAR(dy.y, f.mu2, 1e-6);
}

TEST(ChartField, EqualsProjectedDrift) {
    const ModelParams p = params_at(2.5, 1e-3);
    const auto f = linearize_at_spontaneous(p);
    for (double x = -2.0; x <= 2.0; x += 0.5)
        for (double y = -5.0; y <= 5.0; y += 1.25) {
            const Vec2 direct = f.P_inv * drift(f.S0 + f.P * Vec2{x, y}, p);
            // literal form: -x - (P^-1 S0)_i + (P^-1 Phi(...))_i
            const Vec2 z = synaptic_input(f.S0 + f.P * Vec2{x, y}, p);
            const Vec2 phi{sigmoid(z.x, p), sigmoid(z.y, p)};
            const Vec2 lit = Vec2{-x, -y} - f.P_inv * f.S0 + f.P_inv * phi;
            EXPECT_NEAR(fast_field(x, y, f, p), direct.x, 1e-12);
            EXPECT_NEAR(slow_field(x, y, f, p), direct.y, 1e-12);
            EXPECT_NEAR(lit.x, direct.x, 1e-12);
            EXPECT_NEAR(lit.y, direct.y, 1e-12);
        }
}

TEST(SlowManifold, OriginAndResiduals) {
    const auto r = reduce(params_at(2.45, 1e-3));
    EXPECT_EQ(r.curve.y[r.curve.zero_index], 0.0);
    EXPECT_EQ(r.curve.x_star[r.curve.zero_index], 0.0);
    for (double res : r.curve.residual) EXPECT_LE(res, 1e-10);
    EXPECT_FALSE(r.curve.truncated);
    for (std::size_t k = 1; k < r.curve.y.size(); ++k)
        EXPECT_LE(std::abs(r.curve.x_star[k] - r.curve.x_star[k - 1]),
                  50.0 * r.curve.h * std::max(1.0, std::abs(r.curve.x_star[k - 1])));
}

TEST(SlowManifold, RejectsEvenPointCount) {
    const auto f = linearize_at_spontaneous(params_at(2.45, 1e-3));
    EXPECT_THROW(solve_slow_manifold(f, params_at(2.45, 1e-3), 5.0, 100), Error);
    EXPECT_THROW(solve_slow_manifold(f, params_at(2.45, 1e-3), 0.0, 101), Error);
}

TEST(SlowManifold, InvalidAtWeakCoupling) {
    const auto r = reduce(params_at(1.5, 1e-3));
    EXPECT_FALSE(r.curve.valid);
    ASSERT_TRUE(r.curve.violation_nu.has_value());
    EXPECT_LT(std::min(r.curve.violation_nu->x, r.curve.violation_nu->y), 0.0);
}

TEST(SlowManifold, ValidAcrossMultistableRange) {
    for (double w = 2.0; w <= 2.9 + 1e-9; w += 0.1) EXPECT_TRUE(reduce(params_at(w, 1e-3)).curve.valid) << w;
}

TEST(SlowManifold, SlowFieldVanishesAtDecisionImages) {
    const ModelParams p = params_at(2.5, 1e-3);
    const auto r = reduce(p);
    for (std::size_t i = 0; i < r.equilibria.count(); ++i) {
        const double y = r.equilibrium_y[i];
        EXPECT_LE(std::abs(reduced_drift(y, r.curve, r.frame, p)), 1e-6) << y;
    }
}

TEST(SlowManifold, AllEquilibriaOnReducedDriftZeroSet) {
    for (double w : {2.0, 2.45, 2.5685, 2.6}) {
        const ModelParams p = params_at(w, 1e-3);
        const auto r = reduce(p);
        for (double y : r.equilibrium_y) {
            if (y < r.curve.y_min() || y > r.curve.y_max()) continue;
            EXPECT_LE(std::abs(reduced_drift(y, r.curve, r.frame, p)), 1e-6) << w << " " << y;
        }
    }
}

TEST(Potential, ZeroAtOriginAndDerivativeMatchesDrift) {
    const ModelParams p = params_at(2.45, 1e-3);
    const auto r = reduce(p);
    const auto& G = r.potential.G();
    const auto& g = r.potential.g();
    const auto& y = r.potential.y();
    EXPECT_EQ(G[r.curve.zero_index], 0.0);
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < y.size(); ++k) {
        const double dG = (G[k + 1] - G[k - 1]) / (y[k + 1] - y[k - 1]);
        worst = std::max(worst, std::abs(dG + g[k]));
    }
    EXPECT_LT(worst, 1e-3);
}

TEST(Potential, ReducedDriftOutOfRange) {
    const ModelParams p = params_at(2.45, 1e-3);
    const auto r = reduce(p);
    try {
        reduced_drift(r.curve.y_max() + 1.0, r.curve, r.frame, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.name(), "OutOfRange");
    }
    EXPECT_NEAR(reduced_drift(0.0, r.curve, r.frame, p), 0.0, 1e-14);
}

TEST(Potential, SymmetricWhenUnbiased) {
    const auto r = reduce(params_at(2.45, 0.0));
    const auto& G = r.potential.G();
    const std::size_t m = r.curve.zero_index;
    for (std::size_t j = 1; j <= m; ++j) EXPECT_NEAR(G[m + j], G[m - j], 1e-9);
}

TEST(Potential, UnbiasedStationaryPointsAtEquilibria) {
    const auto r = reduce(params_at(2.45, 0.0));
    const auto& y = r.potential.y();
    const auto& g = r.potential.g();
    // sign changes of g bracket every equilibrium image and nothing else
    std::vector<double> crossings;
    for (std::size_t k = 0; k + 1 < y.size(); ++k)
        if (g[k] == 0.0 || g[k] * g[k + 1] < 0.0) crossings.push_back(g[k] == 0.0 ? y[k] : 0.5 * (y[k] + y[k + 1]));
    ASSERT_EQ(crossings.size(), r.equilibria.count());
    for (double yi : r.equilibrium_y) {
        double best = 1e9;
        for (double c : crossings) best = std::min(best, std::abs(c - yi));
        EXPECT_LT(best, r.curve.h);
    }
    // two wells plus a spontaneous minimum between two barriers
    EXPECT_GT(curvature_at_origin(r), 0.0);
}

TEST(Potential, OriginChangesFromMinimumToMaximumAcrossFold) {
    for (int n : {2001, 4001}) {
        ReductionOptions o;
        o.n_points = n;
        EXPECT_GT(curvature_at_origin(reduce(params_at(2.5685, 1e-3), o)), 0.0) << n;
        EXPECT_LT(curvature_at_origin(reduce(params_at(2.5705, 1e-3), o)), 0.0) << n;
    }
}

TEST(Potential, SecondOrderGridConvergence) {
    const ModelParams p = params_at(2.45, 1e-3);
    ReductionOptions o;
    o.y_m = 10.0;
    auto at = [&](int n) {
        o.n_points = n;
        return reduce(p, o).potential;
    };
    const auto coarse = at(201), mid = at(401), fine = at(801);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t k = 0; k < coarse.size(); ++k) {
        e1 = std::max(e1, std::abs(coarse.G()[k] - fine.G()[4 * k]));
        e2 = std::max(e2, std::abs(mid.G()[2 * k] - fine.G()[4 * k]));
    }
    // with error C h^p: e1 / e2 = (1 - 4^-p) / (2^-p - 4^-p) = 2^p + 1
    const double order = std::log2(e1 / e2 - 1.0);
    EXPECT_GE(order, 1.9);
}

TEST(Reduce, NoDecisionStatesIsValidityFailure) {
    try {
        reduce(params_at(1.0, 1e-3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::validity);
    }
}
