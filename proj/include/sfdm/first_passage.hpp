#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfdm/errors.hpp"
#include "sfdm/fokker_planck.hpp"
#include "sfdm/reduction.hpp"

namespace sfdm {

enum class Regime { double_barrier, single_maximum };

inline std::string_view to_string(Regime r) {
    return r == Regime::double_barrier ? "double-barrier" : "single-maximum";
}

struct Extremum {
    double y;
    double G;
    bool is_max;
};

struct BarrierSet {
    double a_minus = 0.0;
    double a_plus = 0.0;
    double well_left = 0.0;   ///< deepest minimum left of the barrier region
    double well_right = 0.0;  ///< deepest minimum right of it
    Regime regime = Regime::double_barrier;
    std::vector<Extremum> extrema;  ///< all interior extrema, ascending in y
};

/// Interior extrema from sign changes of the discrete derivative, each refined
/// by the vertex of the parabola through the three surrounding nodes.
inline std::vector<Extremum> find_extrema(const Potential1D& potential) {
    const auto& y = potential.y();
    const auto& G = potential.G();
    std::vector<Extremum> out;
    for (std::size_t k = 1; k + 1 < y.size(); ++k) {
        const double dl = G[k] - G[k - 1];
        const double dr = G[k + 1] - G[k];
        const bool is_max = dl > 0.0 && dr <= 0.0;
        const bool is_min = dl < 0.0 && dr >= 0.0;
        if (!is_max && !is_min) continue;
        // parabola through (y[k-1], y[k], y[k+1]) in divided-difference form
        const double h0 = y[k] - y[k - 1];
        const double h1 = y[k + 1] - y[k];
        const double s0 = dl / h0;
        const double s1 = dr / h1;
        const double curv = (s1 - s0) / (h0 + h1);
        double yv = y[k];
        double gv = G[k];
        if (curv != 0.0) {
            // derivative of the parabola: s0 + curv (2 t - y[k-1] - y[k])
            yv = 0.5 * (y[k - 1] + y[k]) - s0 / (2.0 * curv);
            yv = std::clamp(yv, y[k - 1], y[k + 1]);
            gv = G[k - 1] + s0 * (yv - y[k - 1]) + curv * (yv - y[k - 1]) * (yv - y[k]);
        }
        out.push_back({yv, gv, is_max});
    }
    return out;
}

/// Barriers flanking the spontaneous state y = 0 and the two decision wells.
inline BarrierSet find_barriers(const Potential1D& potential) {
    if (!(potential.y_min() < 0.0 && potential.y_max() > 0.0))
        throw precondition_error("find_barriers: the grid must contain y = 0 in its interior");
    BarrierSet b;
    b.extrema = find_extrema(potential);
    const auto& ex = b.extrema;

    // nature of y = 0 from the Hermite potential at the local grid spacing
    const auto& y = potential.y();
    const std::size_t k0 = locate_interval(y, 0.0);
    const double delta = std::min(y[k0 + 1] - y[k0], std::max(y[k0 + 1], -y[k0]));
    const double dd = std::min({delta, potential.y_max(), -potential.y_min()});
    const double curvature = potential.value(dd) + potential.value(-dd) - 2.0 * potential.value(0.0);

    auto nearest = [&](bool want_max, bool left, double from) -> std::optional<Extremum> {
        std::optional<Extremum> best;
        for (const auto& e : ex) {
            if (e.is_max != want_max) continue;
            if (left ? !(e.y < from) : !(e.y > from)) continue;
            if (!best || std::abs(e.y - from) < std::abs(best->y - from)) best = e;
        }
        return best;
    };
    auto deepest = [&](bool left, double from) -> std::optional<Extremum> {
        std::optional<Extremum> best;
        for (const auto& e : ex) {
            if (e.is_max) continue;
            if (left ? !(e.y < from) : !(e.y > from)) continue;
            if (!best || e.G < best->G) best = e;
        }
        return best;
    };

    if (curvature > 0.0) {
        // y = 0 is a minimum: spontaneous well between two barriers
        const double tiny = 0.5 * dd;
        const auto lo = nearest(true, true, -tiny);
        const auto hi = nearest(true, false, tiny);
        if (!lo || !hi) throw numerical_error("NoWells", "no barrier on one side of the spontaneous state");
        b.regime = Regime::double_barrier;
        b.a_minus = lo->y;
        b.a_plus = hi->y;
    } else {
        // y = 0 is the barrier itself; take the maximum refined next to it
        b.regime = Regime::single_maximum;
        double a = 0.0;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : ex)
            if (e.is_max && std::abs(e.y) < best && std::abs(e.y) <= 2.0 * dd) {
                best = std::abs(e.y);
                a = e.y;
            }
        b.a_minus = b.a_plus = a;
    }
    const auto wl = deepest(true, b.a_minus);
    const auto wr = deepest(false, b.a_plus);
    if (!wl || !wr) throw numerical_error("NoWells", "potential has no decision well on one side");
    b.well_left = wl->y;
    b.well_right = wr->y;
    return b;
}

namespace detail {

inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

/// Quadrature nodes: grid nodes strictly inside (lo, hi) plus lo, y0, hi.
/// Returns U = 2 G / beta_y^2 at the nodes and the index of y0.
struct ExitGrid {
    std::vector<double> y;
    std::vector<double> U;
    std::size_t i0 = 0;
};

inline ExitGrid exit_grid(const Potential1D& potential, double y0, double lo, double hi) {
    if (lo == hi) throw numerical_error("DegenerateInterval", "exit interval endpoints coincide");
    if (!(lo < hi)) throw precondition_error("exit interval must satisfy y_left < y_right");
    if (!(y0 >= lo && y0 <= hi)) throw precondition_error("start point outside the exit interval");
    if (!(lo >= potential.y_min() && hi <= potential.y_max()))
        throw numerical_error("OutOfRange", "exit interval exceeds the potential grid");
    const double by = potential.beta_y();
    const double c = 2.0 / (by * by);
    ExitGrid g;
    g.y.push_back(lo);
    for (double v : potential.y())
        if (v > lo && v < hi) g.y.push_back(v);
    g.y.push_back(hi);
    const auto it = std::lower_bound(g.y.begin(), g.y.end(), y0);
    if (*it != y0) g.y.insert(it, y0);
    g.i0 = static_cast<std::size_t>(std::lower_bound(g.y.begin(), g.y.end(), y0) - g.y.begin());
    g.U.resize(g.y.size());
    for (std::size_t k = 0; k < g.y.size(); ++k) g.U[k] = c * potential.value(g.y[k]);
    return g;
}

/// log of int_{y_k}^{y_{k+1}} exp(U) with U linear on the cell; exact for a
/// piecewise-linear U and equal to the trapezoid as dU -> 0.
inline double log_cell_integral(double h, double u_a, double u_b) {
    return std::log(h) + u_a - log_bernoulli(u_b - u_a);
}

/// log of the cumulative integral of exp(U) from the left end, per node.
inline std::vector<double> log_scale(const ExitGrid& g) {
    std::vector<double> s(g.y.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k + 1 < g.y.size(); ++k) {
        const double h = g.y[k + 1] - g.y[k];
        s[k + 1] = h == 0.0 ? s[k] : log_add(s[k], log_cell_integral(h, g.U[k], g.U[k + 1]));
    }
    return s;
}

}  // namespace detail

struct ExitSplit {
    double left;
    double right;
};

/// Probabilities of leaving [y_left, y_right] through either end from y0.
inline ExitSplit exit_split(const Potential1D& potential, double y0, double y_left, double y_right) {
    if (!(potential.beta_y() > 0.0)) throw numerical_error("DegenerateNoise", "exit problem needs beta_y > 0");
    const auto g = detail::exit_grid(potential, y0, y_left, y_right);
    const auto s = detail::log_scale(g);
    const double total = s.back();
    // right-hand partial integral computed separately so both sides keep
    // full relative accuracy
    double tail = -std::numeric_limits<double>::infinity();
    for (std::size_t k = g.i0; k + 1 < g.y.size(); ++k) {
        const double h = g.y[k + 1] - g.y[k];
        if (h == 0.0) continue;
        tail = detail::log_add(tail, detail::log_cell_integral(h, g.U[k], g.U[k + 1]));
    }
    const double right = std::exp(s[g.i0] - total);
    const double left = std::exp(tail - total);
    const double sum = left + right;
    return {left / sum, right / sum};
}

/// Probability of exiting through y_right first.
inline double splitting_probability(const Potential1D& potential, double y0, double y_left, double y_right) {
    return exit_split(potential, y0, y_left, y_right).right;
}

/// Mean exit time from y0 for dy = -G'(y) dt + beta_y dW absorbed at both ends.
///
/// Green's-function form T = (2 / beta_y^2) [ pi_L(y0) A + pi_R(y0) B ] with
///   A = int_L^y0 K,   K(z)  = int_L^z exp(U(u) - U(z)) du,
///   B = int_y0^R Kr,  Kr(z) = int_z^R exp(U(u) - U(z)) du,
/// U = 2 G / beta_y^2. K and Kr follow one-step recurrences in log space, so
/// deep wells neither overflow nor cancel. Inner integrals of exp(U) are
/// taken exactly for U linear on each cell: with a cell Peclet number in the
/// thousands (beta of order 1e-3) a trapezoid on exp(U) is off by a factor of
/// order dU. Outer integrals of K and Kr are trapezoidal.
inline double mean_exit_time(const Potential1D& potential, double y0, double y_left, double y_right) {
    const double by = potential.beta_y();
    if (!(by > 0.0)) throw numerical_error("DegenerateNoise", "mean exit time needs beta_y > 0");
    const auto g = detail::exit_grid(potential, y0, y_left, y_right);
    const std::size_t n = g.y.size();
    const std::size_t i0 = g.i0;
    if (i0 == 0 || i0 == n - 1) return 0.0;
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();

    // forward recurrence K_{k+1} = e^{-dU} (K_k + h / B(dU)), accumulated into A
    double logK = neg_inf;
    double logA = neg_inf;
    for (std::size_t k = 0; k < i0; ++k) {
        const double h = g.y[k + 1] - g.y[k];
        if (h == 0.0) continue;
        const double du = g.U[k + 1] - g.U[k];
        const double next = detail::log_add(logK, std::log(h) - log_bernoulli(du)) - du;
        logA = detail::log_add(logA, std::log(0.5 * h) + detail::log_add(logK, next));
        logK = next;
    }
    // backward recurrence for Kr, accumulated into B
    double logKr = neg_inf;
    double logB = neg_inf;
    for (std::size_t k = n - 1; k > i0; --k) {
        const double h = g.y[k] - g.y[k - 1];
        if (h == 0.0) continue;
        const double du = g.U[k - 1] - g.U[k];
        const double next = detail::log_add(logKr, std::log(h) - log_bernoulli(du)) - du;
        logB = detail::log_add(logB, std::log(0.5 * h) + detail::log_add(logKr, next));
        logKr = next;
    }
    const auto split = exit_split(potential, y0, y_left, y_right);
    const double scale = 2.0 / (by * by);
    double t = 0.0;
    if (split.left > 0.0) t += std::exp(std::log(split.left) + logA);
    if (split.right > 0.0) t += std::exp(std::log(split.right) + logB);
    return scale * t;
}

struct BehaviorResult {
    double performance = 0.0;        ///< headline P_a selected by the regime
    double performance_split = 0.0;  ///< splitting probability into the correct side
    double performance_mass = 0.0;   ///< stationary mass on the correct side of its barrier
    double reaction_time = 0.0;      ///< mean exit time from y = 0, ms
    Regime regime = Regime::double_barrier;
    double interval_lo = 0.0;  ///< exit interval used for the split and RT
    double interval_hi = 0.0;
    BarrierSet barriers;
    int correct_side = 0;  ///< +1: correct well at y > 0, -1: at y < 0
    Vec2 correct_well_nu;
};

/// Performance and reaction time of the reduced model.
///
/// The correct well is the one whose mapped rates have nu1 > nu2. In the
/// double-barrier regime the exit interval is [a-, a+] around the
/// spontaneous well; in the single-maximum regime it spans the two well
/// minima. Both P_a definitions are returned; the headline is the splitting
/// probability from y = 0 over the exit interval.
inline BehaviorResult behavior(const Potential1D& potential, const SlowManifoldCurve& curve,
                               const LinearizationFrame& frame) {
    BehaviorResult r;
    r.barriers = find_barriers(potential);
    const auto& b = r.barriers;
    r.regime = b.regime;

    const Vec2 nu_left = frame.to_rates({curve.x_at(b.well_left), b.well_left});
    const Vec2 nu_right = frame.to_rates({curve.x_at(b.well_right), b.well_right});
    const double pref_left = nu_left.x - nu_left.y;
    const double pref_right = nu_right.x - nu_right.y;
    r.correct_side = pref_right >= pref_left ? +1 : -1;
    r.correct_well_nu = r.correct_side > 0 ? nu_right : nu_left;

    if (b.regime == Regime::double_barrier) {
        r.interval_lo = b.a_minus;
        r.interval_hi = b.a_plus;
    } else {
        r.interval_lo = b.well_left;
        r.interval_hi = b.well_right;
    }
    const auto split = exit_split(potential, 0.0, r.interval_lo, r.interval_hi);
    r.performance_split = r.correct_side > 0 ? split.right : split.left;
    r.reaction_time = mean_exit_time(potential, 0.0, r.interval_lo, r.interval_hi);

    // stationary mass beyond the barrier on the correct side
    const auto qs = stationary_density_1d(potential);
    const double cut = r.correct_side > 0 ? b.a_plus : b.a_minus;
    double mass = 0.0;
    for (std::size_t k = 0; k < qs.y.size(); ++k) {
        const bool beyond = r.correct_side > 0 ? qs.y[k] > cut : qs.y[k] < cut;
        if (beyond) mass += qs.weights[k] * qs.q[k];
    }
    r.performance_mass = mass;
    r.performance = r.performance_split;
    return r;
}

inline BehaviorResult behavior(const Reduction& red) { return behavior(red.potential, red.curve, red.frame); }

}  // namespace sfdm
