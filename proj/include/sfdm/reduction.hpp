#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sfdm/equilibria.hpp"
#include "sfdm/errors.hpp"
#include "sfdm/interpolation.hpp"
#include "sfdm/linalg.hpp"
#include "sfdm/model.hpp"

namespace sfdm {

/// Chart X = (x, y) = P^-1 (nu - S0) centred on the spontaneous state.
/// Column 0 of P belongs to the large-magnitude eigenvalue mu1 (fast
/// direction), column 1 to mu2 (slow direction).
struct LinearizationFrame {
    Vec2 S0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    Mat2 P;
    Mat2 P_inv;
    double epsilon = 0.0;
    double beta_y = 0.0;

    Vec2 to_chart(Vec2 nu) const { return P_inv * (nu - S0); }
    Vec2 to_rates(Vec2 X) const { return S0 + P * X; }
};

namespace detail {
inline Vec2 orient(Vec2 v) {
    if (v.y < 0.0 || (v.y == 0.0 && v.x < 0.0)) return -1.0 * v;
    return v;
}
}  // namespace detail

/// Eigen-decomposition of J_F at a given equilibrium S0.
inline LinearizationFrame make_frame(Vec2 S0, const ModelParams& params) {
    const Mat2 jac = jacobian(S0, params);
    const auto mu = eigenvalues(jac);
    if (mu[0].imag() != 0.0)
        throw numerical_error("ComplexEigenvalues", "Jacobian at the spontaneous state has complex eigenvalues");
    double m1 = mu[0].real();
    double m2 = mu[1].real();
    if (std::abs(m1 - m2) < 1e-8)
        throw numerical_error("DegenerateFrame", "eigenvalues at the spontaneous state nearly coincide");
    if (std::abs(m2) > std::abs(m1)) std::swap(m1, m2);

    LinearizationFrame f;
    f.S0 = S0;
    f.mu1 = m1;
    f.mu2 = m2;
    f.P = Mat2::from_columns(detail::orient(eigenvector(jac, m1)), detail::orient(eigenvector(jac, m2)));
    f.P_inv = inverse(f.P);
    f.epsilon = std::abs(m2) / std::abs(m1);
    f.beta_y = params.beta * std::hypot(f.P_inv.a21, f.P_inv.a22);
    return f;
}

inline LinearizationFrame linearize_at_spontaneous(const EquilibriumSet& eqs, const ModelParams& params) {
    const Equilibrium* s0 = eqs.find(Role::spontaneous);
    if (s0 == nullptr) throw precondition_error("linearize_at_spontaneous: no spontaneous equilibrium");
    return make_frame(s0->location, params);
}

inline LinearizationFrame linearize_at_spontaneous(const ModelParams& params, int grid_resolution = 40) {
    return linearize_at_spontaneous(find_equilibria(params, grid_resolution), params);
}

/// (f, g) = P^-1 F(S0 + P X).
inline Vec2 chart_field(double x, double y, const LinearizationFrame& frame, const ModelParams& params) {
    return frame.P_inv * drift(frame.to_rates({x, y}), params);
}

inline double fast_field(double x, double y, const LinearizationFrame& frame, const ModelParams& params) {
    return chart_field(x, y, frame, params).x;
}

inline double slow_field(double x, double y, const LinearizationFrame& frame, const ModelParams& params) {
    return chart_field(x, y, frame, params).y;
}

/// d f / d x = (P^-1 J_F P)_11.
inline double fast_field_dx(double x, double y, const LinearizationFrame& frame, const ModelParams& params) {
    const Mat2 jx = frame.P_inv * jacobian(frame.to_rates({x, y}), params) * frame.P;
    return jx.a11;
}

struct ManifoldOptions {
    double manifold_tol = 1e-10;
    double jump_factor = 50.0;
    int max_iterations = 100;
};

struct SlowManifoldCurve {
    std::vector<double> y;
    std::vector<double> x_star;
    std::vector<double> residual;
    std::size_t zero_index = 0;  ///< index of y = 0
    double h = 0.0;
    double y_m = 0.0;

    bool valid = true;
    std::optional<double> violation_y;  ///< violation closest to y = 0
    std::optional<Vec2> violation_nu;
    double valid_lo = 0.0;  ///< span over which validity was judged
    double valid_hi = 0.0;

    bool truncated = false;  ///< continuation lost the root on at least one side
    std::optional<double> root_lost_lo;
    std::optional<double> root_lost_hi;

    MonotoneCubic interpolant;

    double y_min() const { return y.front(); }
    double y_max() const { return y.back(); }
    double x_at(double yy) const { return interpolant(yy); }
};

namespace detail {

/// Safeguarded Newton on a bracket [a, b] with fa * fb < 0.
template <class F, class D>
double bracketed_newton(F&& f, D&& df, double a, double b, double fa, double tol, int max_iter) {
    double x = 0.5 * (a + b);
    for (int it = 0; it < max_iter; ++it) {
        const double fx = f(x);
        if (std::abs(fx) <= tol) return x;
        if ((fx < 0.0) == (fa < 0.0)) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        const double d = df(x);
        double next = d != 0.0 ? x - fx / d : std::numeric_limits<double>::quiet_NaN();
        const double lo = std::min(a, b);
        const double hi = std::max(a, b);
        if (!(next > lo && next < hi)) next = 0.5 * (a + b);
        if (next == x) return x;
        x = next;
    }
    return x;
}

}  // namespace detail

/// Zero set x*(y) of the fast field on a uniform grid over [-y_m, y_m],
/// continued outward from the origin.
///
/// Validity is judged on [valid_lo, valid_hi] (default: the whole grid): the
/// curve is valid when every mapped node there lies in [0, nu_max]^2.
inline SlowManifoldCurve solve_slow_manifold(const LinearizationFrame& frame, const ModelParams& params, double y_m,
                                             int n_points, std::optional<std::pair<double, double>> validity_span = {},
                                             const ManifoldOptions& opts = {}) {
    if (n_points < 3 || n_points % 2 == 0) throw precondition_error("solve_slow_manifold: n_points must be odd and >= 3");
    if (!(y_m > 0.0) || !std::isfinite(y_m)) throw precondition_error("solve_slow_manifold: y_m must be > 0");

    const auto n = static_cast<std::size_t>(n_points);
    const std::size_t mid = n / 2;
    const double h = 2.0 * y_m / static_cast<double>(n - 1);
    std::vector<double> ys(n), xs(n, 0.0), res(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        ys[k] = k == mid ? 0.0 : -y_m + h * static_cast<double>(k);

    std::size_t lo = 0;
    std::size_t hi = n - 1;
    std::optional<double> lost_lo, lost_hi;

    for (int dir : {+1, -1}) {
        double prev = 0.0;
        double prev2 = 0.0;
        for (std::size_t j = 1; j <= mid; ++j) {
            const std::size_t k = dir > 0 ? mid + j : mid - j;
            const double y = ys[k];
            auto f = [&](double x) { return fast_field(x, y, frame, params); };
            auto df = [&](double x) { return fast_field_dx(x, y, frame, params); };
            const double guard = opts.jump_factor * h * std::max(1.0, std::abs(prev));
            const double predictor = j >= 2 ? 2.0 * prev - prev2 : prev;

            std::optional<double> root;
            // plain Newton from the predictor first
            double x = predictor;
            for (int it = 0; it < opts.max_iterations; ++it) {
                const double fx = f(x);
                if (std::abs(fx) <= opts.manifold_tol) {
                    if (std::abs(x - prev) <= guard) root = x;
                    break;
                }
                const double d = df(x);
                if (d == 0.0 || !std::isfinite(d)) break;
                x -= fx / d;
                if (!std::isfinite(x) || std::abs(x - prev) > guard) break;
            }
            // otherwise bracket inside the jump guard, growing outward from prev
            if (!root) {
                const double f0 = f(prev);
                for (double w = guard / 256.0; w <= guard * (1.0 + 1e-12) && !root; w *= 2.0) {
                    for (double side : {+1.0, -1.0}) {
                        const double b = prev + side * w;
                        const double fb = f(b);
                        if (std::abs(fb) <= opts.manifold_tol) {
                            root = b;
                            break;
                        }
                        if ((fb < 0.0) != (f0 < 0.0)) {
                            const double r =
                                detail::bracketed_newton(f, df, prev, b, f0, opts.manifold_tol, 4 * opts.max_iterations);
                            if (std::abs(f(r)) <= opts.manifold_tol) root = r;
                            break;
                        }
                    }
                }
            }
            if (!root) {
                (dir > 0 ? lost_hi : lost_lo) = y;
                (dir > 0 ? hi : lo) = dir > 0 ? k - 1 : k + 1;
                break;
            }
            xs[k] = *root;
            res[k] = std::abs(f(*root));
            prev2 = prev;
            prev = *root;
        }
    }

    SlowManifoldCurve c;
    c.y.assign(ys.begin() + static_cast<std::ptrdiff_t>(lo), ys.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    c.x_star.assign(xs.begin() + static_cast<std::ptrdiff_t>(lo), xs.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    c.residual.assign(res.begin() + static_cast<std::ptrdiff_t>(lo), res.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    c.zero_index = mid - lo;
    c.h = h;
    c.y_m = y_m;
    c.truncated = lost_lo.has_value() || lost_hi.has_value();
    c.root_lost_lo = lost_lo;
    c.root_lost_hi = lost_hi;
    if (c.y.size() < 2) throw numerical_error("RootLost", "slow manifold lost next to y = 0");
    c.interpolant = MonotoneCubic(c.y, c.x_star);

    c.valid_lo = validity_span ? validity_span->first : -y_m;
    c.valid_hi = validity_span ? validity_span->second : y_m;
    // a truncated curve cannot certify the part it did not reach
    if ((lost_lo && *lost_lo >= c.valid_lo) || (lost_hi && *lost_hi <= c.valid_hi)) {
        c.valid = false;
        c.violation_y = lost_lo && *lost_lo >= c.valid_lo ? lost_lo : lost_hi;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c.y.size(); ++k) {
        if (c.y[k] < c.valid_lo || c.y[k] > c.valid_hi) continue;
        const Vec2 nu = frame.to_rates({c.x_star[k], c.y[k]});
        const bool inside = nu.x >= 0.0 && nu.y >= 0.0 && nu.x <= params.nu_max && nu.y <= params.nu_max;
        if (!inside && std::abs(c.y[k]) < best) {
            best = std::abs(c.y[k]);
            c.valid = false;
            c.violation_y = c.y[k];
            c.violation_nu = nu;
        }
    }
    return c;
}

/// Effective potential G(y) = -int_0^y g(x*(z), z) dz sampled on a grid,
/// together with its derivative -g at the nodes.
class Potential1D {
public:
    Potential1D() = default;

    /// `g` is the drift at the nodes, so G' = -g.
    Potential1D(std::vector<double> y, std::vector<double> G, std::vector<double> g, double beta_y)
        : y_(std::move(y)), G_(std::move(G)), g_(std::move(g)), beta_y_(beta_y) {
        if (y_.size() < 3 || G_.size() != y_.size() || g_.size() != y_.size())
            throw precondition_error("Potential1D needs >= 3 matching samples");
        for (std::size_t k = 0; k + 1 < y_.size(); ++k)
            if (!(y_[k + 1] > y_[k])) throw precondition_error("Potential1D grid must be strictly increasing");
    }

    /// Samples an analytic potential and its derivative on a uniform grid.
    static Potential1D from_function(double y_lo, double y_hi, std::size_t n, const std::function<double(double)>& G,
                                     const std::function<double(double)>& dG, double beta_y) {
        std::vector<double> y(n), g(n), v(n);
        for (std::size_t k = 0; k < n; ++k) {
            y[k] = y_lo + (y_hi - y_lo) * static_cast<double>(k) / static_cast<double>(n - 1);
            v[k] = G(y[k]);
            g[k] = -dG(y[k]);
        }
        return Potential1D(std::move(y), std::move(v), std::move(g), beta_y);
    }

    const std::vector<double>& y() const { return y_; }
    const std::vector<double>& G() const { return G_; }
    const std::vector<double>& g() const { return g_; }
    double beta_y() const { return beta_y_; }
    std::size_t size() const { return y_.size(); }
    double y_min() const { return y_.front(); }
    double y_max() const { return y_.back(); }

    /// G between nodes by cubic Hermite with the nodal slopes -g.
    double value(double yy) const {
        check_range(yy);
        const std::size_t k = locate_interval(y_, yy);
        return hermite(y_[k], y_[k + 1], G_[k], G_[k + 1], -g_[k], -g_[k + 1], yy);
    }

    /// G' between nodes: derivative of the same Hermite cubic.
    double slope(double yy) const {
        check_range(yy);
        const std::size_t k = locate_interval(y_, yy);
        const double hk = y_[k + 1] - y_[k];
        const double t = (yy - y_[k]) / hk;
        const double d0 = -g_[k];
        const double d1 = -g_[k + 1];
        return (6 * t * t - 6 * t) / hk * G_[k] + (3 * t * t - 4 * t + 1) * d0 + (-6 * t * t + 6 * t) / hk * G_[k + 1] +
               (3 * t * t - 2 * t) * d1;
    }

private:
    void check_range(double yy) const {
        if (!(yy >= y_.front() && yy <= y_.back()))
            throw numerical_error("OutOfRange", "y = " + std::to_string(yy) + " outside the potential grid");
    }

    std::vector<double> y_, G_, g_;
    double beta_y_ = 0.0;
};

/// Cumulative trapezoid of -g(x*(z), z) outward from y = 0, so the left half
/// is computed by the mirror of the right-half procedure.
inline Potential1D build_potential(const SlowManifoldCurve& curve, const LinearizationFrame& frame,
                                   const ModelParams& params) {
    const std::size_t n = curve.y.size();
    std::vector<double> g(n), G(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) g[k] = slow_field(curve.x_star[k], curve.y[k], frame, params);
    const std::size_t m = curve.zero_index;
    for (std::size_t k = m + 1; k < n; ++k) G[k] = G[k - 1] - 0.5 * (curve.y[k] - curve.y[k - 1]) * (g[k] + g[k - 1]);
    for (std::size_t k = m; k-- > 0;) G[k] = G[k + 1] + 0.5 * (curve.y[k + 1] - curve.y[k]) * (g[k] + g[k + 1]);
    return Potential1D(curve.y, std::move(G), std::move(g), frame.beta_y);
}

/// g(x*(y), y) with x* interpolated between the curve nodes.
inline double reduced_drift(double y, const SlowManifoldCurve& curve, const LinearizationFrame& frame,
                            const ModelParams& params) {
    if (!(y >= curve.y_min() && y <= curve.y_max()))
        throw numerical_error("OutOfRange", "y = " + std::to_string(y) + " outside the slow-manifold grid");
    return slow_field(curve.x_at(y), y, frame, params);
}

struct ReductionOptions {
    int grid_resolution = 40;  ///< equilibrium seed lattice
    int n_points = 2001;
    double y_m = 0.0;  ///< 0 selects margin * max |y-image of the decision states|
    double margin = 1.05;
    EquilibriumOptions equilibrium;
    ManifoldOptions manifold;
};

/// Everything the downstream modules need from one parameter set.
struct Reduction {
    ModelParams params;
    EquilibriumSet equilibria;
    LinearizationFrame frame;
    SlowManifoldCurve curve;
    Potential1D potential;
    std::vector<double> equilibrium_y;  ///< y-image of every equilibrium, in equilibria order
};

/// Equilibria, frame, slow manifold and potential in one pass. Validity is
/// judged between the y-images of the outermost stable equilibria.
inline Reduction reduce(const ModelParams& params, const ReductionOptions& opts = {}) {
    Reduction r;
    r.params = params;
    r.equilibria = find_equilibria(params, opts.grid_resolution, opts.equilibrium);
    r.frame = linearize_at_spontaneous(r.equilibria, params);

    double span_lo = 0.0;
    double span_hi = 0.0;
    double reach = 0.0;
    for (const auto& e : r.equilibria.equilibria) {
        const double y = r.frame.to_chart(e.location).y;
        r.equilibrium_y.push_back(y);
        if (e.role == Role::spontaneous) continue;
        reach = std::max(reach, std::abs(y));
        if (is_stable(e.stability)) {
            span_lo = std::min(span_lo, y);
            span_hi = std::max(span_hi, y);
        }
    }
    double y_m = opts.y_m;
    if (y_m <= 0.0) {
        if (reach == 0.0)
            throw validity_error("NoDecisionStates",
                                 "only the spontaneous equilibrium exists; the slow manifold has no decision states");
        y_m = opts.margin * reach;
    }
    r.curve = solve_slow_manifold(r.frame, params, y_m, opts.n_points, std::make_pair(span_lo, span_hi), opts.manifold);
    r.potential = build_potential(r.curve, r.frame, params);
    return r;
}

}  // namespace sfdm
