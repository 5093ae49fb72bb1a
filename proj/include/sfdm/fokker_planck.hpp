#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "sfdm/errors.hpp"
#include "sfdm/linalg.hpp"
#include "sfdm/model.hpp"
#include "sfdm/parallel.hpp"
#include "sfdm/reduction.hpp"

namespace sfdm {

/// Trapezoidal weights of a node grid: half cells at both ends.
inline std::vector<double> trapezoid_weights(const std::vector<double>& y) {
    const std::size_t n = y.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double h = 0.5 * (y[k + 1] - y[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    return w;
}

/// Nodal density on a 1D grid with trapezoidal quadrature weights.
struct Density1D {
    std::vector<double> y;
    std::vector<double> q;
    std::vector<double> weights;

    Density1D() = default;
    Density1D(std::vector<double> grid, std::vector<double> values)
        : y(std::move(grid)), q(std::move(values)), weights(trapezoid_weights(y)) {
        if (q.size() != y.size()) throw precondition_error("Density1D: grid and values differ in size");
    }

    double mass() const {
        double m = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) m += weights[k] * q[k];
        return m;
    }

    void normalize() {
        const double m = mass();
        if (!(m > 0.0) || !std::isfinite(m)) throw numerical_error("ZeroMass", "density has no mass to normalize");
        for (auto& v : q) v /= m;
    }

    double min_value() const { return *std::min_element(q.begin(), q.end()); }
};

inline double l1_distance(const Density1D& a, const Density1D& b) {
    if (a.q.size() != b.q.size()) throw precondition_error("l1_distance: densities live on different grids");
    double s = 0.0;
    for (std::size_t k = 0; k < a.q.size(); ++k) s += a.weights[k] * std::abs(a.q[k] - b.q[k]);
    return s;
}

inline Density1D gaussian_1d(const std::vector<double>& y, double mean, double sd) {
    std::vector<double> q(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double z = (y[k] - mean) / sd;
        q[k] = std::exp(-0.5 * z * z);
    }
    Density1D d(y, std::move(q));
    d.normalize();
    return d;
}

/// Gibbs density exp(-2 G / beta_y^2) / Z on the potential's grid.
inline Density1D stationary_density_1d(const Potential1D& potential) {
    const double by = potential.beta_y();
    if (!(by > 0.0)) throw numerical_error("DegenerateNoise", "stationary density needs beta_y > 0");
    const auto& G = potential.G();
    const double gmin = *std::min_element(G.begin(), G.end());
    const double c = 2.0 / (by * by);
    std::vector<double> q(G.size());
    for (std::size_t k = 0; k < G.size(); ++k) q[k] = std::exp(-c * (G[k] - gmin));
    Density1D d(potential.y(), std::move(q));
    d.normalize();
    return d;
}

/// Backward Euler for q_t = d/dy ( g q + (beta_y^2 / 2) q_y ) with no-flux ends.
///
/// Node k owns the control volume of its trapezoid weight. The flux through
/// the face between k and k+1 is the exponentially fitted
///   J = (D / h) [ B(dU) q_k - B(-dU) q_{k+1} ],   U = 2 G / beta_y^2,
/// which vanishes exactly on exp(-U), so the Gibbs density is the discrete
/// steady state and the system matrix is an M-matrix for every dt.
class FokkerPlanck1D {
public:
    FokkerPlanck1D(const Potential1D& potential, double dt) : y_(potential.y()), dt_(dt) {
        const double by = potential.beta_y();
        if (!(by > 0.0)) throw numerical_error("DegenerateNoise", "Fokker-Planck stepper needs beta_y > 0");
        if (!(dt > 0.0)) throw precondition_error("FokkerPlanck1D: dt must be > 0");
        const std::size_t n = y_.size();
        const double D = 0.5 * by * by;
        const double c = 2.0 / (by * by);
        const auto w = trapezoid_weights(y_);
        const auto& G = potential.G();
        right_.assign(n, 0.0);
        left_.assign(n, 0.0);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double du = c * (G[k + 1] - G[k]);
            const double dh = D / (y_[k + 1] - y_[k]);
            right_[k] = dh * bernoulli(du);       // leaves k through its right face
            left_[k + 1] = dh * bernoulli(-du);  // leaves k+1 through its left face
        }
        lower_.assign(n, 0.0);
        diag_.assign(n, 0.0);
        upper_.assign(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            diag_[k] = w[k] / dt + right_[k] + left_[k];
            if (k > 0) lower_[k] = -right_[k - 1];
            if (k + 1 < n) upper_[k] = -left_[k + 1];
        }
        weights_ = w;
        rhs_.resize(n);
    }

    double dt() const { return dt_; }

    /// One implicit step in place.
    void step(std::vector<double>& q) {
        for (std::size_t k = 0; k < q.size(); ++k) rhs_[k] = weights_[k] / dt_ * q[k];
        solver_.solve(lower_, diag_, upper_, rhs_, q);
    }

private:
    std::vector<double> y_;
    double dt_;
    std::vector<double> right_, left_, lower_, diag_, upper_, weights_, rhs_;
    TridiagonalSolver solver_;
};

/// Number of steps used to reach t_end: dt is shrunk, never stretched, so
/// the last step lands exactly on t_end.
inline std::size_t step_count(double dt, double t_end) {
    if (!(dt > 0.0)) throw precondition_error("dt must be > 0");
    if (!(t_end >= 0.0)) throw precondition_error("t_end must be >= 0");
    return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

/// Observer called after every step with (step index, time, state).
using Observer1D = std::function<void(std::size_t, double, const Density1D&)>;

inline Density1D evolve_1d(const Density1D& q0, const Potential1D& potential, double dt, double t_end,
                           const Observer1D& observer = {}) {
    if (q0.y.size() != potential.size()) throw precondition_error("evolve_1d: density and potential grids differ");
    const std::size_t steps = step_count(dt, t_end);
    Density1D q = q0;
    if (steps == 0) return q;
    FokkerPlanck1D stepper(potential, t_end / static_cast<double>(steps));
    for (std::size_t s = 1; s <= steps; ++s) {
        stepper.step(q.q);
        if (observer) observer(s, t_end * static_cast<double>(s) / static_cast<double>(steps), q);
    }
    return q;
}

/// Cell-averaged density on an n x n grid over [0, nu_max]^2, stored row-major
/// with the nu1 index outermost: p[i * n + j] is the cell centred at
/// ((i + 1/2) h, (j + 1/2) h).
struct Density2D {
    std::size_t n = 0;
    double nu_max = 0.0;
    std::vector<double> p;

    Density2D() = default;
    Density2D(std::size_t cells, double extent) : n(cells), nu_max(extent), p(cells * cells, 0.0) {
        if (cells < 2) throw precondition_error("Density2D needs at least 2 cells per side");
    }

    double h() const { return nu_max / static_cast<double>(n); }
    double centre(std::size_t i) const { return (static_cast<double>(i) + 0.5) * h(); }
    double& at(std::size_t i, std::size_t j) { return p[i * n + j]; }
    double at(std::size_t i, std::size_t j) const { return p[i * n + j]; }

    double mass() const {
        double m = 0.0;
        for (double v : p) m += v;
        return m * h() * h();
    }

    void normalize() {
        const double m = mass();
        if (!(m > 0.0) || !std::isfinite(m)) throw numerical_error("ZeroMass", "density has no mass to normalize");
        for (auto& v : p) v /= m;
    }

    double min_value() const { return *std::min_element(p.begin(), p.end()); }
};

inline Density2D gaussian_2d(std::size_t n, double nu_max, Vec2 centre, double sd) {
    Density2D d(n, nu_max);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double a = (d.centre(i) - centre.x) / sd;
            const double b = (d.centre(j) - centre.y) / sd;
            d.at(i, j) = std::exp(-0.5 * (a * a + b * b));
        }
    d.normalize();
    return d;
}

/// Dimension-split implicit stepper for
///   p_t + div( F p - (beta^2 / 2) grad p ) = 0
/// with no-flux on all four edges. Each sub-step solves one tridiagonal
/// system per grid line with the Scharfetter-Gummel face flux
///   J = (D / h) [ B(-Pe) p_L - B(Pe) p_R ],   Pe = F_face h / D.
/// Sub-steps alternate their order (x then y, y then x) between steps.
class FokkerPlanck2D {
public:
    /// `drift_field` supplies F at face midpoints.
    FokkerPlanck2D(std::size_t n, double nu_max, double beta, double dt, const std::function<Vec2(Vec2)>& drift_field)
        : n_(n), h_(nu_max / static_cast<double>(n)), dt_(dt) {
        if (n < 2) throw precondition_error("FokkerPlanck2D needs at least 2 cells per side");
        if (!(beta > 0.0)) throw numerical_error("DegenerateNoise", "2D Fokker-Planck stepper needs beta > 0");
        if (!(dt > 0.0)) throw precondition_error("FokkerPlanck2D: dt must be > 0");
        const double D = 0.5 * beta * beta;
        // face flux D/h [..] divided by the cell width h
        const double dh = D / (h_ * h_);
        // face k of a line sits between cells k and k+1
        const std::size_t faces = n - 1;
        for (int dir = 0; dir < 2; ++dir) {
            auto& out = dir == 0 ? x_ : y_;
            out.from_left.assign(n * faces, 0.0);
            out.from_right.assign(n * faces, 0.0);
            for (std::size_t line = 0; line < n; ++line)
                for (std::size_t k = 0; k < faces; ++k) {
                    const double along = static_cast<double>(k + 1) * h_;
                    const double across = (static_cast<double>(line) + 0.5) * h_;
                    const Vec2 pos = dir == 0 ? Vec2{along, across} : Vec2{across, along};
                    const double F = drift_field(pos)[dir];
                    const double pe = F * h_ / D;
                    max_peclet_ = std::max(max_peclet_, std::abs(pe));
                    out.from_left[line * faces + k] = dh * bernoulli(-pe);
                    out.from_right[line * faces + k] = dh * bernoulli(pe);
                }
        }
    }

    /// Drift of the rate model.
    FokkerPlanck2D(std::size_t n, const ModelParams& params, double dt)
        : FokkerPlanck2D(n, params.nu_max, params.beta, dt, [&params](Vec2 v) { return drift(v, params); }) {}

    double max_peclet() const { return max_peclet_; }
    std::size_t steps_taken() const { return steps_; }

    void step(Density2D& d) {
        if (d.n != n_) throw precondition_error("FokkerPlanck2D: density grid mismatch");
        if (steps_ % 2 == 0) {
            sweep(d, 0);
            sweep(d, 1);
        } else {
            sweep(d, 1);
            sweep(d, 0);
        }
        ++steps_;
    }

private:
    struct Coefficients {
        std::vector<double> from_left;   ///< flux weight on the left cell of each face
        std::vector<double> from_right;  ///< flux weight on the right cell
    };

    void sweep(Density2D& d, int dir) {
        const std::size_t n = n_;
        const std::size_t faces = n - 1;
        const Coefficients& c = dir == 0 ? x_ : y_;
        const double inv_dt = 1.0 / dt_;
        parallel_for(n, [&](std::size_t line) {
            thread_local TridiagonalSolver solver;
            thread_local std::vector<double> lower, diag, upper, rhs, out;
            lower.assign(n, 0.0);
            diag.assign(n, inv_dt);
            upper.assign(n, 0.0);
            rhs.resize(n);
            out.resize(n);
            const double* a = c.from_left.data() + line * faces;
            const double* b = c.from_right.data() + line * faces;
            for (std::size_t k = 0; k < faces; ++k) {
                diag[k] += a[k];
                diag[k + 1] += b[k];
                upper[k] = -b[k];
                lower[k + 1] = -a[k];
            }
            for (std::size_t k = 0; k < n; ++k) rhs[k] = inv_dt * cell(d, dir, line, k);
            solver.solve(lower, diag, upper, rhs, out);
            for (std::size_t k = 0; k < n; ++k) cell(d, dir, line, k) = out[k];
        });
    }

    static double& cell(Density2D& d, int dir, std::size_t line, std::size_t k) {
        return dir == 0 ? d.at(k, line) : d.at(line, k);
    }

    std::size_t n_;
    double h_;
    double dt_;
    Coefficients x_, y_;
    double max_peclet_ = 0.0;
    std::size_t steps_ = 0;
};

using Observer2D = std::function<void(std::size_t, double, const Density2D&)>;

struct Evolve2DResult {
    Density2D density;
    double max_peclet = 0.0;
    std::size_t steps = 0;
};

inline Evolve2DResult evolve_2d(const Density2D& p0, const ModelParams& params, double dt, double t_end,
                                const Observer2D& observer = {}) {
    if (p0.nu_max != params.nu_max) throw precondition_error("evolve_2d: density extent differs from nu_max");
    const std::size_t steps = step_count(dt, t_end);
    Evolve2DResult r{p0, 0.0, steps};
    const double dt_eff = steps > 0 ? t_end / static_cast<double>(steps) : dt;
    FokkerPlanck2D stepper(p0.n, params, dt_eff);
    r.max_peclet = stepper.max_peclet();
    for (std::size_t s = 1; s <= steps; ++s) {
        stepper.step(r.density);
        if (observer) observer(s, t_end * static_cast<double>(s) / static_cast<double>(steps), r.density);
    }
    return r;
}

struct Marginal {
    Density1D density;              ///< not renormalized
    double out_of_range_mass = 0.0;
};

/// Projects a 2D density onto the slow coordinate y = (P^-1 (nu - S0))_2.
/// Each cell is split into subcells x subcells equal parts whose mass goes to
/// the 1D control volume containing their centre's y.
inline Marginal marginal_along_y(const Density2D& p, const LinearizationFrame& frame, const std::vector<double>& grid,
                                 int subcells = 1) {
    if (subcells < 1) throw precondition_error("marginal_along_y: subcells must be >= 1");
    if (grid.size() < 2) throw precondition_error("marginal_along_y: grid needs >= 2 nodes");
    const std::size_t m = grid.size();
    // control-volume edges: midpoints between nodes, clipped to the grid ends
    std::vector<double> edges(m + 1);
    edges[0] = grid.front();
    edges[m] = grid.back();
    for (std::size_t k = 1; k < m; ++k) edges[k] = 0.5 * (grid[k - 1] + grid[k]);

    Marginal out;
    std::vector<double> mass(m, 0.0);
    const double h = p.h();
    const auto s = static_cast<std::size_t>(subcells);
    const double hs = h / static_cast<double>(s);
    const double cell_area = hs * hs;
    const double a21 = frame.P_inv.a21;
    const double a22 = frame.P_inv.a22;
    for (std::size_t i = 0; i < p.n; ++i)
        for (std::size_t j = 0; j < p.n; ++j) {
            const double v = p.at(i, j);
            if (v == 0.0) continue;
            const double piece = v * cell_area;
            for (std::size_t si = 0; si < s; ++si)
                for (std::size_t sj = 0; sj < s; ++sj) {
                    const double nu1 = static_cast<double>(i) * h + (static_cast<double>(si) + 0.5) * hs;
                    const double nu2 = static_cast<double>(j) * h + (static_cast<double>(sj) + 0.5) * hs;
                    const double y = a21 * (nu1 - frame.S0.x) + a22 * (nu2 - frame.S0.y);
                    if (y < edges[0] || y > edges[m]) {
                        out.out_of_range_mass += piece;
                        continue;
                    }
                    const auto it = std::upper_bound(edges.begin(), edges.end(), y);
                    const std::size_t k = std::min<std::size_t>(m - 1, static_cast<std::size_t>(it - edges.begin()) - 1);
                    mass[k] += piece;
                }
        }
    std::vector<double> q(m);
    const auto w = trapezoid_weights(grid);
    for (std::size_t k = 0; k < m; ++k) q[k] = mass[k] / w[k];
    out.density = Density1D(grid, std::move(q));
    return out;
}

/// Trapezoidal approximation of the integral of psi(S0 + P (x*(y), y)) q(y).
inline double moment(const Density1D& q, const SlowManifoldCurve& curve, const LinearizationFrame& frame,
                     const std::function<double(Vec2)>& psi) {
    if (q.y.size() != curve.y.size()) throw precondition_error("moment: density and curve grids differ");
    double s = 0.0;
    for (std::size_t k = 0; k < q.y.size(); ++k)
        s += q.weights[k] * q.q[k] * psi(frame.to_rates({curve.x_star[k], curve.y[k]}));
    return s;
}

}  // namespace sfdm
