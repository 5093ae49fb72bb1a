#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfdm/errors.hpp"
#include "sfdm/linalg.hpp"
#include "sfdm/model.hpp"
#include "sfdm/parallel.hpp"

namespace sfdm {

enum class Stability { stable_node, stable_focus, saddle, unstable_node, unstable_focus, marginal };
enum class Role { spontaneous, decision_1, decision_2, unstable_branch };

inline std::string_view to_string(Stability s) {
    switch (s) {
        case Stability::stable_node: return "stable-node";
        case Stability::stable_focus: return "stable-focus";
        case Stability::saddle: return "saddle";
        case Stability::unstable_node: return "unstable-node";
        case Stability::unstable_focus: return "unstable-focus";
        case Stability::marginal: return "marginal";
    }
    return "unknown";
}

inline std::string_view to_string(Role r) {
    switch (r) {
        case Role::spontaneous: return "spontaneous";
        case Role::decision_1: return "decision-1";
        case Role::decision_2: return "decision-2";
        case Role::unstable_branch: return "unstable-branch";
    }
    return "unknown";
}

inline bool is_stable(Stability s) { return s == Stability::stable_node || s == Stability::stable_focus; }

struct EquilibriumOptions {
    double newton_tol = 1e-10;  ///< max-norm residual of an accepted root
    double dedup_tol = 1e-6;    ///< roots closer than this (max-norm) are merged
    double eig_tol = 1e-8;      ///< |Re mu| below this is reported as marginal
    int max_iterations = 200;
    int max_halvings = 50;
};

struct Classification {
    Stability stability;
    std::complex<double> mu1;  ///< eigenvalue with the smaller real part
    std::complex<double> mu2;
};

struct Equilibrium {
    Vec2 location;
    std::complex<double> mu1;
    std::complex<double> mu2;
    Stability stability;
    Role role = Role::unstable_branch;
};

struct EquilibriumSet {
    std::vector<Equilibrium> equilibria;  ///< sorted by nu1, then nu2
    std::size_t seeds_converged = 0;
    std::size_t seeds_total = 0;

    std::size_t count() const { return equilibria.size(); }
    const Equilibrium* find(Role role) const {
        for (const auto& e : equilibria)
            if (e.role == role) return &e;
        return nullptr;
    }
};

/// Stability label from the closed-form eigenvalues of J_F at `location`.
inline Classification classify(Vec2 location, const ModelParams& params, const EquilibriumOptions& opts = {}) {
    const double residual = norm_inf(drift(location, params));
    if (!(residual <= opts.newton_tol))
        throw precondition_error("classify: point is not an equilibrium (|F| = " + std::to_string(residual) + ")");
    const auto mu = eigenvalues(jacobian(location, params));
    Classification c{Stability::marginal, mu[0], mu[1]};
    const double re1 = mu[0].real();
    const double re2 = mu[1].real();
    if (std::abs(re1) <= opts.eig_tol || std::abs(re2) <= opts.eig_tol) return c;
    const bool complex_pair = mu[0].imag() != 0.0;
    if (re1 < 0 && re2 < 0)
        c.stability = complex_pair ? Stability::stable_focus : Stability::stable_node;
    else if (re1 > 0 && re2 > 0)
        c.stability = complex_pair ? Stability::unstable_focus : Stability::unstable_node;
    else
        c.stability = Stability::saddle;
    return c;
}

/// Damped Newton on F(nu) = 0 with step halving on the residual norm.
/// Returns the root when the max-norm residual reaches opts.newton_tol.
inline std::optional<Vec2> damped_newton(Vec2 seed, const ModelParams& params, const EquilibriumOptions& opts = {}) {
    Vec2 x = seed;
    Vec2 fx = drift(x, params);
    double r = norm(fx);
    for (int it = 0; it < opts.max_iterations; ++it) {
        const Mat2 jac = jacobian(x, params);
        const double det = jac.det();
        if (det == 0.0 || !std::isfinite(det)) break;
        const Vec2 step = -1.0 * (Mat2{jac.a22 / det, -jac.a12 / det, -jac.a21 / det, jac.a11 / det} * fx);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h, t *= 0.5) {
            const Vec2 trial = x + t * step;
            const Vec2 ft = drift(trial, params);
            const double rt = norm(ft);
            if (rt < r) {
                x = trial;
                fx = ft;
                r = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted || norm_inf(t * step) <= 1e-15 * (1.0 + norm_inf(x))) break;
    }
    if (norm_inf(fx) <= opts.newton_tol) return x;
    return std::nullopt;
}

namespace detail {

inline void assign_roles(std::vector<Equilibrium>& eqs, const ModelParams& params) {
    const double half = 0.5 * params.nu_c;
    std::optional<std::size_t> spont;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eqs.size(); ++i) {
        const Vec2 v = eqs[i].location;
        if (v.x >= half || v.y >= half) continue;
        const double d = std::abs(v.x - v.y);
        if (d < best) {
            best = d;
            spont = i;
        }
    }
    for (std::size_t i = 0; i < eqs.size(); ++i) {
        auto& e = eqs[i];
        if (spont && i == *spont)
            e.role = Role::spontaneous;
        else if (is_stable(e.stability))
            e.role = e.location.x > e.location.y ? Role::decision_1 : Role::decision_2;
        else
            e.role = Role::unstable_branch;
    }
}

inline void add_unique(std::vector<Vec2>& roots, Vec2 candidate, double tol) {
    for (const auto& r : roots)
        if (norm_inf(r - candidate) <= tol) return;
    roots.push_back(candidate);
}

}  // namespace detail

/// All fixed points of the noiseless system in [0, nu_max]^2.
///
/// Seeds: a grid_resolution x grid_resolution cell-centred lattice, plus a
/// ring of close seeds around every lattice root so that nearly coincident
/// roots next to a fold are not shadowed by a neighbour's basin.
inline EquilibriumSet find_equilibria(const ModelParams& params, int grid_resolution,
                                      const EquilibriumOptions& opts = {}) {
    if (grid_resolution < 10) throw precondition_error("find_equilibria: grid_resolution must be >= 10");
    params.validate();
    const auto n = static_cast<std::size_t>(grid_resolution);
    const double spacing = params.nu_max / static_cast<double>(n);
    auto inside = [&](Vec2 v) { return v.x >= 0.0 && v.y >= 0.0 && v.x <= params.nu_max && v.y <= params.nu_max; };

    std::vector<std::optional<Vec2>> lattice(n * n);
    parallel_for(n * n, [&](std::size_t k) {
        const Vec2 seed{(static_cast<double>(k / n) + 0.5) * spacing, (static_cast<double>(k % n) + 0.5) * spacing};
        auto root = damped_newton(seed, params, opts);
        if (root && inside(*root)) lattice[k] = root;
    });

    EquilibriumSet out;
    out.seeds_total = lattice.size();
    std::vector<Vec2> roots;
    for (const auto& r : lattice) {
        if (!r) continue;
        ++out.seeds_converged;
        detail::add_unique(roots, *r, opts.dedup_tol);
    }

    constexpr std::array<double, 4> radii{1e-3, 1e-2, 5e-2, 2e-1};
    constexpr int directions = 8;
    const std::vector<Vec2> primary = roots;
    const std::size_t ring = radii.size() * directions;
    std::vector<std::optional<Vec2>> local(primary.size() * ring);
    parallel_for(local.size(), [&](std::size_t k) {
        const Vec2 centre = primary[k / ring];
        const double radius = radii[(k % ring) / directions];
        const double angle = 2.0 * M_PI * static_cast<double>(k % directions) / directions + 0.3;
        auto root = damped_newton(centre + radius * Vec2{std::cos(angle), std::sin(angle)}, params, opts);
        if (root && inside(*root)) local[k] = root;
    });
    out.seeds_total += local.size();
    for (const auto& r : local) {
        if (!r) continue;
        ++out.seeds_converged;
        detail::add_unique(roots, *r, opts.dedup_tol);
    }

    if (roots.empty())
        throw numerical_error("NoConvergence", "find_equilibria: no seed converged (w_plus = " +
                                                   std::to_string(params.w_plus) + ")");

    std::sort(roots.begin(), roots.end(), [](Vec2 a, Vec2 b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
    for (const auto& r : roots) {
        const auto c = classify(r, params, opts);
        out.equilibria.push_back({r, c.mu1, c.mu2, c.stability, Role::unstable_branch});
    }
    detail::assign_roles(out.equilibria, params);
    return out;
}

struct ScanOptions {
    int grid_resolution = 40;
    double fold_tol = 1e-4;
    EquilibriumOptions equilibrium;
};

struct BifurcationSample {
    double w_plus;
    std::vector<Equilibrium> equilibria;
    std::vector<int> branch_ids;  ///< parallel to equilibria
};

/// A w_plus value where the equilibrium count changes.
struct Fold {
    double w_plus;
    std::size_t count_below;
    std::size_t count_above;
};

struct BifurcationDiagram {
    std::vector<BifurcationSample> samples;
    std::vector<Fold> folds;
    int branch_count = 0;
};

namespace detail {

/// Greedy global nearest-neighbour matching of `cur` onto `prev` branch ids.
inline std::vector<int> link_branches(const BifurcationSample& prev, const std::vector<Equilibrium>& cur,
                                      int& next_id) {
    struct Pair {
        double d;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < prev.equilibria.size(); ++i)
        for (std::size_t j = 0; j < cur.size(); ++j)
            pairs.push_back({norm(prev.equilibria[i].location - cur[j].location), i, j});
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d < b.d; });
    std::vector<int> ids(cur.size(), -1);
    std::vector<bool> used(prev.equilibria.size(), false);
    for (const auto& p : pairs) {
        if (used[p.i] || ids[p.j] != -1) continue;
        used[p.i] = true;
        ids[p.j] = prev.branch_ids[p.i];
    }
    for (auto& id : ids)
        if (id == -1) id = next_id++;
    return ids;
}

}  // namespace detail

/// Equilibria over an evenly spaced w_plus sweep with branch linking and
/// folds refined by bisection on the equilibrium count.
inline BifurcationDiagram bifurcation_scan(ModelParams params, double w_lo, double w_hi, int steps,
                                           const ScanOptions& opts = {}) {
    if (!(w_lo >= 0.5 && w_hi <= 3.5 && w_lo < w_hi))
        throw precondition_error("bifurcation_scan: w range must satisfy 0.5 <= w_lo < w_hi <= 3.5");
    if (steps < 2) throw precondition_error("bifurcation_scan: steps must be >= 2");

    auto solve_at = [&](double w) {
        ModelParams p = params;
        p.w_plus = w;
        try {
            return find_equilibria(p, opts.grid_resolution, opts.equilibrium);
        } catch (const Error& e) {
            if (e.name() == "NoConvergence")
                throw numerical_error("NoConvergence", "bifurcation_scan failed at w_plus = " + std::to_string(w));
            throw;
        }
    };

    BifurcationDiagram diagram;
    const auto n = static_cast<std::size_t>(steps);
    std::vector<EquilibriumSet> sets(n);
    std::vector<double> ws(n);
    for (std::size_t i = 0; i < n; ++i)
        ws[i] = w_lo + (w_hi - w_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    parallel_for(n, [&](std::size_t i) { sets[i] = solve_at(ws[i]); });

    int next_id = 0;
    for (std::size_t i = 0; i < n; ++i) {
        BifurcationSample s{ws[i], sets[i].equilibria, {}};
        if (i == 0) {
            for (std::size_t j = 0; j < s.equilibria.size(); ++j) s.branch_ids.push_back(next_id++);
        } else {
            s.branch_ids = detail::link_branches(diagram.samples.back(), s.equilibria, next_id);
        }
        diagram.samples.push_back(std::move(s));
    }
    diagram.branch_count = next_id;

    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t c_lo = sets[i].count();
        const std::size_t c_hi = sets[i + 1].count();
        if (c_lo == c_hi) continue;
        double lo = ws[i];
        double hi = ws[i + 1];
        while (hi - lo > opts.fold_tol) {
            const double mid = 0.5 * (lo + hi);
            (solve_at(mid).count() == c_lo ? lo : hi) = mid;
        }
        diagram.folds.push_back({0.5 * (lo + hi), c_lo, c_hi});
    }
    return diagram;
}

}  // namespace sfdm
