#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "sfdm/errors.hpp"

namespace sfdm {

/// Index k of the interval [xs[k], xs[k+1]] containing x (clamped to the ends).
inline std::size_t locate_interval(std::span<const double> xs, double x) {
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto k = static_cast<std::ptrdiff_t>(it - xs.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(xs.size()) - 2));
}

/// Cubic Hermite evaluation on [x0, x1] with values f and slopes d.
inline double hermite(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 +
           (t3 - t2) * h * d1;
}

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes: preserves
/// monotonicity of the data on every interval.
class MonotoneCubic {
public:
    MonotoneCubic() = default;

    MonotoneCubic(std::vector<double> xs, std::vector<double> fs) : x_(std::move(xs)), f_(std::move(fs)) {
        const std::size_t n = x_.size();
        if (n < 2 || f_.size() != n) throw precondition_error("MonotoneCubic needs >= 2 matching samples");
        d_.assign(n, 0.0);
        std::vector<double> secant(n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k) secant[k] = (f_[k + 1] - f_[k]) / (x_[k + 1] - x_[k]);
        if (n == 2) {
            d_[0] = d_[1] = secant[0];
            return;
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double s0 = secant[k - 1];
            const double s1 = secant[k];
            if (s0 * s1 <= 0.0) continue;
            // weighted harmonic mean (Fritsch-Butland form, non-uniform spacing)
            const double h0 = x_[k] - x_[k - 1];
            const double h1 = x_[k + 1] - x_[k];
            const double w1 = 2 * h1 + h0;
            const double w2 = h1 + 2 * h0;
            d_[k] = (w1 + w2) / (w1 / s0 + w2 / s1);
        }
        d_[0] = end_slope(x_[1] - x_[0], x_[2] - x_[1], secant[0], secant[1]);
        d_[n - 1] = end_slope(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3], secant[n - 2], secant[n - 3]);
    }

    double operator()(double x) const {
        const std::size_t k = locate_interval(x_, x);
        return hermite(x_[k], x_[k + 1], f_[k], f_[k + 1], d_[k], d_[k + 1], x);
    }

    const std::vector<double>& knots() const { return x_; }

private:
    static double end_slope(double h0, double h1, double s0, double s1) {
        double d = ((2 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0) return 0.0;
        if (s0 * s1 <= 0.0 && std::abs(d) > 3 * std::abs(s0)) d = 3 * s0;
        return d;
    }

    std::vector<double> x_, f_, d_;
};

}  // namespace sfdm
