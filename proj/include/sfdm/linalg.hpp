#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "sfdm/errors.hpp"

namespace sfdm {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr double operator[](int i) const { return i == 0 ? x : y; }
    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double norm_inf(Vec2 v) { return std::max(std::abs(v.x), std::abs(v.y)); }

/// Row-major 2x2 matrix.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 from_columns(Vec2 c1, Vec2 c2) { return {c1.x, c2.x, c1.y, c2.y}; }
    static constexpr Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }

    constexpr Vec2 column(int j) const { return j == 0 ? Vec2{a11, a21} : Vec2{a12, a22}; }
    constexpr Vec2 row(int i) const { return i == 0 ? Vec2{a11, a12} : Vec2{a21, a22}; }
    constexpr double trace() const { return a11 + a22; }
    constexpr double det() const { return a11 * a22 - a12 * a21; }

    friend constexpr Vec2 operator*(const Mat2& m, Vec2 v) {
        return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y};
    }
    friend constexpr Mat2 operator*(const Mat2& m, const Mat2& n) {
        return {m.a11 * n.a11 + m.a12 * n.a21, m.a11 * n.a12 + m.a12 * n.a22,
                m.a21 * n.a11 + m.a22 * n.a21, m.a21 * n.a12 + m.a22 * n.a22};
    }
    friend constexpr Mat2 operator-(const Mat2& m, const Mat2& n) {
        return {m.a11 - n.a11, m.a12 - n.a12, m.a21 - n.a21, m.a22 - n.a22};
    }
};

inline double max_abs(const Mat2& m) {
    return std::max({std::abs(m.a11), std::abs(m.a12), std::abs(m.a21), std::abs(m.a22)});
}

inline Mat2 inverse(const Mat2& m) {
    const double d = m.det();
    if (d == 0.0 || !std::isfinite(d)) throw numerical_error("SingularMatrix", "2x2 matrix is singular");
    return {m.a22 / d, -m.a12 / d, -m.a21 / d, m.a11 / d};
}

/// Closed-form eigenvalues of a 2x2 matrix from trace and determinant.
inline std::array<std::complex<double>, 2> eigenvalues(const Mat2& m) {
    const double half_tr = 0.5 * m.trace();
    // (a11 - a22)^2/4 + a12 a21 avoids the cancellation in tr^2/4 - det
    const double half_diff = 0.5 * (m.a11 - m.a22);
    const double disc = half_diff * half_diff + m.a12 * m.a21;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return {std::complex<double>(half_tr - s, 0.0), std::complex<double>(half_tr + s, 0.0)};
    }
    const double s = std::sqrt(-disc);
    return {std::complex<double>(half_tr, -s), std::complex<double>(half_tr, s)};
}

/// Unit eigenvector for a real eigenvalue `mu`, taking whichever null-space
/// candidate row is better conditioned.
inline Vec2 eigenvector(const Mat2& m, double mu) {
    const Vec2 from_row1{m.a12, mu - m.a11};
    const Vec2 from_row2{mu - m.a22, m.a21};
    Vec2 v = norm(from_row1) >= norm(from_row2) ? from_row1 : from_row2;
    const double n = norm(v);
    if (n == 0.0) {
        // m is a multiple of the identity: every direction is an eigenvector
        return std::abs(m.a11 - mu) <= std::abs(m.a22 - mu) ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    }
    return (1.0 / n) * v;
}

/// Bernoulli function B(x) = x / (e^x - 1), evaluated without overflow or
/// cancellation. B(0) = 1, B(x) -> 0 for x -> +inf, B(x) ~ -x for x -> -inf.
inline double bernoulli(double x) {
    const double ax = std::abs(x);
    if (ax < 1e-6) return 1.0 - 0.5 * x + x * x / 12.0;
    if (x > 700.0) return x * std::exp(-x);
    return x / std::expm1(x);
}

/// log B(x), finite wherever B(x) > 0 is representable in log form.
inline double log_bernoulli(double x) {
    if (std::abs(x) < 1.0) return std::log(bernoulli(x));
    if (x > 0.0) return std::log(x) - x - std::log1p(-std::exp(-x));
    return std::log(-x) - std::log1p(-std::exp(x));
}

/// Thomas algorithm for a tridiagonal system. `lower[i]` multiplies x[i-1]
/// (lower[0] unused), `upper[i]` multiplies x[i+1] (upper[n-1] unused).
/// Stable without pivoting for the diagonally dominant M-matrices assembled
/// by the Fokker-Planck steppers.
class TridiagonalSolver {
public:
    void solve(std::span<const double> lower, std::span<const double> diag,
               std::span<const double> upper, std::span<const double> rhs, std::span<double> x) {
        const std::size_t n = diag.size();
        if (n == 0) return;
        c_prime_.resize(n);
        double denom = diag[0];
        if (denom == 0.0 || !std::isfinite(denom))
            throw numerical_error("LinearSolveFailure", "zero or non-finite pivot in tridiagonal solve");
        c_prime_[0] = upper[0] / denom;
        x[0] = rhs[0] / denom;
        for (std::size_t i = 1; i < n; ++i) {
            denom = diag[i] - lower[i] * c_prime_[i - 1];
            if (denom == 0.0 || !std::isfinite(denom))
                throw numerical_error("LinearSolveFailure", "zero or non-finite pivot in tridiagonal solve");
            c_prime_[i] = (i + 1 < n) ? upper[i] / denom : 0.0;
            x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
        }
        for (std::size_t i = n - 1; i > 0; --i) x[i - 1] -= c_prime_[i - 1] * x[i];
    }

private:
    std::vector<double> c_prime_;
};

}  // namespace sfdm
