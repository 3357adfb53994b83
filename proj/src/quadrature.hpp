#pragma once
// Internal quadrature helpers shared by the norm and smoothing code.

#include "strongsde/field.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace strongsde::quad {

struct Directions {
    std::vector<Vec> dir;
    std::vector<double> w;  // sums to the surface area of S^{d-1}
};

inline Directions sphere_directions(int d, int n_ang) {
    Directions out;
    if (d == 1) {
        out.dir = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
        out.w = {1.0, 1.0};
    } else if (d == 2) {
        const int n = 2 * n_ang;
        for (int j = 0; j < n; ++j) {
            const double th = (j + 0.5) * 2 * M_PI / n;
            Vec v(2);
            v << std::cos(th), std::sin(th);
            out.dir.push_back(v);
            out.w.push_back(2 * M_PI / n);
        }
    } else if (d == 3) {
        // equal-area in cos(theta)
        const int nm = n_ang, nf = 2 * n_ang;
        for (int i = 0; i < nm; ++i) {
            const double mu = -1.0 + (i + 0.5) * 2.0 / nm;
            const double s = std::sqrt(1 - mu * mu);
            for (int j = 0; j < nf; ++j) {
                const double ph = (j + 0.5) * 2 * M_PI / nf;
                Vec v(3);
                v << s * std::cos(ph), s * std::sin(ph), mu;
                out.dir.push_back(v);
                out.w.push_back((2.0 / nm) * (2 * M_PI / nf));
            }
        }
    } else {
        throw InvalidInput("radial quadrature supports d <= 3");
    }
    return out;
}

struct Integral {
    double value = 0.0;
    bool divergent = false;
};

// int_a^b r^{-power} * rem(r) dr over [lo, hi] with lo = 0 allowed;
// exact in the power, midpoint in the remainder
inline double power_cell(double lo, double hi, double e) {
    // int_lo^hi r^{e-1} dr
    if (std::abs(e) < 1e-14) return std::log(hi / lo);
    return (std::pow(hi, e) - std::pow(lo, e)) / e;
}

/// int over B_rho(c) of g. If `sing` lies inside the ball the radial grid is
/// centred there and g is assumed to behave like |x - sing|^{-power}.
template <class G>
Integral integrate_ball(int d, const Vec& c, double rho, const Vec* sing, double power, int n_r,
                        const Directions& dirs, G&& g) {
    Integral out;
    Vec o = c;
    double pw = 0.0;
    if (sing && (*sing - c).norm() < rho * (1 - 1e-12)) {
        o = *sing;
        pw = power;
    }
    const Vec oc = o - c;
    const double oc2 = oc.squaredNorm();
    const double e = d - pw;
    Vec x(d);
    for (size_t k = 0; k < dirs.dir.size(); ++k) {
        const Vec& w = dirs.dir[k];
        double R = rho;
        if (oc2 > 0) {
            const double b = oc.dot(w);
            R = -b + std::sqrt(std::max(0.0, b * b - oc2 + rho * rho));
        }
        if (R <= 0) continue;
        double acc = 0.0;
        const double dr = R / n_r;
        for (int i = 0; i < n_r; ++i) {
            const double lo = i * dr, hi = (i + 1) * dr, mid = (i + 0.5) * dr;
            x = o + mid * w;
            double rem = g(x);
            if (rem == 0.0) continue;
            if (pw != 0.0) rem *= std::pow(mid, pw);
            if (i == 0 && e <= 0) {
                out.divergent = true;
                out.value = std::numeric_limits<double>::infinity();
                return out;
            }
            acc += power_cell(lo, hi, e) * rem;
        }
        out.value += dirs.w[k] * acc;
    }
    if (!std::isfinite(out.value)) out.divergent = true;
    return out;
}

/// int_a^b g(t) dt with g ~ (t - a)^{-power} near a.
template <class G>
Integral integrate_interval(double a, double b, int n, double power, G&& g) {
    Integral out;
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i) {
        const double lo = i * h, hi = (i + 1) * h, mid = (i + 0.5) * h;
        double rem = g(a + mid);
        if (rem == 0.0) continue;
        if (!std::isfinite(rem)) {
            out.divergent = true;
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }
        if (power == 0.0) {
            out.value += h * rem;
            continue;
        }
        rem *= std::pow(mid, power);
        const double e = 1.0 - power;
        if (i == 0 && e <= 0) {
            out.divergent = true;
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }
        out.value += power_cell(lo, hi, e) * rem;
    }
    return out;
}

// 8-point Gauss-Legendre on [-1, 1]
inline constexpr std::array<double, 8> kGLx = {-0.9602898564975363, -0.7966664774136267,
                                               -0.5255324099163290, -0.1834346424956498,
                                               0.1834346424956498,  0.5255324099163290,
                                               0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGLw = {0.1012285362903763, 0.2223810344533745,
                                               0.3137066458778873, 0.3626837833783620,
                                               0.3626837833783620, 0.3137066458778873,
                                               0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss_legendre(double a, double b, F&& f) {
    const double m = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += kGLw[i] * f(m + r * kGLx[i]);
    return s * r;
}

}  // namespace strongsde::quad
