#pragma once

#include "strongsde/field.hpp"

#include <limits>
#include <utility>
#include <vector>

namespace strongsde {

/// Nodes per axis of the product midpoint rule on the spatial mollifier
/// support; time uses Gauss panels split at the known jumps.
struct MollifierRes {
    int m_space = 10;
};

/// Standard bump exp(-1/(1-|z|^2)) on the unit ball (not normalized).
double bump(double r2);

/// Discrete kernel: nodes z_j in the unit ball of R^dim and weights summing to 1.
struct KernelRule {
    std::vector<Vec> nodes;
    std::vector<double> weights;
};
KernelRule bump_rule(int dim, int m);

/// sigma^(n) = sigma * eta_n in space; b^(n) = b * zeta_n in space-time;
/// every part of the decomposition is mollified separately.
CoefficientField mollify(const CoefficientField& field, int n, const MollifierRes& res = {});

struct BandCheck {
    bool ok = true;
    double min_eig = std::numeric_limits<double>::infinity();
    double max_eig = 0.0;
    double worst_t = 0;
    Vec worst_x;
};

using Sample = std::pair<double, Vec>;

BandCheck band_check(const CoefficientField& field, const std::vector<Sample>& samples, double lower,
                     double upper);

struct Truncation {
    CoefficientField field;
    BandCheck band;  // against [delta/4, 4/delta]
};

/// sigma^(n)_m = sigma^(n) on {t : dsigma_bar(t) <= m}, kappa elsewhere.
/// Pass m = +inf to keep every time.
Truncation truncate_sigma(const CoefficientField& field, int n, double m, const Mat& kappa,
                          const std::vector<Sample>& samples, const MollifierRes& res = {});

}  // namespace strongsde
