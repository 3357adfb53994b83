#include "strongsde/wiener.hpp"

#include <cmath>

namespace strongsde {

std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
    return std::mt19937_64(seq);
}

int steps_for(double t0, double dt) {
    if (!(dt > 0) || !(t0 > 0)) throw InvalidInput("need t0 > 0 and dt > 0");
    const double n = t0 / dt;
    const long k = std::lround(n);
    if (k < 1 || std::abs(n - k) > 1e-6 * std::max(1.0, n)) throw InvalidInput("dt must divide t0");
    return static_cast<int>(k);
}

WienerPath sample_wiener(int d1, double t0, double dt, std::uint64_t seed, std::uint64_t index) {
    if (d1 < 1) throw InvalidInput("sample_wiener: d1 must be >= 1");
    WienerPath p;
    p.d1 = d1;
    p.dt = dt;
    p.t0 = t0;
    p.seed = seed;
    p.index = index;
    const int n = steps_for(t0, dt);
    auto gen = path_stream(seed, index);
    std::normal_distribution<double> nd(0.0, std::sqrt(dt));
    p.increments.resize(d1, n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < d1; ++i) p.increments(i, k) = nd(gen);
    return p;
}

Vec WienerPath::w(int k) const {
    if (k <= 0) return Vec::Zero(d1);
    return increments.leftCols(k).rowwise().sum();
}

WienerPath WienerPath::coarsened(int factor) const {
    if (factor < 1 || n_steps() % factor != 0) throw InvalidInput("coarsening factor must divide the step count");
    WienerPath c = *this;
    c.dt = dt * factor;
    c.increments.resize(d1, n_steps() / factor);
    for (int k = 0; k < c.n_steps(); ++k) c.increments.col(k) = increments.middleCols(k * factor, factor).rowwise().sum();
    return c;
}

}  // namespace strongsde
