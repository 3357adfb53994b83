#pragma once

#include "strongsde/field.hpp"

#include <cstdint>
#include <random>

namespace strongsde {

/// Independent stream for path `index` of a batch seeded with `seed`.
std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t index);

struct WienerPath {
    int d1 = 1;
    double dt = 1e-3;
    double t0 = 1.0;
    Mat increments;  // d1 x n_steps, entries ~ N(0, dt)
    std::uint64_t seed = 0;
    std::uint64_t index = 0;

    int n_steps() const { return static_cast<int>(increments.cols()); }
    /// w at grid time k dt.
    Vec w(int k) const;
    Vec terminal() const { return increments.rowwise().sum(); }
    /// Path on the grid with step factor * dt (increments summed).
    WienerPath coarsened(int factor) const;
};

WienerPath sample_wiener(int d1, double t0, double dt, std::uint64_t seed, std::uint64_t index = 0);

int steps_for(double t0, double dt);

}  // namespace strongsde
