#pragma once

#include "emdloss/matrix.hpp"
#include "emdloss/rng.hpp"
#include "emdloss/types.hpp"

namespace emdloss {

// Uniform draw from the probability simplex (normalized exponentials).
inline Vec random_simplex(Rng& rng, std::size_t c) {
    Vec p(c);
    double sum = 0.0;
    for (double& x : p) {
        x = -std::log(rng.uniform01_open0());
        sum += x;
    }
    for (double& x : p) x /= sum;
    return p;
}

// Simplex point bounded away from the faces; safe under log() and finite
// differencing.
inline Vec random_interior_simplex(Rng& rng, std::size_t c, double floor_mass = 0.1) {
    Vec p = random_simplex(rng, c);
    const double u = floor_mass / static_cast<double>(c);
    for (double& x : p) x = (1.0 - floor_mass) * x + u;
    return p;
}

// Random valid ground matrix: symmetric, zero diagonal, entries in (0, 1].
inline GroundMatrix random_ground_matrix(Rng& rng, std::size_t c) {
    GroundMatrix d;
    d.provenance = GroundMatrix::Provenance::external;
    d.entries = Mat(c, c, 0.0);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = i + 1; j < c; ++j) {
            const double v = rng.uniform(0.05, 1.0);
            d.entries(i, j) = v;
            d.entries(j, i) = v;
        }
    return d;
}

}  // namespace emdloss
