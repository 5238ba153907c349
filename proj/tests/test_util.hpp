#pragma once

#include <random>

#include "smm/model.hpp"
#include "smm/sweep.hpp"

namespace smm::testing {

// Feasibility-scale parameters (rad/s internally).
inline SystemParameters feasibility_params() {
    SweepConfig cfg;
    return materialize(cfg).first;
}

// Synthetic O(1)-scale parameters, convenient for randomized equivalence
// checks where absolute tolerances are involved.
inline SystemParameters synthetic_params() {
    SystemParameters p;
    p.omega_NV = 10.0;
    p.omega_K = 1.0;
    p.omega_m = 0.02;
    p.lambda = 0.3;
    p.g0 = 0.0;
    p.Omega_p = 0.0;
    p.kappa_a = 0.5;
    p.kappa_b = 0.05;
    p.kappa_sigma = 0.2;
    p.F = 1.0;
    p.x_b = 1.0;
    return p;
}

inline std::mt19937_64 rng(std::uint64_t seed = 0x5eedULL) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

} // namespace smm::testing
