#pragma once

#include "sbpinn/diffnet.hpp"

#include <cmath>
#include <random>

namespace sbpinn::testing {

inline double rel_err(double analytic, double reference) {
    return std::abs(analytic - reference) / (std::abs(reference) + 1e-9);
}

inline NetworkParams random_network(int layers, int width, std::uint64_t seed, double spread = 0.5) {
    NetworkSpec spec;
    spec.hidden_layers = layers;
    spec.width = width;
    spec.seed = seed;
    NetworkParams p = init_network(spec);
    std::mt19937_64 rng(seed + 17);
    std::normal_distribution<double> nd(0.0, spread);
    for (Eigen::Index i = 0; i < p.theta.size(); ++i) p.theta[i] += nd(rng);
    return p;
}

}  // namespace sbpinn::testing
