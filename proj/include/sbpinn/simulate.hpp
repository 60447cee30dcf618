#pragma once

// Closed-loop Euler-Maruyama simulation of
//   dx = D1(x, u) dt + sqrt(2 D2(x, u)) dw,   u = pi(x, t),
// with the state confined to [x_lo, x_hi].

#include "sbpinn/diffnet.hpp"
#include "sbpinn/landscape.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbpinn {

enum class BoundaryMode { Reflect, Clamp };

std::string to_string(BoundaryMode m);
BoundaryMode boundary_mode_from_string(const std::string& s);

struct SimConfig {
    int n_paths = 1000;
    double dt = 0.1;
    double T = 200.0;
    BoundaryMode boundary = BoundaryMode::Reflect;
    std::uint64_t seed = 99;
    double x_lo = 0.0;
    double x_hi = 6.0;
    bool zero_noise = false;

    void validate() const;
    int n_steps() const;
};

struct PathEnsemble {
    std::vector<double> times;  // n_steps + 1 entries, times[0] = 0
    Eigen::MatrixXd states;     // n_paths x (n_steps + 1)
    Eigen::MatrixXd controls;   // control applied from each stored time

    Eigen::Index n_paths() const { return states.rows(); }
};

/// Controls for a batch of (x, t) points.
using PolicyField = std::function<void(std::span<const SpaceTime> points, std::span<double> u)>;

PolicyField network_policy(const NetworkParams& params);
PolicyField constant_policy(double u);

/// x + D1 dt + sqrt(2 D2) dw, before boundary handling.
double em_step(double x, double u, double dt, double noise_increment, const Landscape& landscape);

double apply_boundary(double x, BoundaryMode mode, double lo, double hi);

PathEnsemble simulate_ensemble(const PolicyField& policy, std::span<const double> init_samples,
                               const SimConfig& cfg, const Landscape& landscape);
PathEnsemble simulate_ensemble(const NetworkParams& model, std::span<const double> init_samples,
                               const SimConfig& cfg, const Landscape& landscape);

struct Snapshot {
    std::vector<double> samples;
    double time = 0.0;  // stored time actually used
    std::size_t column = 0;
};

/// Column at the stored time nearest t_query; ties go to the earlier time.
Snapshot snapshot(const PathEnsemble& ensemble, double t_query);

}  // namespace sbpinn
