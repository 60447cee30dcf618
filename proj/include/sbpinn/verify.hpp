#pragma once

// Closed-loop and oracle checks of a learned policy against the target
// terminal density.

#include "sbpinn/config.hpp"
#include "sbpinn/fpk_oracle.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sbpinn {

/// rho(x, t) for a batch of x at one time.
using DensitySlice = std::function<void(std::span<const double> x, double t, std::span<double> rho)>;

struct VerifyInputs {
    PolicyField policy;
    Landscape landscape;
    std::optional<DensitySlice> model_rho;  // learned density, if any
};

VerifyInputs network_inputs(const NetworkParams& params, const RunConfig& config);

struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool passed = false;
};

struct VerifyReport {
    double kde_w1_T = 0.0;
    double kde_ks_T = 0.0;
    double sample_w1_T = 0.0;
    double sample_ks_T = 0.0;
    double oracle_l1_T = 0.0;
    double oracle_l1_model = -1.0;  // negative when no model density is given
    double oracle_w1_T = 0.0;
    double oracle_linf_T = 0.0;
    double mass_drift = 0.0;
    double oracle_min = 0.0;
    double mh_acceptance = 0.0;
    double bandwidth = 0.0;
    double terminal_mean = 0.0;
    double terminal_sd = 0.0;
    std::vector<Check> checks;

    bool passed() const;
    std::string to_json() const;
};

struct Verification {
    VerifyReport report;
    std::vector<double> initial_samples;
    PathEnsemble ensemble;
    std::vector<double> kde_grid;
    std::vector<double> kde_terminal;
    DensityHistory oracle;
    std::vector<double> model_rho_T;
};

/// MH initial states, closed-loop ensemble, terminal KDE, and oracle run.
Verification verify_policy(const VerifyInputs& inputs, const RunConfig& config);

/// Fixed-step grid for the oracle covering the configured horizon.
Grid1D oracle_grid(const RunConfig& config, const Landscape& landscape);

/// Truncated normal tabulated on nodes and renormalised by trapezoid mass.
std::vector<double> density_on_grid(const TruncNormSpec& spec, std::span<const double> nodes);

}  // namespace sbpinn
