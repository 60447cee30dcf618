#pragma once

// Run configuration: plain text, one `key = value` per line, grouped under
// `[section]` headers. `#` starts a comment. Unknown keys are errors.
//
//   [landscape]  a b c d f k_B theta
//   [problem]    x_lo x_hi t_final rho0_mu rho0_sigma rhoT_mu rhoT_sigma
//   [network]    hidden_layers width activation rho_transform psi_scale rho_scale pi_scale
//   [train]      epochs n_interior n_initial n_terminal lr beta1 beta2 eps
//                rar rar_period rar_pool rar_add residual_target min_epochs
//                w_psi w_rho w_pi w_rho0 w_rhoT checkpoint_every threads
//   [sample]     n proposal_sigma burn_in thin
//   [simulate]   dt boundary
//   [kde]        grid_points bandwidth
//   [oracle]     nx safety policy_dt store_every
//   [verify]     w1_max ks_max oracle_l1_max mass_drift_max
//   [export]     nx nt
//   [run]        seed out deterministic
//
// Every default reproduces the reference run, so an empty file is valid.

#include "sbpinn/landscape.hpp"
#include "sbpinn/prob.hpp"
#include "sbpinn/residuals.hpp"
#include "sbpinn/simulate.hpp"
#include "sbpinn/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sbpinn {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0, std::string field = {})
        : std::runtime_error(what), line(line), field(std::move(field)) {}
    int line;
    std::string field;
};

struct SampleSettings {
    int n = 1000;
    MhSettings mh;
};

struct KdeSettings {
    int grid_points = 601;
    double bandwidth = 0.0;  // 0: Silverman's rule
};

struct OracleSettings {
    int nx = 1200;
    double safety = 0.9;
    double policy_dt = 0.1;  // policy refresh interval of the frozen field
    int store_every = 0;     // oracle steps between stored snapshots, 0: ends only
};

struct VerifyThresholds {
    double w1_max = 0.15;
    double ks_max = 0.10;
    double oracle_l1_max = 0.25;
    double mass_drift_max = 1e-3;
};

struct ExportGrid {
    int nx = 61;
    int nt = 201;
};

struct RunConfig {
    LandscapeParams landscape;
    TruncNormSpec rho0 = default_rho0();
    TruncNormSpec rhoT = default_rhoT();
    TrainConfig train;
    SampleSettings sample;
    SimConfig sim;
    KdeSettings kde;
    OracleSettings oracle;
    VerifyThresholds verify;
    ExportGrid export_grid;
    std::uint64_t seed = 1234;
    std::filesystem::path out_dir = "out";
    bool deterministic = false;

    /// Pushes the shared domain, horizon, seeds and densities into the
    /// per-module configs. Call after any field edit.
    void sync();
    void validate() const;
    BridgeProblem problem() const;
    /// Canonical `key = value` text of every setting.
    std::string dump() const;
    /// FNV-1a of dump(), as 16 hex digits.
    std::string hash() const;
};

RunConfig parse_config(std::string_view text, const std::string& source = "<string>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace sbpinn
