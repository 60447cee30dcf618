#pragma once

// Explicit finite-volume propagator for the controlled Fokker-Planck
// equation  rho_t = -(D1 rho)_x + (D2 rho)_xx  under a frozen policy field.
//
// Nodes x_i = x_lo + i dx, i = 0..nx, each owning a control volume of width
// dx (dx / 2 at the two ends). Interface fluxes
//   J_{i+1/2} = (D1_i rho_i + D1_{i+1} rho_{i+1}) / 2 - ((D2 rho)_{i+1} - (D2 rho)_i) / dx
// vanish at both ends, so the trapezoid mass sum_i w_i rho_i is conserved.

#include "sbpinn/landscape.hpp"
#include "sbpinn/simulate.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace sbpinn {

struct Grid1D {
    int nx = 1200;  // cells; nx + 1 nodes
    double x_lo = 0.0;
    double x_hi = 6.0;
    double dt_pde = 2e-3;
    int n_steps = 100000;
    double safety = 0.9;

    void validate() const;
    double dx() const { return (x_hi - x_lo) / nx; }
    std::vector<double> nodes() const;
    /// Largest explicit step allowed for a given diffusion bound.
    double stable_dt(double max_diffusion) const;
    /// Grid whose (dt_pde, n_steps) cover horizon exactly within the stability bound.
    static Grid1D for_horizon(int nx, double x_lo, double x_hi, double horizon,
                              double max_diffusion, double safety = 0.9);
};

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StabilityError : public OracleError {
public:
    StabilityError(const std::string& what, double compliant_dt)
        : OracleError(what), compliant_dt(compliant_dt) {}
    double compliant_dt;
};

struct OracleOptions {
    int store_every = 0;     // 0: store only the initial and final states
    int policy_every = 1;    // re-evaluate the policy every this many steps
    double negativity_tolerance = 1e-10;
};

struct DensityHistory {
    std::vector<double> x;
    std::vector<double> times;
    std::vector<std::vector<double>> rho;
    double max_mass_drift = 0.0;  // max over all steps of |mass - initial mass|
    double min_value = 0.0;

    const std::vector<double>& final() const { return rho.back(); }
};

DensityHistory propagate(const PolicyField& policy, std::span<const double> rho0_grid,
                         const Grid1D& grid, const Landscape& landscape,
                         const OracleOptions& options = {});

struct OracleComparison {
    double L1 = 0.0;
    double Linf = 0.0;
    double W1 = 0.0;
};

/// Trapezoid L1, pointwise sup and CDF-gap W1 between two densities on one grid.
OracleComparison compare(std::span<const double> grid_a, std::span<const double> rho_a,
                         std::span<const double> grid_b, std::span<const double> rho_b);

/// Trapezoid weights of the node grid.
double trapezoid_mass(std::span<const double> rho, double dx);

}  // namespace sbpinn
