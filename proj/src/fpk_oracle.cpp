#include "sbpinn/fpk_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sbpinn {

void Grid1D::validate() const {
    if (nx < 16) throw std::invalid_argument("fpk grid: nx must be >= 16");
    if (!(x_hi > x_lo)) throw std::invalid_argument("fpk grid: x_hi must exceed x_lo");
    if (!(dt_pde > 0.0)) throw std::invalid_argument("fpk grid: dt_pde must be positive");
    if (n_steps < 0) throw std::invalid_argument("fpk grid: n_steps must be >= 0");
    if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("fpk grid: safety in (0, 1]");
}

std::vector<double> Grid1D::nodes() const {
    std::vector<double> x(std::size_t(nx) + 1);
    for (int i = 0; i <= nx; ++i) x[std::size_t(i)] = x_lo + dx() * i;
    return x;
}

double Grid1D::stable_dt(double max_diffusion) const {
    return safety * dx() * dx() / (2.0 * max_diffusion);
}

Grid1D Grid1D::for_horizon(int nx, double x_lo, double x_hi, double horizon, double max_diffusion,
                           double safety) {
    Grid1D g;
    g.nx = nx;
    g.x_lo = x_lo;
    g.x_hi = x_hi;
    g.safety = safety;
    const double dt_max = g.stable_dt(max_diffusion);
    g.n_steps = std::max(1, static_cast<int>(std::ceil(horizon / dt_max)));
    g.dt_pde = horizon / g.n_steps;
    return g;
}

double trapezoid_mass(std::span<const double> rho, double dx) {
    if (rho.empty()) return 0.0;
    double m = 0.0;
    for (double r : rho) m += r;
    m -= 0.5 * (rho.front() + rho.back());
    return m * dx;
}

DensityHistory propagate(const PolicyField& policy, std::span<const double> rho0_grid,
                         const Grid1D& grid, const Landscape& landscape,
                         const OracleOptions& options) {
    grid.validate();
    const std::size_t n = std::size_t(grid.nx) + 1;
    if (rho0_grid.size() != n) throw std::invalid_argument("fpk: rho0 does not match the grid");
    for (double r : rho0_grid)
        if (!(r >= 0.0)) throw std::invalid_argument("fpk: rho0 must be nonnegative");
    const double dx = grid.dx();
    const double mass0 = trapezoid_mass(rho0_grid, dx);
    if (std::abs(mass0 - 1.0) > 1e-6)
        throw std::invalid_argument("fpk: rho0 must be trapezoid-normalised to 1");

    DensityHistory hist;
    hist.x = grid.nodes();
    std::vector<double> rho(rho0_grid.begin(), rho0_grid.end());
    hist.times.push_back(0.0);
    hist.rho.push_back(rho);
    hist.min_value = *std::min_element(rho.begin(), rho.end());

    std::vector<SpaceTime> pts(n);
    std::vector<double> u(n), a(n), dflux(n), flux(n + 1, 0.0);
    const double dt = grid.dt_pde;
    const int policy_every = std::max(1, options.policy_every);

    for (int step = 0; step < grid.n_steps; ++step) {
        const double t = step * dt;
        if (step % policy_every == 0) {
            for (std::size_t i = 0; i < n; ++i) pts[i] = {hist.x[i], t};
            policy(pts, u);
            double max_d2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = landscape.drift(hist.x[i], u[i]);
                dflux[i] = landscape.diffusion(hist.x[i], u[i]);
                max_d2 = std::max(max_d2, dflux[i]);
            }
            if (max_d2 > 0.0 && dt > grid.stable_dt(max_d2)) {
                std::ostringstream msg;
                msg << "fpk: dt_pde=" << dt << " violates the explicit stability bound; use dt_pde <= "
                    << grid.stable_dt(max_d2);
                throw StabilityError(msg.str(), grid.stable_dt(max_d2));
            }
        }
        for (std::size_t i = 0; i + 1 < n; ++i)
            flux[i + 1] = 0.5 * (a[i] * rho[i] + a[i + 1] * rho[i + 1]) -
                          (dflux[i + 1] * rho[i + 1] - dflux[i] * rho[i]) / dx;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (i == 0 || i + 1 == n) ? 0.5 * dx : dx;
            rho[i] += dt * (flux[i] - flux[i + 1]) / w;
        }
        const double mn = *std::min_element(rho.begin(), rho.end());
        hist.min_value = std::min(hist.min_value, mn);
        if (mn < -options.negativity_tolerance) {
            std::ostringstream msg;
            msg << "fpk: density undershoot " << mn << " at t=" << (step + 1) * dt;
            throw OracleError(msg.str());
        }
        hist.max_mass_drift = std::max(hist.max_mass_drift, std::abs(trapezoid_mass(rho, dx) - mass0));
        const bool last = step + 1 == grid.n_steps;
        if (last || (options.store_every > 0 && (step + 1) % options.store_every == 0)) {
            hist.times.push_back((step + 1) * dt);
            hist.rho.push_back(rho);
        }
    }
    return hist;
}

OracleComparison compare(std::span<const double> grid_a, std::span<const double> rho_a,
                         std::span<const double> grid_b, std::span<const double> rho_b) {
    if (grid_a.size() != grid_b.size() || rho_a.size() != grid_a.size() ||
        rho_b.size() != grid_b.size() || grid_a.size() < 2)
        throw std::invalid_argument("compare: grid mismatch");
    for (std::size_t i = 0; i < grid_a.size(); ++i)
        if (std::abs(grid_a[i] - grid_b[i]) > 1e-12 * std::max(1.0, std::abs(grid_a[i])))
            throw std::invalid_argument("compare: grid mismatch");
    OracleComparison c;
    double cdf_gap = 0.0;
    for (std::size_t i = 0; i < grid_a.size(); ++i) {
        const double d = std::abs(rho_a[i] - rho_b[i]);
        c.Linf = std::max(c.Linf, d);
        if (i == 0) continue;
        const double h = grid_a[i] - grid_a[i - 1];
        c.L1 += 0.5 * h * (d + std::abs(rho_a[i - 1] - rho_b[i - 1]));
        const double prev_gap = std::abs(cdf_gap);
        cdf_gap += 0.5 * h * ((rho_a[i] + rho_a[i - 1]) - (rho_b[i] + rho_b[i - 1]));
        c.W1 += 0.5 * h * (prev_gap + std::abs(cdf_gap));
    }
    return c;
}

}  // namespace sbpinn
