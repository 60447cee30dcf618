#include "sbpinn/simulate.hpp"

#include <cmath>
#include <random>

namespace sbpinn {

std::string to_string(BoundaryMode m) { return m == BoundaryMode::Reflect ? "reflect" : "clamp"; }

BoundaryMode boundary_mode_from_string(const std::string& s) {
    if (s == "reflect") return BoundaryMode::Reflect;
    if (s == "clamp") return BoundaryMode::Clamp;
    throw std::invalid_argument("unknown boundary mode '" + s + "' (expected reflect|clamp)");
}

void SimConfig::validate() const {
    if (n_paths < 1) throw std::invalid_argument("simulate: n_paths must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("simulate: T must be positive");
    if (!(x_hi > x_lo)) throw std::invalid_argument("simulate: x_hi must exceed x_lo");
    const double steps = T / dt;
    if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps))
        throw std::invalid_argument("simulate: T/dt must be an integer");
}

int SimConfig::n_steps() const { return static_cast<int>(std::lround(T / dt)); }

PolicyField network_policy(const NetworkParams& params) {
    return [params](std::span<const SpaceTime> pts, std::span<double> u) {
        const auto jets = forward_jets(params, pts, JetOrder::Value);
        for (std::size_t i = 0; i < pts.size(); ++i) u[i] = jets[i].pi.value;
    };
}

PolicyField constant_policy(double value) {
    return [value](std::span<const SpaceTime>, std::span<double> u) {
        for (double& v : u) v = value;
    };
}

double em_step(double x, double u, double dt, double noise_increment, const Landscape& landscape) {
    const double D1 = landscape.drift(x, u);
    const double D2 = landscape.diffusion(x, u);
    return x + D1 * dt + std::sqrt(2.0 * D2) * noise_increment;
}

double apply_boundary(double x, BoundaryMode mode, double lo, double hi) {
    if (mode == BoundaryMode::Clamp) return std::min(std::max(x, lo), hi);
    // Fold back into [lo, hi]; loops only for steps longer than the domain.
    const double width = hi - lo;
    for (int i = 0; i < 64 && (x < lo || x > hi); ++i) {
        if (x < lo) x = 2.0 * lo - x;
        if (x > hi) x = 2.0 * hi - x;
    }
    if (x < lo || x > hi) x = lo + std::fmod(std::abs(x - lo), width);
    return x;
}

namespace {

// Per-path generator seeded from (master seed, path index) so paths do not
// depend on evaluation order.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
    std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ull * (path + 0x632be59bd9b4e019ull));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

PathEnsemble simulate_ensemble(const PolicyField& policy, std::span<const double> init_samples,
                               const SimConfig& cfg, const Landscape& landscape) {
    cfg.validate();
    if (init_samples.size() != std::size_t(cfg.n_paths))
        throw std::invalid_argument("simulate: need exactly n_paths initial samples");
    for (double x : init_samples)
        if (!(x >= cfg.x_lo && x <= cfg.x_hi))
            throw std::invalid_argument("simulate: initial sample outside the state domain");

    const int n_steps = cfg.n_steps();
    const Eigen::Index n = cfg.n_paths;
    PathEnsemble ens;
    ens.times.resize(std::size_t(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k) ens.times[std::size_t(k)] = double(k) * cfg.dt;
    ens.states.resize(n, n_steps + 1);
    ens.controls.resize(n, n_steps + 1);

    std::vector<std::mt19937_64> rngs;
    rngs.reserve(std::size_t(n));
    for (Eigen::Index i = 0; i < n; ++i) rngs.emplace_back(path_seed(cfg.seed, std::uint64_t(i)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sqdt = std::sqrt(cfg.dt);

    std::vector<SpaceTime> pts(static_cast<std::size_t>(n));
    std::vector<double> u(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ens.states(i, 0) = init_samples[std::size_t(i)];

    for (int k = 0; k <= n_steps; ++k) {
        const double t = ens.times[std::size_t(k)];
        for (Eigen::Index i = 0; i < n; ++i) pts[std::size_t(i)] = {ens.states(i, k), t};
        policy(pts, u);
        for (Eigen::Index i = 0; i < n; ++i) ens.controls(i, k) = u[std::size_t(i)];
        if (k == n_steps) break;
        for (Eigen::Index i = 0; i < n; ++i) {
            normal.reset();
            const double dw = cfg.zero_noise ? 0.0 : sqdt * normal(rngs[std::size_t(i)]);
            double x = em_step(ens.states(i, k), u[std::size_t(i)], cfg.dt, dw, landscape);
            if (!std::isfinite(x))
                throw std::runtime_error("simulate: non-finite state on path " + std::to_string(i) +
                                         " at step " + std::to_string(k + 1));
            ens.states(i, k + 1) = apply_boundary(x, cfg.boundary, cfg.x_lo, cfg.x_hi);
        }
    }
    return ens;
}

PathEnsemble simulate_ensemble(const NetworkParams& model, std::span<const double> init_samples,
                               const SimConfig& cfg, const Landscape& landscape) {
    return simulate_ensemble(network_policy(model), init_samples, cfg, landscape);
}

Snapshot snapshot(const PathEnsemble& ensemble, double t_query) {
    const auto& times = ensemble.times;
    if (times.empty()) throw std::invalid_argument("snapshot: empty ensemble");
    if (t_query < times.front() - 1e-12 || t_query > times.back() + 1e-12)
        throw std::invalid_argument("snapshot: t_query outside the simulated horizon");
    std::size_t best = 0;
    for (std::size_t k = 1; k < times.size(); ++k)
        if (std::abs(times[k] - t_query) < std::abs(times[best] - t_query)) best = k;
    Snapshot s;
    s.column = best;
    s.time = times[best];
    s.samples.resize(std::size_t(ensemble.states.rows()));
    for (Eigen::Index i = 0; i < ensemble.states.rows(); ++i)
        s.samples[std::size_t(i)] = ensemble.states(i, Eigen::Index(best));
    return s;
}

}  // namespace sbpinn
