#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace sbpinn {

template <class LogDensity>
MhResult mh_sample_logdensity(LogDensity&& log_density, double lo, double hi, double start,
                              int n, const MhSettings& settings, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("mh_sample: n must be >= 1");
    if (!(settings.proposal_sigma > 0.0))
        throw std::invalid_argument("mh_sample: proposal_sigma must be positive");
    if (settings.burn_in < 0 || settings.thin < 1)
        throw std::invalid_argument("mh_sample: burn_in >= 0 and thin >= 1 required");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, settings.proposal_sigma);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto logp = [&](double x) {
        if (x < lo || x > hi) return -std::numeric_limits<double>::infinity();
        return static_cast<double>(log_density(x));
    };

    double x = start;
    double lx = logp(x);
    if (!std::isfinite(lx)) throw std::invalid_argument("mh_sample: start has zero density");

    MhResult out;
    out.samples.reserve(static_cast<std::size_t>(n));
    const long total = long(settings.burn_in) + long(n) * settings.thin;
    for (long it = 0; it < total; ++it) {
        const double y = x + step(rng);
        const double ly = logp(y);
        ++out.proposed;
        if (std::isfinite(ly)) ++out.in_support;
        // u is always drawn so the stream does not depend on the branch.
        const double u = unif(rng);
        if (std::isfinite(ly) && std::log(u) < ly - lx) {
            x = y;
            lx = ly;
            ++out.accepted;
        }
        if (it >= settings.burn_in && (it - settings.burn_in + 1) % settings.thin == 0)
            out.samples.push_back(x);
    }
    out.acceptance_rate = double(out.accepted) / double(out.proposed);
    return out;
}

}  // namespace sbpinn
