#pragma once

// Endpoint densities, a Metropolis-Hastings sampler for them, Gaussian KDE
// and the distance metrics used to compare sample ensembles with targets.

#include <cstdint>
#include <span>
#include <vector>

namespace sbpinn {

struct TruncNormSpec {
    double mu = 0.0;
    double sigma = 1.0;
    double lo = 0.0;
    double hi = 6.0;

    void validate() const;
    double mass() const;  // Phi(beta) - Phi(alpha)
    double mean() const;
    double quantile(double q) const;
};

inline TruncNormSpec default_rho0() { return {0.0, 0.2, 0.0, 6.0}; }
inline TruncNormSpec default_rhoT() { return {5.0, 0.1, 0.0, 6.0}; }

double std_normal_pdf(double z);
double std_normal_cdf(double z);

double truncnorm_pdf(double x, const TruncNormSpec& spec);
double truncnorm_cdf(double x, const TruncNormSpec& spec);

struct MhSettings {
    double proposal_sigma = 0.1;  // 0.1 * (hi - lo) / 6 on the default support
    int burn_in = 1000;
    int thin = 10;
};

struct MhResult {
    std::vector<double> samples;
    double acceptance_rate = 0.0;
    long proposed = 0;
    long in_support = 0;
    long accepted = 0;
};

/// Random-walk Metropolis-Hastings targeting the truncated normal. Proposals
/// outside [lo, hi] have zero target density and are rejected.
MhResult mh_sample(const TruncNormSpec& spec, int n, const MhSettings& settings,
                   std::uint64_t seed);

/// Same chain against an arbitrary unnormalised log-density on [lo, hi].
template <class LogDensity>
MhResult mh_sample_logdensity(LogDensity&& log_density, double lo, double hi, double start,
                              int n, const MhSettings& settings, std::uint64_t seed);

double silverman_bandwidth(std::span<const double> samples);

/// Gaussian-kernel density averaged over samples, evaluated on grid.
std::vector<double> kde(std::span<const double> samples, double bandwidth,
                        std::span<const double> grid);

struct Distances {
    double wasserstein1 = 0.0;
    double ks = 0.0;
};

/// Samples vs truncated normal: W1 = integral |F_n - F|, KS = sup |F_n - F|.
Distances distance(std::span<const double> samples, const TruncNormSpec& spec);

/// Density tabulated on an increasing grid vs truncated normal; the grid
/// density is normalised by its trapezoid mass before comparison.
Distances distance_grid(std::span<const double> grid, std::span<const double> density,
                        const TruncNormSpec& spec);

double ks_critical_value(int n, double alpha);

std::vector<double> linspace(double lo, double hi, std::size_t n);
double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace sbpinn

#include "sbpinn/detail/mh_impl.hpp"
