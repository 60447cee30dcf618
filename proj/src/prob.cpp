#include "sbpinn/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sbpinn {

void TruncNormSpec::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("truncnorm: sigma must be positive");
    if (!(lo < hi)) throw std::invalid_argument("truncnorm: lo must be below hi");
}

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double TruncNormSpec::mass() const {
    return std_normal_cdf((hi - mu) / sigma) - std_normal_cdf((lo - mu) / sigma);
}

double TruncNormSpec::mean() const {
    const double a = (lo - mu) / sigma;
    const double b = (hi - mu) / sigma;
    return mu + sigma * (std_normal_pdf(a) - std_normal_pdf(b)) / mass();
}

double truncnorm_pdf(double x, const TruncNormSpec& spec) {
    spec.validate();
    if (x < spec.lo || x > spec.hi) return 0.0;
    return std_normal_pdf((x - spec.mu) / spec.sigma) / (spec.sigma * spec.mass());
}

double truncnorm_cdf(double x, const TruncNormSpec& spec) {
    spec.validate();
    if (x <= spec.lo) return 0.0;
    if (x >= spec.hi) return 1.0;
    const double lower = std_normal_cdf((spec.lo - spec.mu) / spec.sigma);
    const double v = (std_normal_cdf((x - spec.mu) / spec.sigma) - lower) / spec.mass();
    return std::clamp(v, 0.0, 1.0);
}

double TruncNormSpec::quantile(double q) const {
    validate();
    if (q <= 0.0) return lo;
    if (q >= 1.0) return hi;
    double a = lo;
    double b = hi;
    double x = std::clamp(mu, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double fx = truncnorm_cdf(x, *this) - q;
        if (fx > 0.0) b = x; else a = x;
        const double px = truncnorm_pdf(x, *this);
        double next = px > 0.0 ? x - fx / px : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - x) < 1e-15 * std::max(1.0, std::abs(x))) return next;
        x = next;
    }
    return x;
}

namespace {

// Integral of the truncated-normal CDF from lo to x; F = 0 below lo, 1 above hi.
double cdf_integral(double x, const TruncNormSpec& s) {
    if (x <= s.lo) return 0.0;
    const double xc = std::min(x, s.hi);
    const double alpha = (s.lo - s.mu) / s.sigma;
    const double z = (xc - s.mu) / s.sigma;
    auto psi = [](double v) { return v * std_normal_cdf(v) + std_normal_pdf(v); };
    const double inner =
        (s.sigma * (psi(z) - psi(alpha)) - std_normal_cdf(alpha) * (xc - s.lo)) / s.mass();
    return inner + std::max(0.0, x - s.hi);
}

// Integral over [a, b] of |c - F|, with F monotone.
double abs_gap_integral(double a, double b, double c, const TruncNormSpec& s) {
    if (!(b > a)) return 0.0;
    const double fa = truncnorm_cdf(a, s);
    const double fb = truncnorm_cdf(b, s);
    auto gap = [&](double l, double r) { return cdf_integral(r, s) - cdf_integral(l, s) - c * (r - l); };
    if (fa >= c) return gap(a, b);
    if (fb <= c) return -gap(a, b);
    const double xs = std::clamp(s.quantile(c), a, b);
    return -gap(a, xs) + gap(xs, b);
}

}  // namespace

Distances distance(std::span<const double> samples, const TruncNormSpec& spec) {
    spec.validate();
    if (samples.empty()) throw std::invalid_argument("distance: empty sample set");
    std::vector<double> xs(samples.begin(), samples.end());
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());

    Distances d;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double f = truncnorm_cdf(xs[k], spec);
        d.ks = std::max({d.ks, std::abs(double(k + 1) / n - f), std::abs(double(k) / n - f)});
    }
    const double left = std::min(spec.lo, xs.front());
    const double right = std::max(spec.hi, xs.back());
    d.wasserstein1 += abs_gap_integral(left, xs.front(), 0.0, spec);
    for (std::size_t k = 0; k + 1 < xs.size(); ++k)
        d.wasserstein1 += abs_gap_integral(xs[k], xs[k + 1], double(k + 1) / n, spec);
    d.wasserstein1 += abs_gap_integral(xs.back(), right, 1.0, spec);
    return d;
}

Distances distance_grid(std::span<const double> grid, std::span<const double> density,
                        const TruncNormSpec& spec) {
    spec.validate();
    if (grid.size() < 2 || grid.size() != density.size())
        throw std::invalid_argument("distance_grid: grid and density must match and have >= 2 nodes");
    const double mass = trapezoid(grid, density);
    if (!(mass > 0.0)) throw std::invalid_argument("distance_grid: density has no mass");
    Distances d;
    double cdf = 0.0;
    double prev_gap = std::abs(0.0 - truncnorm_cdf(grid[0], spec));
    d.ks = prev_gap;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double h = grid[i] - grid[i - 1];
        cdf += 0.5 * h * (density[i] + density[i - 1]) / mass;
        const double gap = std::abs(cdf - truncnorm_cdf(grid[i], spec));
        d.ks = std::max(d.ks, gap);
        d.wasserstein1 += 0.5 * h * (gap + prev_gap);
        prev_gap = gap;
    }
    return d;
}

MhResult mh_sample(const TruncNormSpec& spec, int n, const MhSettings& settings,
                   std::uint64_t seed) {
    spec.validate();
    auto logp = [&](double x) {
        const double z = (x - spec.mu) / spec.sigma;
        return -0.5 * z * z;
    };
    return mh_sample_logdensity(logp, spec.lo, spec.hi, std::clamp(spec.mu, spec.lo, spec.hi), n,
                                settings, seed);
}

double silverman_bandwidth(std::span<const double> samples) {
    if (samples.size() < 2) return 1.0;
    std::vector<double> xs(samples.begin(), samples.end());
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / (n - 1.0));
    auto q = [&](double p) {
        const double pos = p * (n - 1.0);
        const auto i = static_cast<std::size_t>(pos);
        const double w = pos - double(i);
        return i + 1 < xs.size() ? xs[i] * (1.0 - w) + xs[i + 1] * w : xs[i];
    };
    const double iqr = q(0.75) - q(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = 1.0;
    return 0.9 * spread * std::pow(n, -0.2);
}

std::vector<double> kde(std::span<const double> samples, double bandwidth,
                        std::span<const double> grid) {
    if (samples.empty()) throw std::invalid_argument("kde: need at least one sample");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
    std::vector<double> out(grid.size(), 0.0);
    const double norm = 1.0 / (double(samples.size()) * bandwidth);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double s : samples) acc += std_normal_pdf((grid[g] - s) / bandwidth);
        out[g] = acc * norm;
    }
    return out;
}

double ks_critical_value(int n, double alpha) {
    // Asymptotic Kolmogorov quantile: sqrt(-ln(alpha / 2) / 2) / sqrt(n).
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(double(n));
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return out;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

}  // namespace sbpinn
