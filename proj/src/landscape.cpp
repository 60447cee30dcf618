#include "sbpinn/landscape.hpp"

#include <cmath>
#include <stdexcept>

namespace sbpinn {

void LandscapeParams::validate() const {
    if (!(d > 0.0) || !(f > 0.0))
        throw std::invalid_argument("landscape: diffusion constants d and f must be positive");
    if (!(k_B > 0.0) || !(theta > 0.0))
        throw std::invalid_argument("landscape: k_B and theta must be positive");
}

double shift(double x, double u, const LandscapeParams& p) { return x - p.b - p.c * u; }

double eval_free_energy(double x, double u, const LandscapeParams& p) {
    const double s = shift(x, u, p);
    return p.a * p.k_B * p.theta * s * s;
}

double eval_diffusion(double x, double u, const LandscapeParams& p) {
    const double s = shift(x, u, p);
    return p.d * std::exp(-s * s) + p.f;
}

double eval_drift(double x, double u, const LandscapeParams& p) {
    const double s = shift(x, u, p);
    return -2.0 * s * ((1.0 + p.a) * p.d * std::exp(-s * s) + p.a * p.f);
}

double eval_drift_from_free_energy(double x, double u, const LandscapeParams& p, double step) {
    const double dD2 =
        (eval_diffusion(x + step, u, p) - eval_diffusion(x - step, u, p)) / (2.0 * step);
    const double dF =
        (eval_free_energy(x + step, u, p) - eval_free_energy(x - step, u, p)) / (2.0 * step);
    return dD2 - eval_diffusion(x, u, p) / (p.k_B * p.theta) * dF;
}

ShiftJet eval_shift_jet(double x, double u, const LandscapeParams& p) {
    ShiftJet j;
    const double s = shift(x, u, p);
    const double s2 = s * s;
    const double e = std::exp(-s2);
    const double de = p.d * e;
    const double ade = (1.0 + p.a) * de;
    j.s = s;
    j.D2 = de + p.f;
    j.D2_s = -2.0 * s * de;
    j.D2_ss = de * (4.0 * s2 - 2.0);
    j.D2_sss = de * (12.0 * s - 8.0 * s * s2);
    j.D1 = -2.0 * s * (ade + p.a * p.f);
    j.D1_s = ade * (4.0 * s2 - 2.0) - 2.0 * p.a * p.f;
    j.D1_ss = ade * (12.0 * s - 8.0 * s * s2);
    return j;
}

LandscapePartials eval_partials(double x, double u, const LandscapeParams& p) {
    const ShiftJet j = eval_shift_jet(x, u, p);
    LandscapePartials lp;
    lp.D1 = j.D1;
    lp.D2 = j.D2;
    lp.D1_x = j.D1_s;
    lp.D1_u = -p.c * j.D1_s;
    lp.D2_x = j.D2_s;
    lp.D2_u = -p.c * j.D2_s;
    lp.D2_xx = j.D2_ss;
    lp.D2_xu = -p.c * j.D2_ss;
    lp.D2_uu = p.c * p.c * j.D2_ss;
    return lp;
}

Landscape::Landscape(const LandscapeParams& p) : params_(p) { params_.validate(); }

Landscape Landscape::constant(double drift, double diffusion) {
    if (!(diffusion >= 0.0)) throw std::invalid_argument("landscape stub: diffusion must be >= 0");
    Landscape l;
    l.stub_ = true;
    l.stub_drift_ = drift;
    l.stub_diffusion_ = diffusion;
    return l;
}

ShiftJet Landscape::at(double x, double u) const {
    if (!stub_) return eval_shift_jet(x, u, params_);
    ShiftJet j;
    j.D1 = stub_drift_;
    j.D2 = stub_diffusion_;
    return j;
}

LandscapePartials Landscape::partials(double x, double u) const {
    if (!stub_) return eval_partials(x, u, params_);
    LandscapePartials lp;
    lp.D1 = stub_drift_;
    lp.D2 = stub_diffusion_;
    return lp;
}

double Landscape::drift(double x, double u) const {
    return stub_ ? stub_drift_ : eval_drift(x, u, params_);
}

double Landscape::diffusion(double x, double u) const {
    return stub_ ? stub_diffusion_ : eval_diffusion(x, u, params_);
}

}  // namespace sbpinn
