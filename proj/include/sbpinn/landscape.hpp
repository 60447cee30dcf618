#pragma once

// Free-energy, diffusion and drift landscapes of the colloidal self-assembly
// order-parameter model.
//
// Units: the order parameter x is dimensionless on [0, 6], time is in
// seconds, F is in Joules and D2 in (order parameter)^2 / s. The control u is
// an electric-field voltage; it is unbounded here.
//
// Both landscapes depend on (x, u) only through s = x - b - c*u, so every
// u-partial is -c times the matching x-partial.

namespace sbpinn {

struct LandscapeParams {
    double a = 10.0;
    double b = 2.1;
    double c = 0.75;
    double d = 4.5e-3;
    double f = 0.5e-3;
    double k_B = 1.38066e-23;  // J/K
    double theta = 293.0;      // K

    // Throws std::invalid_argument when d, f, k_B or theta is not positive.
    void validate() const;
};

struct LandscapePartials {
    double D1 = 0.0;
    double D2 = 0.0;
    double D1_x = 0.0;
    double D1_u = 0.0;
    double D2_x = 0.0;
    double D2_u = 0.0;
    double D2_xx = 0.0;
    double D2_xu = 0.0;
    double D2_uu = 0.0;
};

/// Derivatives of both landscapes with respect to the shifted coordinate s.
/// The residual adjoints need one order more than LandscapePartials carries.
struct ShiftJet {
    double s = 0.0;
    double D1 = 0.0, D1_s = 0.0, D1_ss = 0.0;
    double D2 = 0.0, D2_s = 0.0, D2_ss = 0.0, D2_sss = 0.0;
};

double shift(double x, double u, const LandscapeParams& p);

double eval_free_energy(double x, double u, const LandscapeParams& p);
double eval_diffusion(double x, double u, const LandscapeParams& p);

/// Closed form of D1 = dD2/dx - D2/(k_B theta) dF/dx, i.e.
/// -2 s [(1 + a) d exp(-s^2) + a f]. The k_B theta factor cancels.
double eval_drift(double x, double u, const LandscapeParams& p);

/// Drift composed literally from F and D2 with central differences in x.
/// Reference route for eval_drift; not used by the solver.
double eval_drift_from_free_energy(double x, double u, const LandscapeParams& p,
                                   double step = 1e-6);

LandscapePartials eval_partials(double x, double u, const LandscapeParams& p);
ShiftJet eval_shift_jet(double x, double u, const LandscapeParams& p);

/// Landscape pair seen by the residuals, the simulator and the FPK oracle.
/// Either the colloidal model or a constant (D1, D2) stub used in tests.
class Landscape {
public:
    Landscape() : Landscape(LandscapeParams{}) {}
    explicit Landscape(const LandscapeParams& p);
    static Landscape constant(double drift, double diffusion);

    ShiftJet at(double x, double u) const;
    LandscapePartials partials(double x, double u) const;
    double drift(double x, double u) const;
    double diffusion(double x, double u) const;

    /// c in s = x - b - c u; ds/du = -c.
    double control_gain() const { return stub_ ? 0.0 : params_.c; }
    bool is_stub() const { return stub_; }
    const LandscapeParams& params() const { return params_; }

private:
    LandscapeParams params_;
    bool stub_ = false;
    double stub_drift_ = 0.0;
    double stub_diffusion_ = 0.0;
};

}  // namespace sbpinn
