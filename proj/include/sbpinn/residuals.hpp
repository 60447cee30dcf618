#pragma once

// Pointwise residuals of the optimality system and the composite PINN loss.
//
//   HJB:    psi_t - pi^2/2 + D1 psi_x + D2 psi_xx = 0
//   FPK:    rho_t + d/dx(D1 rho) - d2/dx2(D2 rho) = 0
//   policy: pi - psi_x dD1/du - psi_xx dD2/du = 0, landscapes at u = pi
//   rho(., 0) = rho_0,  rho(., T) = rho_T
//
// Optional wall term at x_lo and x_hi, the reflecting-boundary conditions of
// the two equations: zero probability flux D1 rho - d/dx(D2 rho) and psi_x = 0.
//
// In the FPK term the landscapes are evaluated at u = pi(x, t), so their
// x-derivatives are total derivatives that chain through pi_x and pi_xx.

#include "sbpinn/collocation.hpp"
#include "sbpinn/diffnet.hpp"
#include "sbpinn/landscape.hpp"
#include "sbpinn/prob.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace sbpinn {

struct BridgeProblem {
    Landscape landscape;
    TruncNormSpec rho0 = default_rho0();
    TruncNormSpec rhoT = default_rhoT();
    double t_final = 200.0;
};

struct LossBreakdown {
    double L_psi = 0.0;
    double L_rho = 0.0;
    double L_pi = 0.0;
    double L_rho0 = 0.0;
    double L_rhoT = 0.0;
    double L_wall = 0.0;  // zero unless wall points are used
    double total = 0.0;

    double max_term() const;
};

/// Multipliers on the five terms in the optimised objective. The reported
/// LossBreakdown is always the unweighted one.
struct LossWeights {
    double psi = 1.0;
    double rho = 1.0;
    double pi = 1.0;
    double rho0 = 1.0;
    double rhoT = 1.0;
    double wall = 1.0;
};

double hjb_residual(const FieldJet& jet, const LandscapePartials& lp);
double fpk_residual(const FieldJet& jet, const LandscapePartials& lp);
double policy_residual(const FieldJet& jet, const LandscapePartials& lp);
double boundary_residual(double rho_net, double rho_target);

struct PdeResiduals {
    double hjb = 0.0;
    double fpk = 0.0;
    double policy = 0.0;
};

/// All three PDE residuals at one point, landscapes evaluated at u = jet.pi.value.
PdeResiduals pde_residuals(const FieldJet& jet, const Landscape& landscape, double x);
std::vector<PdeResiduals> pde_residuals(const NetworkParams& params,
                                        std::span<const SpaceTime> points,
                                        const Landscape& landscape);

/// Residual value and its gradient with respect to every jet entry
/// (the landscape is re-evaluated through pi, so pi.value gets chain terms).
struct ResidualAdjoint {
    double value = 0.0;
    FieldJet grad;
};
ResidualAdjoint hjb_adjoint(const FieldJet& jet, const Landscape& landscape, double x);
ResidualAdjoint fpk_adjoint(const FieldJet& jet, const Landscape& landscape, double x);
ResidualAdjoint policy_adjoint(const FieldJet& jet, const Landscape& landscape, double x);
/// Probability flux D1 rho - d/dx(D2 rho), total in x through pi.
ResidualAdjoint flux_adjoint(const FieldJet& jet, const Landscape& landscape, double x);

LossBreakdown total_loss(const NetworkParams& params, const CollocationSet& colloc,
                         const BridgeProblem& problem);

struct LossEvaluation {
    LossBreakdown breakdown;
    double objective = 0.0;  // weighted sum that grad differentiates
    Eigen::VectorXd grad;
};

LossEvaluation total_loss_gradient(const NetworkParams& params, const CollocationSet& colloc,
                                   const BridgeProblem& problem, const LossWeights& weights = {},
                                   const GradientOptions& opts = {});

}  // namespace sbpinn
