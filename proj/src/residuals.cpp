#include "sbpinn/residuals.hpp"

#include <algorithm>
#include <stdexcept>

namespace sbpinn {

double LossBreakdown::max_term() const {
    return std::max({L_psi, L_rho, L_pi, L_rho0, L_rhoT, L_wall});
}

double hjb_residual(const FieldJet& j, const LandscapePartials& lp) {
    const double pi = j.pi.value;
    return j.psi.d_dt - 0.5 * pi * pi + lp.D1 * j.psi.d_dx + lp.D2 * j.psi.d_dxx;
}

double fpk_residual(const FieldJet& j, const LandscapePartials& lp) {
    const double px = j.pi.d_dx;
    const double dD1 = lp.D1_x + lp.D1_u * px;
    const double dD2 = lp.D2_x + lp.D2_u * px;
    const double ddD2 = lp.D2_xx + 2.0 * lp.D2_xu * px + lp.D2_uu * px * px + lp.D2_u * j.pi.d_dxx;
    const auto& r = j.rho;
    return r.d_dt + dD1 * r.value + lp.D1 * r.d_dx - ddD2 * r.value - 2.0 * dD2 * r.d_dx -
           lp.D2 * r.d_dxx;
}

double policy_residual(const FieldJet& j, const LandscapePartials& lp) {
    return j.pi.value - j.psi.d_dx * lp.D1_u - j.psi.d_dxx * lp.D2_u;
}

double boundary_residual(double rho_net, double rho_target) {
    const double e = rho_net - rho_target;
    return e * e;
}

PdeResiduals pde_residuals(const FieldJet& jet, const Landscape& landscape, double x) {
    const LandscapePartials lp = landscape.partials(x, jet.pi.value);
    return {hjb_residual(jet, lp), fpk_residual(jet, lp), policy_residual(jet, lp)};
}

std::vector<PdeResiduals> pde_residuals(const NetworkParams& params,
                                        std::span<const SpaceTime> points,
                                        const Landscape& landscape) {
    const auto jets = forward_jets(params, points, JetOrder::Full);
    std::vector<PdeResiduals> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        out[i] = pde_residuals(jets[i], landscape, points[i].x);
    return out;
}

// The adjoints work in the shift coordinate s = x - b - c u: every landscape
// quantity is a function of s alone, ds/du = -c, and along u = pi(x, t)
// s_x = 1 - c pi_x, s_xx = -c pi_xx.

ResidualAdjoint hjb_adjoint(const FieldJet& j, const Landscape& landscape, double x) {
    const ShiftJet L = landscape.at(x, j.pi.value);
    const double c = landscape.control_gain();
    ResidualAdjoint out;
    out.value = j.psi.d_dt - 0.5 * j.pi.value * j.pi.value + L.D1 * j.psi.d_dx + L.D2 * j.psi.d_dxx;
    out.grad.psi.d_dt = 1.0;
    out.grad.psi.d_dx = L.D1;
    out.grad.psi.d_dxx = L.D2;
    out.grad.pi.value = -j.pi.value - c * (L.D1_s * j.psi.d_dx + L.D2_s * j.psi.d_dxx);
    return out;
}

ResidualAdjoint policy_adjoint(const FieldJet& j, const Landscape& landscape, double x) {
    const ShiftJet L = landscape.at(x, j.pi.value);
    const double c = landscape.control_gain();
    ResidualAdjoint out;
    // dD1/du = -c D1_s, dD2/du = -c D2_s
    out.value = j.pi.value + c * (L.D1_s * j.psi.d_dx + L.D2_s * j.psi.d_dxx);
    out.grad.psi.d_dx = c * L.D1_s;
    out.grad.psi.d_dxx = c * L.D2_s;
    out.grad.pi.value = 1.0 - c * c * (L.D1_ss * j.psi.d_dx + L.D2_ss * j.psi.d_dxx);
    return out;
}

ResidualAdjoint fpk_adjoint(const FieldJet& j, const Landscape& landscape, double x) {
    const ShiftJet L = landscape.at(x, j.pi.value);
    const double c = landscape.control_gain();
    const double sx = 1.0 - c * j.pi.d_dx;
    const double sxx = -c * j.pi.d_dxx;
    const auto& r = j.rho;

    ResidualAdjoint out;
    const double ddD2 = L.D2_ss * sx * sx + L.D2_s * sxx;
    out.value = r.d_dt + L.D1_s * sx * r.value + L.D1 * r.d_dx - ddD2 * r.value -
                2.0 * L.D2_s * sx * r.d_dx - L.D2 * r.d_dxx;

    out.grad.rho.d_dt = 1.0;
    out.grad.rho.value = L.D1_s * sx - ddD2;
    out.grad.rho.d_dx = L.D1 - 2.0 * L.D2_s * sx;
    out.grad.rho.d_dxx = -L.D2;

    const double d_sx = L.D1_s * r.value - 2.0 * L.D2_ss * sx * r.value - 2.0 * L.D2_s * r.d_dx;
    const double d_sxx = -L.D2_s * r.value;
    const double d_s = L.D1_ss * sx * r.value + L.D1_s * r.d_dx -
                       (L.D2_sss * sx * sx + L.D2_ss * sxx) * r.value -
                       2.0 * L.D2_ss * sx * r.d_dx - L.D2_s * r.d_dxx;
    out.grad.pi.d_dx = -c * d_sx;
    out.grad.pi.d_dxx = -c * d_sxx;
    out.grad.pi.value = -c * d_s;
    return out;
}

ResidualAdjoint flux_adjoint(const FieldJet& j, const Landscape& landscape, double x) {
    const ShiftJet L = landscape.at(x, j.pi.value);
    const double c = landscape.control_gain();
    const double sx = 1.0 - c * j.pi.d_dx;
    const auto& r = j.rho;
    ResidualAdjoint out;
    out.value = L.D1 * r.value - L.D2_s * sx * r.value - L.D2 * r.d_dx;
    out.grad.rho.value = L.D1 - L.D2_s * sx;
    out.grad.rho.d_dx = -L.D2;
    out.grad.pi.d_dx = c * L.D2_s * r.value;
    out.grad.pi.value = -c * (L.D1_s * r.value - L.D2_ss * sx * r.value - L.D2_s * r.d_dx);
    return out;
}

namespace {

void add_scaled(HeadJet& y, double a, const HeadJet& x) {
    y.value += a * x.value;
    y.d_dx += a * x.d_dx;
    y.d_dt += a * x.d_dt;
    y.d_dxx += a * x.d_dxx;
}

void add_scaled(FieldJet& y, double a, const FieldJet& x) {
    add_scaled(y.psi, a, x.psi);
    add_scaled(y.rho, a, x.rho);
    add_scaled(y.pi, a, x.pi);
}

void require_groups(const CollocationSet& colloc) {
    if (colloc.interior.empty() || colloc.initial.empty() || colloc.terminal.empty())
        throw std::invalid_argument("total_loss: every collocation group must be nonempty");
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

}  // namespace

LossEvaluation total_loss_gradient(const NetworkParams& params, const CollocationSet& colloc,
                                   const BridgeProblem& problem, const LossWeights& w,
                                   const GradientOptions& opts) {
    require_groups(colloc);
    const Landscape& landscape = problem.landscape;

    const std::size_t n_int = colloc.interior.size();
    std::vector<double> sq_hjb(n_int), sq_fpk(n_int), sq_pol(n_int);
    const SpaceTime* base = colloc.interior.data();
    const double inv_int = 1.0 / double(n_int);

    PointLoss interior = [&](std::span<const SpaceTime> pts, std::span<const FieldJet> jets,
                             std::span<double> loss, std::span<FieldJet> adj) {
        const std::size_t off = std::size_t(pts.data() - base);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double x = pts[i].x;
            const auto h = hjb_adjoint(jets[i], landscape, x);
            const auto f = fpk_adjoint(jets[i], landscape, x);
            const auto p = policy_adjoint(jets[i], landscape, x);
            sq_hjb[off + i] = h.value * h.value;
            sq_fpk[off + i] = f.value * f.value;
            sq_pol[off + i] = p.value * p.value;
            loss[i] = inv_int * (w.psi * sq_hjb[off + i] + w.rho * sq_fpk[off + i] +
                                 w.pi * sq_pol[off + i]);
            add_scaled(adj[i], 2.0 * w.psi * h.value * inv_int, h.grad);
            add_scaled(adj[i], 2.0 * w.rho * f.value * inv_int, f.grad);
            add_scaled(adj[i], 2.0 * w.pi * p.value * inv_int, p.grad);
        }
    };

    auto boundary = [](const std::vector<SpaceTime>& group, const TruncNormSpec& target,
                       double weight, std::vector<double>& sq) {
        const SpaceTime* gbase = group.data();
        const double inv = 1.0 / double(group.size());
        sq.assign(group.size(), 0.0);
        return PointLoss([&sq, gbase, inv, weight, target](std::span<const SpaceTime> pts,
                                                           std::span<const FieldJet> jets,
                                                           std::span<double> loss,
                                                           std::span<FieldJet> adj) {
            const std::size_t off = std::size_t(pts.data() - gbase);
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double e = jets[i].rho.value - truncnorm_pdf(pts[i].x, target);
                sq[off + i] = e * e;
                loss[i] = weight * inv * e * e;
                adj[i].rho.value = 2.0 * weight * inv * e;
            }
        });
    };

    std::vector<double> sq_wall(colloc.wall.size());
    const SpaceTime* wbase = colloc.wall.data();
    const double inv_wall = colloc.wall.empty() ? 0.0 : 1.0 / double(colloc.wall.size());
    PointLoss wall = [&](std::span<const SpaceTime> pts, std::span<const FieldJet> jets,
                         std::span<double> loss, std::span<FieldJet> adj) {
        const std::size_t off = std::size_t(pts.data() - wbase);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto f = flux_adjoint(jets[i], landscape, pts[i].x);
            const double n = jets[i].psi.d_dx;
            sq_wall[off + i] = f.value * f.value + n * n;
            loss[i] = w.wall * inv_wall * sq_wall[off + i];
            add_scaled(adj[i], 2.0 * w.wall * f.value * inv_wall, f.grad);
            adj[i].psi.d_dx += 2.0 * w.wall * n * inv_wall;
        }
    };

    std::vector<double> sq0, sqT;
    GradientOptions full = opts;
    full.order = JetOrder::Full;
    GradientOptions value_only = opts;
    value_only.order = JetOrder::Value;

    LossEvaluation out;
    auto g_int = loss_gradient(params, colloc.interior, interior, full);
    auto g_0 = loss_gradient(params, colloc.initial, boundary(colloc.initial, problem.rho0, w.rho0, sq0),
                             value_only);
    auto g_T = loss_gradient(params, colloc.terminal,
                             boundary(colloc.terminal, problem.rhoT, w.rhoT, sqT), value_only);

    out.objective = g_int.loss + g_0.loss + g_T.loss;
    out.grad = std::move(g_int.grad);
    out.grad += g_0.grad;
    out.grad += g_T.grad;
    if (!colloc.wall.empty()) {
        auto g_w = loss_gradient(params, colloc.wall, wall, full);
        out.objective += g_w.loss;
        out.grad += g_w.grad;
    }

    LossBreakdown& b = out.breakdown;
    b.L_psi = mean_of(sq_hjb);
    b.L_rho = mean_of(sq_fpk);
    b.L_pi = mean_of(sq_pol);
    b.L_rho0 = mean_of(sq0);
    b.L_rhoT = mean_of(sqT);
    if (!sq_wall.empty()) b.L_wall = mean_of(sq_wall);
    b.total = b.L_psi + b.L_rho + b.L_pi + b.L_rho0 + b.L_rhoT + b.L_wall;
    return out;
}

LossBreakdown total_loss(const NetworkParams& params, const CollocationSet& colloc,
                         const BridgeProblem& problem) {
    require_groups(colloc);
    const auto pde = pde_residuals(params, colloc.interior, problem.landscape);
    std::vector<double> h(pde.size()), f(pde.size()), p(pde.size());
    for (std::size_t i = 0; i < pde.size(); ++i) {
        h[i] = pde[i].hjb * pde[i].hjb;
        f[i] = pde[i].fpk * pde[i].fpk;
        p[i] = pde[i].policy * pde[i].policy;
    }
    auto boundary_terms = [&](const std::vector<SpaceTime>& group, const TruncNormSpec& target) {
        const auto jets = forward_jets(params, group, JetOrder::Value);
        std::vector<double> sq(group.size());
        for (std::size_t i = 0; i < group.size(); ++i)
            sq[i] = boundary_residual(jets[i].rho.value, truncnorm_pdf(group[i].x, target));
        return mean_of(sq);
    };
    LossBreakdown b;
    b.L_psi = mean_of(h);
    b.L_rho = mean_of(f);
    b.L_pi = mean_of(p);
    b.L_rho0 = boundary_terms(colloc.initial, problem.rho0);
    b.L_rhoT = boundary_terms(colloc.terminal, problem.rhoT);
    if (!colloc.wall.empty()) {
        const auto jets = forward_jets(params, colloc.wall, JetOrder::Full);
        std::vector<double> sq(jets.size());
        for (std::size_t i = 0; i < jets.size(); ++i) {
            const double f = flux_adjoint(jets[i], problem.landscape, colloc.wall[i].x).value;
            sq[i] = f * f + jets[i].psi.d_dx * jets[i].psi.d_dx;
        }
        b.L_wall = mean_of(sq);
    }
    b.total = b.L_psi + b.L_rho + b.L_pi + b.L_rho0 + b.L_rhoT + b.L_wall;
    return b;
}

}  // namespace sbpinn
