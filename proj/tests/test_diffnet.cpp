#include "sbpinn/diffnet.hpp"
#include "sbpinn/residuals.hpp"
#include "support.hpp"

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

using namespace sbpinn;
using sbpinn::testing::random_network;
using sbpinn::testing::rel_err;

TEST_CASE("init is deterministic per seed") {
    NetworkSpec spec;
    const auto a = init_network(spec);
    const auto b = init_network(spec);
    CHECK((a.theta.array() == b.theta.array()).all());
    spec.seed = 99;
    const auto c = init_network(spec);
    CHECK((a.theta.array() != c.theta.array()).any());
}

TEST_CASE("parameter count of the reference architecture") {
    NetworkSpec spec;
    int manual = 0;
    const int sizes[] = {2, 70, 70, 70, 3};
    for (int k = 0; k + 1 < 5; ++k) manual += sizes[k] * sizes[k + 1] + sizes[k + 1];
    CHECK(manual == 10363);
    CHECK(spec.parameter_count() == 10363u);
    CHECK(init_network(spec).theta.size() == 10363);
}

TEST_CASE("initializer: scaled uniform weights, zero biases") {
    NetworkSpec spec;
    const auto p = init_network(spec);
    for (const auto& s : layer_slices(spec)) {
        const double r = std::sqrt(6.0 / (s.n_in + s.n_out));
        CHECK(p.theta.segment(s.w_offset, s.n_in * s.n_out).cwiseAbs().maxCoeff() <= r);
        CHECK(p.theta.segment(s.b_offset, s.n_out).isZero(0.0));
    }
}

TEST_CASE("zero-width hidden layer is rejected") {
    NetworkSpec spec;
    spec.width = 0;
    CHECK_THROWS_AS(init_network(spec), std::invalid_argument);
}

TEST_CASE("affine network has constant first derivatives") {
    NetworkSpec spec;
    spec.hidden_layers = 0;
    spec.rho_transform = RhoTransform::Identity;
    auto p = init_network(spec);
    for (Eigen::Index i = 0; i < p.theta.size(); ++i) p.theta[i] = 0.1 * double(i + 1);
    const auto sc = spec.input_scaling();
    // W is 3 x 2 column-major: W(r, 0) = theta[r], W(r, 1) = theta[3 + r]
    const auto j = forward_jet(p, 1.7, 33.0);
    const HeadJet* heads[] = {&j.psi, &j.rho, &j.pi};
    for (int r = 0; r < 3; ++r) {
        CHECK(heads[r]->d_dx == doctest::Approx(p.theta[r] * sc.x_scale));
        CHECK(heads[r]->d_dt == doctest::Approx(p.theta[3 + r] * sc.t_scale));
        CHECK(heads[r]->d_dxx == 0.0);
    }
}

TEST_CASE("single tanh unit") {
    NetworkSpec spec;
    spec.hidden_layers = 1;
    spec.width = 1;
    spec.x_lo = -1.0;
    spec.x_hi = 1.0;  // identity map in x
    auto p = init_network(spec);
    p.theta.setZero();
    p.theta[0] = 1.0;  // hidden weight on x
    p.theta[3] = 1.0;  // psi output weight
    const auto j0 = forward_jet(p, 0.0, 0.0);
    CHECK(j0.psi.value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(j0.psi.d_dx == doctest::Approx(1.0));
    CHECK(j0.psi.d_dxx == doctest::Approx(0.0).epsilon(1e-15));
    for (double x : {-0.8, 0.3, 0.9}) {
        const auto j = forward_jet(p, x, 0.0);
        const double th = std::tanh(x);
        CHECK(j.psi.value == doctest::Approx(th).epsilon(1e-13));
        CHECK(j.psi.d_dx == doctest::Approx(1 - th * th).epsilon(1e-13));
        CHECK(j.psi.d_dxx == doctest::Approx(-2 * th * (1 - th * th)).epsilon(1e-12));
    }
}

namespace {

void check_jets_against_fd(const NetworkParams& p, int n_points, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.3, 5.7), ut(5.0, 195.0);
    const double hx = 1e-5, ht = 1e-3, hxx = 1e-4;
    for (int i = 0; i < n_points; ++i) {
        const double x = ux(rng), t = ut(rng);
        const auto j = forward_jet(p, x, t);
        const auto xp = forward_jet(p, x + hx, t), xm = forward_jet(p, x - hx, t);
        const auto tp = forward_jet(p, x, t + ht), tm = forward_jet(p, x, t - ht);
        const auto xxp = forward_jet(p, x + hxx, t), xxm = forward_jet(p, x - hxx, t);
        auto check = [&](auto get) {
            const HeadJet& h = get(j);
            CHECK(rel_err(h.d_dx, (get(xp).value - get(xm).value) / (2 * hx)) < 1e-5);
            CHECK(rel_err(h.d_dt, (get(tp).value - get(tm).value) / (2 * ht)) < 1e-5);
            const double fd2 = (get(xxp).value - 2 * h.value + get(xxm).value) / (hxx * hxx);
            CHECK(rel_err(h.d_dxx, fd2) < 1e-3);
        };
        check([](const FieldJet& f) -> const HeadJet& { return f.psi; });
        check([](const FieldJet& f) -> const HeadJet& { return f.rho; });
        check([](const FieldJet& f) -> const HeadJet& { return f.pi; });
    }
}

}  // namespace

TEST_CASE("jets agree with finite differences on a random 2x16 network") {
    check_jets_against_fd(random_network(2, 16, 42), 50, 1);
}

TEST_CASE("jets of the identity and anchored rho heads agree with finite differences") {
    auto p = random_network(2, 16, 43);
    p.spec.rho_transform = RhoTransform::Identity;
    check_jets_against_fd(p, 20, 2);
    p.spec.rho_transform = RhoTransform::Anchored;
    check_jets_against_fd(p, 20, 3);
}

TEST_CASE("anchored rho head reproduces the end densities exactly") {
    auto p = random_network(2, 16, 44);
    p.spec.rho_transform = RhoTransform::Anchored;
    for (double x : {0.0, 0.3, 2.0, 4.9, 5.0, 6.0}) {
        CHECK(forward_jet(p, x, 0.0).rho.value == doctest::Approx(truncnorm_pdf(x, default_rho0())).epsilon(1e-14));
        CHECK(forward_jet(p, x, 200.0).rho.value ==
              doctest::Approx(truncnorm_pdf(x, default_rhoT())).epsilon(1e-14));
    }
}

TEST_CASE("softplus rho head is nonnegative") {
    const auto p = random_network(3, 20, 5, 3.0);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ux(-5.0, 11.0), ut(-100.0, 400.0);
    for (int i = 0; i < 2000; ++i) CHECK(forward_jet(p, ux(rng), ut(rng)).rho.value >= 0.0);
}

TEST_CASE("non-finite parameters are rejected") {
    auto p = random_network(1, 4, 1);
    p.theta[2] = std::nan("");
    CHECK_THROWS_AS(forward_jet(p, 1.0, 1.0), NonFiniteError);
}

TEST_CASE("value-only loss gradient equals the plain forward gradient") {
    const auto p = random_network(2, 12, 8);
    const std::vector<SpaceTime> pt{{2.5, 70.0}};
    const PointLoss psi_only = [](auto, std::span<const FieldJet> jets, std::span<double> loss,
                                  std::span<FieldJet> adj) {
        loss[0] = jets[0].psi.value;
        adj[0] = FieldJet{};
        adj[0].psi.value = 1.0;
    };
    const auto full = loss_gradient(p, pt, psi_only, {JetOrder::Full, 1});
    const auto plain = loss_gradient(p, pt, psi_only, {JetOrder::Value, 1});
    CHECK(full.loss == plain.loss);
    CHECK((full.grad - plain.grad).cwiseAbs().maxCoeff() < 1e-14);
    const double h = 1e-6;
    for (int k = 0; k < 10; ++k) {
        const Eigen::Index i = (k * 37) % p.theta.size();
        auto a = p, b = p;
        a.theta[i] += h;
        b.theta[i] -= h;
        const double fd = (forward_jet(a, 2.5, 70.0).psi.value - forward_jet(b, 2.5, 70.0).psi.value) / (2 * h);
        CHECK(rel_err(full.grad[i], fd) < 1e-6);
    }
}

TEST_CASE("squared HJB residual gradient matches finite differences") {
    const auto p = random_network(2, 16, 21);
    const Landscape L;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ux(0.0, 6.0), ut(0.0, 200.0);
    std::vector<SpaceTime> pts(10);
    for (auto& q : pts) q = {ux(rng), ut(rng)};
    const PointLoss hjb2 = [&](std::span<const SpaceTime> ps, std::span<const FieldJet> jets,
                               std::span<double> loss, std::span<FieldJet> adj) {
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const auto a = hjb_adjoint(jets[i], L, ps[i].x);
            loss[i] = a.value * a.value;
            adj[i] = a.grad;
            for (HeadJet* h : {&adj[i].psi, &adj[i].rho, &adj[i].pi}) {
                h->value *= 2 * a.value;
                h->d_dx *= 2 * a.value;
                h->d_dt *= 2 * a.value;
                h->d_dxx *= 2 * a.value;
            }
        }
    };
    auto sum_sq = [&](const NetworkParams& q) {
        double s = 0.0;
        for (const auto& pt : pts) {
            const double r = hjb_residual(forward_jet(q, pt.x, pt.t), L.partials(pt.x, forward_jet(q, pt.x, pt.t).pi.value));
            s += r * r;
        }
        return s;
    };
    const auto g = loss_gradient(p, pts, hjb2);
    CHECK(g.loss == doctest::Approx(sum_sq(p)).epsilon(1e-12));
    std::mt19937_64 pick(77);
    std::uniform_int_distribution<Eigen::Index> ui(0, p.theta.size() - 1);
    for (int k = 0; k < 25; ++k) {
        const Eigen::Index i = ui(pick);
        const double h = 1e-6 * std::max(1.0, std::abs(p.theta[i]));
        auto a = p, b = p;
        a.theta[i] += h;
        b.theta[i] -= h;
        const double fd = (sum_sq(a) - sum_sq(b)) / (2 * h);
        CHECK(std::abs(g.grad[i] - fd) <= 1e-4 * std::abs(fd) + 1e-9);
    }
}

TEST_CASE("parameters feeding only an unused head receive zero gradient") {
    const auto p = random_network(2, 10, 31);
    const std::vector<SpaceTime> pts{{1.0, 10.0}, {4.0, 150.0}};
    const PointLoss psi_sq = [](auto, std::span<const FieldJet> jets, std::span<double> loss,
                                std::span<FieldJet> adj) {
        for (std::size_t i = 0; i < jets.size(); ++i) {
            loss[i] = jets[i].psi.d_dxx * jets[i].psi.d_dxx;
            adj[i] = FieldJet{};
            adj[i].psi.d_dxx = 2 * jets[i].psi.d_dxx;
        }
    };
    const auto g = loss_gradient(p, pts, psi_sq);
    const auto last = layer_slices(p.spec).back();
    for (int c = 0; c < last.n_in; ++c) {
        CHECK(g.grad[last.w_offset + c * 3 + 1] == 0.0);  // rho row
        CHECK(g.grad[last.w_offset + c * 3 + 2] == 0.0);  // pi row
    }
    CHECK(g.grad[last.b_offset + 1] == 0.0);
    CHECK(g.grad[last.b_offset + 2] == 0.0);
    CHECK(g.grad[last.b_offset] == 0.0);  // bias does not reach a second derivative
    CHECK(g.grad.segment(last.w_offset, last.n_in * 3).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("non-finite loss names the collocation point") {
    const auto p = random_network(1, 4, 2);
    const std::vector<SpaceTime> pts{{1.0, 1.0}, {2.5, 3.0}};
    const PointLoss bad = [](std::span<const SpaceTime> ps, auto, std::span<double> loss,
                             std::span<FieldJet> adj) {
        for (std::size_t i = 0; i < ps.size(); ++i) {
            loss[i] = ps[i].x == 2.5 ? std::nan("") : 1.0;
            adj[i] = FieldJet{};
        }
    };
    try {
        loss_gradient(p, pts, bad);
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(e.point.x == 2.5);
        CHECK(e.point.t == 3.0);
    }
}

TEST_CASE("gradient is bit-identical across thread counts") {
    const auto p = random_network(3, 24, 12);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ux(0.0, 6.0), ut(0.0, 200.0);
    std::vector<SpaceTime> pts(1500);
    for (auto& q : pts) q = {ux(rng), ut(rng)};
    const PointLoss l = [](auto, std::span<const FieldJet> jets, std::span<double> loss, std::span<FieldJet> adj) {
        for (std::size_t i = 0; i < jets.size(); ++i) {
            loss[i] = jets[i].rho.d_dt * jets[i].pi.d_dxx;
            adj[i] = FieldJet{};
            adj[i].rho.d_dt = jets[i].pi.d_dxx;
            adj[i].pi.d_dxx = jets[i].rho.d_dt;
        }
    };
    const auto a = loss_gradient(p, pts, l, {JetOrder::Full, 1});
    const auto b = loss_gradient(p, pts, l, {JetOrder::Full, 4});
    const auto c = loss_gradient(p, pts, l, {JetOrder::Full, 1});
    CHECK(a.loss == b.loss);
    CHECK((a.grad.array() == b.grad.array()).all());
    CHECK((a.grad.array() == c.grad.array()).all());
}

TEST_CASE("rho transform names round-trip") {
    for (auto r : {RhoTransform::Softplus, RhoTransform::Identity, RhoTransform::Anchored})
        CHECK(rho_transform_from_string(to_string(r)) == r);
    CHECK_THROWS(rho_transform_from_string("cubic"));
    CHECK(activation_from_string(to_string(Activation::Tanh)) == Activation::Tanh);
}
