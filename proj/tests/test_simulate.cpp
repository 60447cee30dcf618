#include "sbpinn/prob.hpp"
#include "sbpinn/simulate.hpp"
#include "support.hpp"

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

using namespace sbpinn;

TEST_CASE("Euler-Maruyama step under stubs") {
    const auto frozen = Landscape::constant(0.0, 0.0);
    CHECK(em_step(2.3, 1.0, 0.1, 0.7, frozen) == 2.3);
    const auto drift = Landscape::constant(0.4, 0.0);
    CHECK(em_step(2.3, 0.0, 0.1, 0.0, drift) == doctest::Approx(2.34).epsilon(1e-15));
    const auto diff = Landscape::constant(0.0, 0.02);
    CHECK(em_step(1.0, 0.0, 0.1, 0.5, diff) == doctest::Approx(1.0 + std::sqrt(0.04) * 0.5).epsilon(1e-15));
}

TEST_CASE("boundary handling") {
    CHECK(apply_boundary(6.3, BoundaryMode::Reflect, 0.0, 6.0) == doctest::Approx(5.7));
    CHECK(apply_boundary(-0.2, BoundaryMode::Reflect, 0.0, 6.0) == doctest::Approx(0.2));
    CHECK(apply_boundary(13.0, BoundaryMode::Reflect, 0.0, 6.0) == doctest::Approx(1.0));
    CHECK(apply_boundary(6.3, BoundaryMode::Clamp, 0.0, 6.0) == 6.0);
    CHECK(apply_boundary(-0.2, BoundaryMode::Clamp, 0.0, 6.0) == 0.0);
    CHECK(apply_boundary(2.5, BoundaryMode::Reflect, 0.0, 6.0) == 2.5);
    CHECK(boundary_mode_from_string("clamp") == BoundaryMode::Clamp);
    CHECK_THROWS(boundary_mode_from_string("absorb"));
}

TEST_CASE("config validation") {
    SimConfig c;
    c.dt = 0.3;
    c.T = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SimConfig{};
    c.n_paths = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(SimConfig{}.n_steps() == 2000);
}

TEST_CASE("Brownian variance under a constant diffusion stub") {
    SimConfig c;
    c.n_paths = 100000;
    c.dt = 0.1;
    c.T = 5.0;
    c.x_lo = -100.0;
    c.x_hi = 100.0;
    const double D = 0.02;
    const std::vector<double> init(std::size_t(c.n_paths), 0.0);
    const auto ens = simulate_ensemble(constant_policy(0.0), init, c, Landscape::constant(0.0, D));
    const auto last = ens.states.col(ens.states.cols() - 1);
    const double mean = last.mean();
    const double var = (last.array() - mean).square().sum() / double(c.n_paths - 1);
    const double expected = 2.0 * D * c.T;
    CHECK(std::abs(var - expected) < 3.0 * expected * std::sqrt(2.0 / (c.n_paths - 1)));
}

TEST_CASE("zero-noise ensemble follows the Euler map of the closed loop") {
    const auto net = sbpinn::testing::random_network(2, 8, 14);
    const Landscape L;
    SimConfig c;
    c.n_paths = 3;
    c.dt = 0.1;
    c.T = 0.2;
    c.zero_noise = true;
    const std::vector<double> init{0.5, 2.0, 4.5};
    const auto ens = simulate_ensemble(net, init, c, L);
    REQUIRE(ens.states.cols() == 3);
    for (int i = 0; i < 3; ++i) {
        double x = init[std::size_t(i)];
        for (int k = 0; k < 2; ++k) {
            const double u = forward_jet(net, x, 0.1 * k).pi.value;
            CHECK(ens.controls(i, k) == doctest::Approx(u).epsilon(1e-14));
            x = apply_boundary(x + eval_drift(x, u, L.params()) * 0.1, BoundaryMode::Reflect, 0.0, 6.0);
            CHECK(ens.states(i, k + 1) == doctest::Approx(x).epsilon(1e-14));
        }
    }
}

TEST_CASE("reflection keeps every state in the domain for 10^4 steps") {
    SimConfig c;
    c.n_paths = 50;
    c.dt = 0.1;
    c.T = 1000.0;
    const std::vector<double> init(50, 3.0);
    for (double u : {-10.0, 10.0}) {
        const auto ens = simulate_ensemble(constant_policy(u), init, c, Landscape{});
        CHECK(ens.states.minCoeff() >= 0.0);
        CHECK(ens.states.maxCoeff() <= 6.0);
        CHECK(ens.n_paths() == 50);
    }
}

TEST_CASE("same seed gives bit-identical ensembles") {
    SimConfig c;
    c.n_paths = 20;
    c.T = 10.0;
    const auto init = mh_sample(default_rho0(), 20, MhSettings{}, 3).samples;
    const auto a = simulate_ensemble(constant_policy(3.0), init, c, Landscape{});
    const auto b = simulate_ensemble(constant_policy(3.0), init, c, Landscape{});
    CHECK((a.states.array() == b.states.array()).all());
    c.seed = 100;
    const auto d = simulate_ensemble(constant_policy(3.0), init, c, Landscape{});
    CHECK((a.states.array() != d.states.array()).any());
}

TEST_CASE("snapshot column selection") {
    SimConfig c;
    c.n_paths = 4;
    c.dt = 0.5;
    c.T = 2.0;
    const std::vector<double> init{0.1, 0.2, 0.3, 0.4};
    const auto ens = simulate_ensemble(constant_policy(0.0), init, c, Landscape{});
    const auto s0 = snapshot(ens, 0.0);
    CHECK(s0.samples == init);
    CHECK(s0.time == 0.0);
    const auto sT = snapshot(ens, 2.0);
    CHECK(sT.column == 4u);
    CHECK(sT.samples[2] == ens.states(2, 4));
    const auto tie = snapshot(ens, 0.75);
    CHECK(tie.column == 1u);
    CHECK(tie.time == 0.5);
    CHECK(snapshot(ens, 0.8).column == 2u);
    CHECK_THROWS(snapshot(ens, 2.5));
}

TEST_CASE("non-finite states name the path and step") {
    SimConfig c;
    c.n_paths = 2;
    c.T = 1.0;
    try {
        simulate_ensemble(constant_policy(std::nan("")), std::vector<double>{1.0, 2.0}, c, Landscape{});
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("path 0") != std::string::npos);
        CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    }
}

TEST_CASE("halving dt moves terminal W1 by less than the Monte-Carlo floor") {
    SimConfig c;
    c.n_paths = 1000;
    c.T = 200.0;
    const auto init = mh_sample(default_rho0(), 1000, MhSettings{}, 8).samples;
    const double u_center = (5.0 - 2.1) / 0.75;
    auto terminal = [&](double dt) {
        c.dt = dt;
        const auto ens = simulate_ensemble(constant_policy(u_center), init, c, Landscape{});
        return snapshot(ens, 200.0).samples;
    };
    const auto coarse = terminal(0.1);
    const auto fine = terminal(0.05);
    const auto spec = default_rhoT();
    const double diff = std::abs(distance(coarse, spec).wasserstein1 - distance(fine, spec).wasserstein1);

    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> pick(0, coarse.size() - 1);
    std::vector<double> boot(200);
    for (double& b : boot) {
        std::vector<double> r(coarse.size());
        for (double& v : r) v = coarse[pick(rng)];
        b = distance(r, spec).wasserstein1;
    }
    double m = 0, s2 = 0;
    for (double b : boot) m += b / 200.0;
    for (double b : boot) s2 += (b - m) * (b - m) / 199.0;
    CHECK(diff < 3.0 * std::sqrt(s2));
}
