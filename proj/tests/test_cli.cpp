#include "sbpinn/checkpoint.hpp"
#include "sbpinn/commands.hpp"
#include "sbpinn/config.hpp"
#include "sbpinn/verify.hpp"

#include <doctest.h>

#include <stdexcept>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace sbpinn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int count_lines(const fs::path& p) {
    std::ifstream f(p);
    std::string line;
    int n = 0;
    while (std::getline(f, line)) ++n;
    return n;
}

struct CliRun {
    int code;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "sbpinn");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream captured;
    auto* old = std::cerr.rdbuf(captured.rdbuf());
    const int code = run_cli(int(argv.size()), argv.data());
    std::cerr.rdbuf(old);
    return {code, captured.str()};
}

const char* kSmoke = R"(# tiny run
[network]
hidden_layers = 1
width = 6

[train]
epochs = 200
n_interior = 80
n_initial = 20
n_terminal = 20
rar_period = 100
rar_pool = 40
rar_add = 4

[sample]
n = 200

[simulate]
dt = 0.5
)";

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("sbpinn_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("empty config reproduces the reference setup") {
    const auto c = parse_config("");
    CHECK(c.train.network.hidden_layers == 3);
    CHECK(c.train.network.width == 70);
    CHECK(c.train.n_interior == 5000);
    CHECK(c.train.n_initial == 1000);
    CHECK(c.train.n_terminal == 1000);
    CHECK(c.train.epochs == 15000);
    CHECK(c.train.adam.lr == 1e-3);
    CHECK(c.landscape.a == 10.0);
    CHECK(c.landscape.b == 2.1);
    CHECK(c.landscape.c == 0.75);
    CHECK(c.rho0.mu == 0.0);
    CHECK(c.rho0.sigma == 0.2);
    CHECK(c.rhoT.mu == 5.0);
    CHECK(c.rhoT.sigma == 0.1);
    CHECK(c.train.t_final == 200.0);
    CHECK(c.sample.n == 1000);
    CHECK(c.sim.n_paths == 1000);
    CHECK(c.sim.dt == 0.1);
}

TEST_CASE("config errors name the line and the field") {
    try {
        parse_config("[train]\nepochs = 10\nlr = fast\n", "run.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);
        CHECK(e.field == "train.lr");
        CHECK(std::string(e.what()).find("run.cfg:3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[train]\nepoch = 10\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[train\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("epochs 10\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[train]\nepochs = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[landscape]\nd = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[network]\nactivation = relu\n"), ConfigError);
}

TEST_CASE("config dump round-trips and hashes stably") {
    auto c = parse_config("[train]\nepochs = 77\n[run]\nseed = 5\n");
    CHECK(c.train.epochs == 77);
    CHECK(c.train.seed == 5u);
    const auto d = parse_config(c.dump());
    CHECK(d.dump() == c.dump());
    CHECK(d.hash() == c.hash());
    CHECK(parse_config("").hash() != c.hash());
    CHECK(c.hash().size() == 16u);
}

TEST_CASE("missing config file") {
    const auto r = run({"train", "--config", "/no/such/run.cfg"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("/no/such/run.cfg") != std::string::npos);
}

TEST_CASE("unknown subcommand and missing checkpoint are usage errors") {
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"verify"}).code == kExitUsage);
}

TEST_CASE("smoke run: train, export, verify, simulate") {
    const auto dir = scratch("smoke");
    {
        std::ofstream(dir / "smoke.cfg") << kSmoke;
    }
    const auto cfg = (dir / "smoke.cfg").string();
    const auto out = (dir / "out").string();
    REQUIRE(run({"train", "--config", cfg, "--out", out, "--deterministic"}).code == kExitOk);
    for (const char* f : {"model.ckpt", "model.ckpt.json", "history.csv", "residuals.svg", "config.txt"})
        CHECK(fs::exists(dir / "out" / f));
    CHECK(count_lines(dir / "out" / "history.csv") == 200 + 2);
    const auto hist = slurp(dir / "out" / "history.csv");
    CHECK(hist.rfind("# config_hash=", 0) == 0);
    CHECK(hist.find("epoch,L_psi,L_rho,L_pi,L_rho0,L_rhoT,total,wall_seconds") != std::string::npos);

    SUBCASE("deterministic rerun is byte-identical") {
        const auto out2 = (dir / "out2").string();
        REQUIRE(run({"train", "--config", cfg, "--out", out2, "--deterministic"}).code == kExitOk);
        CHECK(slurp(dir / "out2" / "history.csv") == hist);
        CHECK(slurp(dir / "out2" / "model.ckpt") == slurp(dir / "out" / "model.ckpt"));
    }

    SUBCASE("export fields") {
        const auto ckpt = (dir / "out" / "model.ckpt").string();
        const auto e1 = (dir / "e1").string(), e2 = (dir / "e2").string();
        REQUIRE(run({"export-fields", "--config", cfg, "--checkpoint", ckpt, "--out", e1}).code == kExitOk);
        REQUIRE(run({"export-fields", "--config", cfg, "--checkpoint", ckpt, "--out", e2}).code == kExitOk);
        for (const char* f : {"psi.csv", "rho.csv", "pi.csv"}) {
            CHECK(count_lines(dir / "e1" / f) == 61 * 201 + 2);
            CHECK(slurp(dir / "e1" / f) == slurp(dir / "e2" / f));
        }
        for (const char* f : {"psi_heatmap.svg", "rho_snapshots.svg", "pi_heatmap.svg"})
            CHECK(fs::exists(dir / "e1" / f));

        // t = 0 slice against rho_0, bounded by the boundary loss of the model
        const auto params = load_checkpoint(ckpt);
        const auto meta = load_checkpoint_meta(ckpt + ".json");
        const auto xs = linspace(0.0, 6.0, 61);
        std::vector<double> err(61);
        for (std::size_t i = 0; i < 61; ++i)
            err[i] = std::abs(forward_jet(params, xs[i], 0.0).rho.value - truncnorm_pdf(xs[i], default_rho0()));
        const double l1 = trapezoid(xs, err);
        CHECK(l1 < 1.5 * 6.0 * std::sqrt(meta.losses.L_rho0) + 0.05);
    }

    SUBCASE("verify writes the report") {
        const auto ckpt = (dir / "out" / "model.ckpt").string();
        const auto v = (dir / "v").string();
        const auto r = run({"verify", "--config", cfg, "--checkpoint", ckpt, "--out", v});
        CHECK((r.code == kExitOk || r.code == kExitNumerical));
        const auto j = nlohmann::json::parse(slurp(dir / "v" / "verify.json"));
        for (const char* k : {"kde_w1_T", "kde_ks_T", "oracle_l1_T", "mass_drift"}) CHECK(j.contains(k));
        CHECK(j["checks"].size() >= 4u);
        for (const char* f : {"terminal_oracle.csv", "kde_snapshots.csv", "kde_snapshots.svg", "terminal.svg",
                              "oracle_history.csv", "samples.csv"})
            CHECK(fs::exists(dir / "v" / f));
    }

    SUBCASE("simulate writes the ensemble") {
        const auto ckpt = (dir / "out" / "model.ckpt").string();
        const auto s = (dir / "s").string();
        REQUIRE(run({"simulate", "--config", cfg, "--checkpoint", ckpt, "--out", s}).code == kExitOk);
        CHECK(count_lines(dir / "s" / "ensemble.csv") == 200 * 201 + 2);
        CHECK(fs::exists(dir / "s" / "trajectories.svg"));
    }

    SUBCASE("corrupt checkpoint is rejected") {
        {
            std::ofstream(dir / "bad.ckpt") << "NOTACHECKPOINTFILE";
        }
        const auto r = run({"export-fields", "--checkpoint", (dir / "bad.ckpt").string(), "--out",
                            (dir / "bad").string()});
        CHECK(r.code == kExitUsage);
        CHECK(r.err.find("magic") != std::string::npos);
    }
}

TEST_CASE("null dynamics: terminal KDE matches up to sampling noise") {
    auto cfg = parse_config("[problem]\nrhoT_mu = 0\nrhoT_sigma = 0.2\n[oracle]\nnx = 200\n");
    VerifyInputs in{constant_policy(0.0), Landscape::constant(0.0, 0.0), std::nullopt};
    const auto v = verify_policy(in, cfg);
    CHECK(v.report.sample_w1_T < 0.02);
    CHECK(v.report.kde_w1_T < 0.05);
    CHECK(v.report.kde_ks_T < 0.10);
    CHECK(v.report.oracle_l1_T < 1e-12);
    CHECK(v.report.mass_drift < 1e-12);
}
