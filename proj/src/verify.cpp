#include "sbpinn/verify.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sbpinn {

VerifyInputs network_inputs(const NetworkParams& params, const RunConfig& config) {
    VerifyInputs in{network_policy(params), Landscape(config.landscape), std::nullopt};
    in.model_rho = [params](std::span<const double> x, double t, std::span<double> rho) {
        std::vector<SpaceTime> pts(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) pts[i] = {x[i], t};
        const auto jets = forward_jets(params, pts, JetOrder::Value);
        for (std::size_t i = 0; i < x.size(); ++i) rho[i] = jets[i].rho.value;
    };
    return in;
}

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string VerifyReport::to_json() const {
    nlohmann::ordered_json j;
    j["kde_w1_T"] = kde_w1_T;
    j["kde_ks_T"] = kde_ks_T;
    j["oracle_l1_T"] = oracle_l1_T;
    j["mass_drift"] = mass_drift;
    j["oracle_l1_model"] = oracle_l1_model >= 0.0 ? nlohmann::ordered_json(oracle_l1_model)
                                                  : nlohmann::ordered_json(nullptr);
    j["oracle_w1_T"] = oracle_w1_T;
    j["oracle_linf_T"] = oracle_linf_T;
    j["oracle_min"] = oracle_min;
    j["sample_w1_T"] = sample_w1_T;
    j["sample_ks_T"] = sample_ks_T;
    j["terminal_mean"] = terminal_mean;
    j["terminal_sd"] = terminal_sd;
    j["mh_acceptance"] = mh_acceptance;
    j["kde_bandwidth"] = bandwidth;
    auto& arr = j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}});
    j["passed"] = passed();
    return j.dump(2);
}

std::vector<double> density_on_grid(const TruncNormSpec& spec, std::span<const double> nodes) {
    std::vector<double> rho(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) rho[i] = truncnorm_pdf(nodes[i], spec);
    const double mass = trapezoid(nodes, rho);
    for (double& r : rho) r /= mass;
    return rho;
}

Grid1D oracle_grid(const RunConfig& config, const Landscape& landscape) {
    double max_d2 = 0.0;
    if (landscape.is_stub())
        max_d2 = landscape.diffusion(0.0, 0.0);
    else
        max_d2 = landscape.params().d + landscape.params().f;
    return Grid1D::for_horizon(config.oracle.nx, config.train.x_lo, config.train.x_hi,
                               config.train.t_final, max_d2 > 0.0 ? max_d2 : 1e-300,
                               config.oracle.safety);
}

Verification verify_policy(const VerifyInputs& inputs, const RunConfig& config) {
    Verification v;
    VerifyReport& r = v.report;

    const MhResult mh = mh_sample(config.rho0, config.sample.n, config.sample.mh, config.seed + 1);
    v.initial_samples = mh.samples;
    r.mh_acceptance = mh.acceptance_rate;

    v.ensemble = simulate_ensemble(inputs.policy, v.initial_samples, config.sim, inputs.landscape);
    const Snapshot last = snapshot(v.ensemble, config.train.t_final);
    const auto& xs = last.samples;
    const double n = double(xs.size());
    r.terminal_mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - r.terminal_mean) * (x - r.terminal_mean);
    r.terminal_sd = std::sqrt(ss / (n - 1.0));

    const Distances emp = distance(xs, config.rhoT);
    r.sample_w1_T = emp.wasserstein1;
    r.sample_ks_T = emp.ks;

    r.bandwidth = config.kde.bandwidth > 0.0 ? config.kde.bandwidth : silverman_bandwidth(xs);
    v.kde_grid = linspace(config.train.x_lo, config.train.x_hi, std::size_t(config.kde.grid_points));
    v.kde_terminal = kde(xs, r.bandwidth, v.kde_grid);
    const Distances kd = distance_grid(v.kde_grid, v.kde_terminal, config.rhoT);
    r.kde_w1_T = kd.wasserstein1;
    r.kde_ks_T = kd.ks;

    const Grid1D grid = oracle_grid(config, inputs.landscape);
    const auto nodes = grid.nodes();
    OracleOptions opts;
    opts.policy_every = std::max(1, int(std::lround(config.oracle.policy_dt / grid.dt_pde)));
    opts.store_every = config.oracle.store_every;
    v.oracle = propagate(inputs.policy, density_on_grid(config.rho0, nodes), grid, inputs.landscape, opts);
    r.mass_drift = v.oracle.max_mass_drift;
    r.oracle_min = v.oracle.min_value;
    const auto target = density_on_grid(config.rhoT, nodes);
    const auto cmp = compare(nodes, v.oracle.final(), nodes, target);
    r.oracle_l1_T = cmp.L1;
    r.oracle_w1_T = cmp.W1;
    r.oracle_linf_T = cmp.Linf;
    if (inputs.model_rho) {
        v.model_rho_T.resize(nodes.size());
        (*inputs.model_rho)(nodes, config.train.t_final, v.model_rho_T);
        r.oracle_l1_model = compare(nodes, v.oracle.final(), nodes, v.model_rho_T).L1;
    }

    const auto& th = config.verify;
    r.checks.push_back({"kde_w1_T", r.kde_w1_T, th.w1_max, r.kde_w1_T < th.w1_max});
    r.checks.push_back({"kde_ks_T", r.kde_ks_T, th.ks_max, r.kde_ks_T < th.ks_max});
    r.checks.push_back({"oracle_l1_T", r.oracle_l1_T, th.oracle_l1_max, r.oracle_l1_T < th.oracle_l1_max});
    if (inputs.model_rho)
        r.checks.push_back({"oracle_l1_model", r.oracle_l1_model, th.oracle_l1_max,
                            r.oracle_l1_model < th.oracle_l1_max});
    r.checks.push_back({"mass_drift", r.mass_drift, th.mass_drift_max, r.mass_drift < th.mass_drift_max});
    return v;
}

}  // namespace sbpinn
