#include "sbpinn/commands.hpp"

#include "sbpinn/checkpoint.hpp"
#include "sbpinn/plot.hpp"
#include "sbpinn/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>

namespace sbpinn {

namespace {

std::ostream& log_of(const CommandContext& ctx) { return ctx.log ? *ctx.log : std::cerr; }

NetworkParams require_checkpoint(const CommandContext& ctx) {
    if (!ctx.checkpoint) throw ConfigError("--checkpoint is required for this command");
    return load_checkpoint(*ctx.checkpoint);
}

void prepare_out(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    write_text(cfg.out_dir / "config.txt", cfg.dump());
}

const char* kTermNames[] = {"L_psi", "L_rho", "L_pi", "L_rho0", "L_rhoT"};

std::array<double, 5> terms(const LossBreakdown& l) {
    return {l.L_psi, l.L_rho, l.L_pi, l.L_rho0, l.L_rhoT};
}

}  // namespace

int cmd_train(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    auto& log = log_of(ctx);
    prepare_out(cfg);
    std::optional<NetworkParams> warm;
    if (ctx.checkpoint) warm = load_checkpoint(*ctx.checkpoint);

    const auto ckpt_path = cfg.out_dir / "model.ckpt";
    TrainHooks hooks;
    hooks.on_epoch = [&](const HistoryRow& r) {
        if (r.epoch == 1 || r.epoch % 500 == 0)
            log << "epoch " << r.epoch << "  total " << r.losses.total << "  max term "
                << r.losses.max_term() << "\n";
    };
    hooks.on_checkpoint = [&](const NetworkParams& p, const HistoryRow& r) {
        save_checkpoint(ckpt_path, p);
        save_checkpoint_meta(ckpt_path.string() + ".json",
                             {r.epoch, r.losses, cfg.seed, cfg.deterministic ? 0.0 : r.wall_seconds, {}});
    };

    TrainResult res;
    int code = kExitOk;
    try {
        res = train(cfg.train, cfg.problem(), hooks, warm);
    } catch (const TrainingDiverged& e) {
        log << "error: " << e.what() << "\n";
        save_checkpoint(cfg.out_dir / "last_good.ckpt", e.last_good);
        return kExitNumerical;
    }

    const bool walls = cfg.train.n_wall > 0;
    std::vector<std::string> header{"epoch", "L_psi", "L_rho", "L_pi", "L_rho0", "L_rhoT", "total",
                                    "wall_seconds"};
    if (walls) header.push_back("L_wall");
    CsvWriter csv(cfg.hash(), cfg.seed, header);
    LineChart chart{"Training residuals", "epoch", "mean squared residual", true, {}};
    for (const char* name : kTermNames) chart.series.push_back({name, {}, {}});
    for (const auto& row : res.history) {
        const auto t = terms(row.losses);
        std::vector<double> vals{double(row.epoch), t[0], t[1], t[2], t[3], t[4], row.losses.total,
                                 cfg.deterministic ? 0.0 : row.wall_seconds};
        if (walls) vals.push_back(row.losses.L_wall);
        csv.row(vals);
        for (int k = 0; k < 5; ++k) {
            chart.series[k].x.push_back(double(row.epoch));
            chart.series[k].y.push_back(t[k]);
        }
    }
    csv.save(cfg.out_dir / "history.csv");
    write_text(cfg.out_dir / "residuals.svg", render_svg(chart));

    const auto fin = terms(res.final_losses);
    log << "final:";
    for (int k = 0; k < 5; ++k) log << " " << kTermNames[k] << "=" << fin[k];
    log << "\n";
    if (res.final_losses.max_term() >= cfg.train.residual_target) {
        log << "note: residual target " << cfg.train.residual_target << " not reached (max term "
            << res.final_losses.max_term() << ")\n";
    }
    return code;
}

int cmd_export_fields(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const NetworkParams params = require_checkpoint(ctx);
    prepare_out(cfg);
    const auto xs = linspace(params.spec.x_lo, params.spec.x_hi, std::size_t(cfg.export_grid.nx));
    const auto ts = linspace(0.0, params.spec.t_final, std::size_t(cfg.export_grid.nt));
    std::vector<SpaceTime> pts;
    pts.reserve(xs.size() * ts.size());
    for (double x : xs)
        for (double t : ts) pts.push_back({x, t});
    const auto jets = forward_jets(params, pts, JetOrder::Value);

    const char* names[] = {"psi", "rho", "pi"};
    for (int f = 0; f < 3; ++f) {
        CsvWriter csv(cfg.hash(), cfg.seed, {"x", "t", names[f]});
        std::vector<double> values(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto& j = jets[i];
            values[i] = f == 0 ? j.psi.value : f == 1 ? j.rho.value : j.pi.value;
            const double row[] = {pts[i].x, pts[i].t, values[i]};
            csv.row(row);
        }
        csv.save(cfg.out_dir / (std::string(names[f]) + ".csv"));
        write_text(cfg.out_dir / (std::string(names[f]) + "_heatmap.svg"),
                   render_heatmap_svg(names[f], xs, ts, values));

        LineChart snap{std::string(names[f]) + " snapshots", "x", names[f], false, {}};
        for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const std::size_t it = std::size_t(std::lround(frac * double(ts.size() - 1)));
            Series s{"t=" + std::to_string(int(std::lround(ts[it]))), xs, {}};
            for (std::size_t ix = 0; ix < xs.size(); ++ix) s.y.push_back(values[ix * ts.size() + it]);
            snap.series.push_back(std::move(s));
        }
        write_text(cfg.out_dir / (std::string(names[f]) + "_snapshots.svg"), render_svg(snap));
    }
    log_of(ctx) << "exported " << xs.size() << " x " << ts.size() << " grid to " << cfg.out_dir << "\n";
    return kExitOk;
}

int cmd_verify(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const NetworkParams params = require_checkpoint(ctx);
    prepare_out(cfg);
    auto& log = log_of(ctx);
    const Verification v = verify_policy(network_inputs(params, cfg), cfg);
    write_text(cfg.out_dir / "verify.json", v.report.to_json() + "\n");

    const auto nodes = v.oracle.x;
    const auto target = density_on_grid(cfg.rhoT, nodes);
    CsvWriter csv(cfg.hash(), cfg.seed, {"x", "oracle_rho_T", "model_rho_T", "target_rho_T"});
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double row[] = {nodes[i], v.oracle.final()[i], v.model_rho_T.empty() ? 0.0 : v.model_rho_T[i],
                              target[i]};
        csv.row(row);
    }
    csv.save(cfg.out_dir / "terminal_oracle.csv");

    CsvWriter hist(cfg.hash(), cfg.seed, {"t", "x", "rho"});
    for (std::size_t k = 0; k < v.oracle.times.size(); ++k)
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double row[] = {v.oracle.times[k], nodes[i], v.oracle.rho[k][i]};
            hist.row(row);
        }
    hist.save(cfg.out_dir / "oracle_history.csv");

    CsvWriter samples(cfg.hash(), cfg.seed, {"index", "initial", "terminal"});
    const Snapshot fin = snapshot(v.ensemble, cfg.train.t_final);
    for (std::size_t i = 0; i < v.initial_samples.size(); ++i) {
        const double row[] = {double(i), v.initial_samples[i], fin.samples[i]};
        samples.row(row);
    }
    samples.save(cfg.out_dir / "samples.csv");

    LineChart chart{"Terminal density", "x", "density", false, {}};
    chart.series.push_back({"target", nodes, target});
    chart.series.push_back({"closed-loop KDE", v.kde_grid, v.kde_terminal});
    chart.series.push_back({"FD oracle", nodes, v.oracle.final()});
    if (!v.model_rho_T.empty()) chart.series.push_back({"network", nodes, v.model_rho_T});
    write_text(cfg.out_dir / "terminal.svg", render_svg(chart));

    CsvWriter kcsv(cfg.hash(), cfg.seed, {"t", "x", "kde"});
    LineChart kchart{"Closed-loop KDE snapshots", "x", "density", false, {}};
    for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const Snapshot s = snapshot(v.ensemble, frac * cfg.train.t_final);
        const double h = cfg.kde.bandwidth > 0.0 ? cfg.kde.bandwidth : silverman_bandwidth(s.samples);
        const auto dens = kde(s.samples, h, v.kde_grid);
        for (std::size_t i = 0; i < dens.size(); ++i) {
            const double row[] = {s.time, v.kde_grid[i], dens[i]};
            kcsv.row(row);
        }
        kchart.series.push_back({"t=" + std::to_string(int(std::lround(s.time))), v.kde_grid, dens});
    }
    kcsv.save(cfg.out_dir / "kde_snapshots.csv");
    write_text(cfg.out_dir / "kde_snapshots.svg", render_svg(kchart));

    for (const auto& c : v.report.checks)
        log << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << c.value << " (limit " << c.threshold
            << ")\n";
    return v.report.passed() ? kExitOk : kExitNumerical;
}

int cmd_simulate(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const NetworkParams params = require_checkpoint(ctx);
    prepare_out(cfg);
    const MhResult mh = mh_sample(cfg.rho0, cfg.sample.n, cfg.sample.mh, cfg.seed + 1);
    const PathEnsemble ens = simulate_ensemble(params, mh.samples, cfg.sim, Landscape(cfg.landscape));

    const Eigen::Index shown = std::min<Eigen::Index>(ens.n_paths(), 20);
    std::vector<std::string> header{"t"};
    for (Eigen::Index p = 0; p < shown; ++p) header.push_back("x" + std::to_string(p));
    for (Eigen::Index p = 0; p < shown; ++p) header.push_back("u" + std::to_string(p));
    CsvWriter paths(cfg.hash(), cfg.seed, header);
    CsvWriter stats(cfg.hash(), cfg.seed, {"t", "mean", "sd"});
    LineChart traj{"Closed-loop trajectories", "t", "x", false, {}};
    LineChart ctrl{"Applied control", "t", "u", false, {}};
    for (Eigen::Index p = 0; p < shown; ++p) {
        traj.series.push_back({"", ens.times, {}});
        ctrl.series.push_back({"", ens.times, {}});
    }
    std::vector<double> row(header.size());
    for (std::size_t k = 0; k < ens.times.size(); ++k) {
        row[0] = ens.times[k];
        for (Eigen::Index p = 0; p < shown; ++p) {
            row[1 + p] = ens.states(p, Eigen::Index(k));
            row[1 + shown + p] = ens.controls(p, Eigen::Index(k));
            traj.series[p].y.push_back(row[1 + p]);
            ctrl.series[p].y.push_back(row[1 + shown + p]);
        }
        paths.row(row);
        const auto col = ens.states.col(Eigen::Index(k));
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().sum() / double(col.size() - 1));
        const double srow[] = {ens.times[k], mean, sd};
        stats.row(srow);
    }
    paths.save(cfg.out_dir / "trajectories.csv");

    // Long format over every path, one row per second of simulated time.
    const std::size_t stride = std::max<std::size_t>(1, std::size_t(std::lround(1.0 / cfg.sim.dt)));
    CsvWriter longcsv(cfg.hash(), cfg.seed, {"path_id", "t", "state", "control"});
    for (Eigen::Index p = 0; p < ens.n_paths(); ++p)
        for (std::size_t k = 0; k < ens.times.size(); k += stride) {
            const double r[] = {double(p), ens.times[k], ens.states(p, Eigen::Index(k)),
                                ens.controls(p, Eigen::Index(k))};
            longcsv.row(r);
        }
    longcsv.save(cfg.out_dir / "ensemble.csv");
    stats.save(cfg.out_dir / "ensemble_stats.csv");
    write_text(cfg.out_dir / "trajectories.svg", render_svg(traj));
    write_text(cfg.out_dir / "controls.svg", render_svg(ctrl));
    log_of(ctx) << "simulated " << ens.n_paths() << " paths, terminal mean "
                << ens.states.col(ens.states.cols() - 1).mean() << "\n";
    return kExitOk;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Schrodinger-bridge density steering with a physics-informed network"};
    app.require_subcommand(1);
    std::string config_path, out_dir, checkpoint;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
    auto add_common = [&](CLI::App* sub, bool needs_checkpoint) {
        sub->add_option("--config", config_path, "run configuration file");
        sub->add_option("--seed", seed, "master seed (overrides [run] seed)");
        sub->add_option("--out", out_dir, "output directory (overrides [run] out)");
        sub->add_flag("--deterministic", deterministic, "single-threaded, timing columns zeroed");
        auto* opt = sub->add_option("--checkpoint", checkpoint,
                                    needs_checkpoint ? "trained model" : "warm-start model");
        if (needs_checkpoint) opt->required();
    };
    auto* train_cmd = app.add_subcommand("train", "train the network");
    auto* export_cmd = app.add_subcommand("export-fields", "tabulate psi, rho, pi on a grid");
    auto* verify_cmd = app.add_subcommand("verify", "closed-loop and oracle checks");
    auto* sim_cmd = app.add_subcommand("simulate", "closed-loop ensemble under the learned policy");
    add_common(train_cmd, false);
    add_common(export_cmd, true);
    add_common(verify_cmd, true);
    add_common(sim_cmd, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    CommandContext ctx;
    try {
        ctx.config = config_path.empty() ? parse_config("", "<defaults>") : load_config(config_path);
        if (seed) ctx.config.seed = *seed;
        if (!out_dir.empty()) ctx.config.out_dir = out_dir;
        if (deterministic) ctx.config.deterministic = true;
        ctx.config.sync();
        ctx.config.validate();
        if (!checkpoint.empty()) ctx.checkpoint = checkpoint;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*train_cmd) return cmd_train(ctx);
        if (*export_cmd) return cmd_export_fields(ctx);
        if (*verify_cmd) return cmd_verify(ctx);
        return cmd_simulate(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CheckpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NonFiniteError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const OracleError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace sbpinn
