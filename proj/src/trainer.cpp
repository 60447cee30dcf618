#include "sbpinn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace sbpinn {

void TrainConfig::validate() const {
    network.validate();
    if (n_interior < 1 || n_initial < 1 || n_terminal < 1)
        throw std::invalid_argument("train: every collocation group needs at least one point");
    if (n_wall < 0) throw std::invalid_argument("train: n_wall must be >= 0");
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (!(adam.lr > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
    if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0) || !(adam.beta2 > 0.0 && adam.beta2 < 1.0))
        throw std::invalid_argument("train: Adam betas must lie in (0, 1)");
    if (!(adam.eps > 0.0)) throw std::invalid_argument("train: Adam eps must be positive");
    if (rar.enabled && (rar.period < 1 || rar.pool < 1 || rar.add < 0 || rar.add > rar.pool))
        throw std::invalid_argument("train: RAR needs period >= 1 and 0 <= add <= pool");
    if (!(x_hi > x_lo) || !(t_final > 0.0))
        throw std::invalid_argument("train: empty space-time domain");
    if (threads < 1) throw std::invalid_argument("train: threads must be >= 1");
}

AdamState AdamState::zeros(Eigen::Index n) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0};
}

namespace {

// Open interval sample; uniform_real_distribution can return the lower edge.
double open_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    double v = d(rng);
    while (v <= lo) v = d(rng);
    return v;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

CollocationSet sample_collocation(const TrainConfig& config) {
    config.validate();
    std::mt19937_64 rng(mix_seed(config.seed, 0));
    std::uniform_real_distribution<double> ux(config.x_lo, config.x_hi);
    CollocationSet c;
    c.interior.reserve(std::size_t(config.n_interior));
    for (int i = 0; i < config.n_interior; ++i) {
        const double x = open_uniform(rng, config.x_lo, config.x_hi);
        const double t = open_uniform(rng, 0.0, config.t_final);
        c.interior.push_back({x, t});
    }
    for (int i = 0; i < config.n_initial; ++i) c.initial.push_back({ux(rng), 0.0});
    for (int i = 0; i < config.n_terminal; ++i) c.terminal.push_back({ux(rng), config.t_final});
    std::uniform_real_distribution<double> ut(0.0, config.t_final);
    for (int i = 0; i < config.n_wall; ++i)
        c.wall.push_back({i % 2 == 0 ? config.x_lo : config.x_hi, ut(rng)});
    return c;
}

std::vector<SpaceTime> refinement_pool(const TrainConfig& config, int round) {
    std::mt19937_64 rng(mix_seed(config.seed, 1000 + std::uint64_t(round)));
    std::vector<SpaceTime> pool;
    pool.reserve(std::size_t(config.rar.pool));
    for (int i = 0; i < config.rar.pool; ++i) {
        const double x = open_uniform(rng, config.x_lo, config.x_hi);
        const double t = open_uniform(rng, 0.0, config.t_final);
        pool.push_back({x, t});
    }
    return pool;
}

double refinement_score(const PdeResiduals& r, const LossWeights& w) {
    return std::sqrt(w.psi) * std::abs(r.hjb) + std::sqrt(w.rho) * std::abs(r.fpk) +
           std::sqrt(w.pi) * std::abs(r.policy);
}

CollocationSet adaptive_refine(const NetworkParams& params, const TrainConfig& config,
                               const CollocationSet& current, const BridgeProblem& problem,
                               int round) {
    CollocationSet out = current;
    if (!config.rar.enabled || config.rar.add <= 0) return out;
    const auto pool = refinement_pool(config, round);
    const auto res = pde_residuals(params, pool, problem.landscape);
    std::vector<double> score(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) score[i] = refinement_score(res[i], config.weights);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto k = std::min<std::size_t>(std::size_t(config.rar.add), pool.size());
    std::partial_sort(order.begin(), order.begin() + std::ptrdiff_t(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return score[a] != score[b] ? score[a] > score[b] : a < b;
                      });
    for (std::size_t i = 0; i < k; ++i) out.interior.push_back(pool[order[i]]);
    return out;
}

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               const AdamHyper& hyper) {
    if (state.m.size() != params.size() || state.v.size() != params.size() ||
        grad.size() != params.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    if (!grad.allFinite()) throw std::invalid_argument("adam_step: non-finite gradient");
    state.step += 1;
    state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grad;
    state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(hyper.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, double(state.step));
    params.array() -= hyper.lr * (state.m.array() / bc1) /
                      ((state.v.array() / bc2).sqrt() + hyper.eps);
}

TrainResult train(const TrainConfig& config, const BridgeProblem& problem, const TrainHooks& hooks,
                  std::optional<NetworkParams> warm_start) {
    config.validate();
    NetworkSpec spec = config.network;
    spec.x_lo = config.x_lo;
    spec.x_hi = config.x_hi;
    spec.t_final = config.t_final;

    TrainResult result;
    if (warm_start) {
        result.params = std::move(*warm_start);
        if (result.params.theta.size() != Eigen::Index(result.params.spec.parameter_count()))
            throw std::invalid_argument("train: warm start does not match its spec");
    } else {
        result.params = init_network(spec);
    }
    result.collocation = sample_collocation(config);

    AdamState adam = AdamState::zeros(result.params.theta.size());
    NetworkParams last_good = result.params;
    GradientOptions gopts;
    gopts.threads = config.threads;
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    int rar_round = 0;
    bool have_final = false;
    for (long epoch = 1; epoch <= config.epochs; ++epoch) {
        LossEvaluation eval;
        try {
            eval = total_loss_gradient(result.params, result.collocation, problem, config.weights, gopts);
        } catch (const NonFiniteError& e) {
            throw TrainingDiverged(std::string("training diverged at epoch ") +
                                       std::to_string(epoch) + ": " + e.what(),
                                   last_good, epoch);
        }
        HistoryRow row{epoch, eval.breakdown, elapsed()};
        result.history.push_back(row);
        if (hooks.on_epoch) hooks.on_epoch(row);

        if (epoch >= config.min_epochs && eval.breakdown.max_term() < config.residual_target) {
            result.stopped_early = true;
            result.final_losses = eval.breakdown;
            have_final = true;
            break;
        }
        if (!eval.grad.allFinite())
            throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                                       ": non-finite gradient",
                                   last_good, epoch);
        last_good = result.params;
        adam_step(adam, result.params.theta, eval.grad, config.adam);
        if (!result.params.all_finite())
            throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                                       ": non-finite parameters",
                                   last_good, epoch);

        if (config.rar.enabled && epoch % config.rar.period == 0 && epoch < config.epochs)
            result.collocation =
                adaptive_refine(result.params, config, result.collocation, problem, rar_round++);
        if (hooks.on_checkpoint && config.checkpoint_every > 0 &&
            epoch % config.checkpoint_every == 0 && epoch < config.epochs)
            hooks.on_checkpoint(result.params, row);
    }
    if (!have_final) result.final_losses = total_loss(result.params, result.collocation, problem);
    if (hooks.on_checkpoint) {
        HistoryRow last{result.history.back().epoch, result.final_losses, elapsed()};
        hooks.on_checkpoint(result.params, last);
    }
    return result;
}

}  // namespace sbpinn
