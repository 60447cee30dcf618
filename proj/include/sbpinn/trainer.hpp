#pragma once

// Collocation sampling, residual-based adaptive refinement, Adam and the
// full-batch training loop. One epoch is one full-batch Adam step.

#include "sbpinn/collocation.hpp"
#include "sbpinn/diffnet.hpp"
#include "sbpinn/residuals.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sbpinn {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct RarSettings {
    bool enabled = true;
    int period = 1000;
    int pool = 2000;
    int add = 50;
};

struct TrainConfig {
    NetworkSpec network;
    int n_interior = 5000;
    int n_initial = 1000;
    int n_terminal = 1000;
    int n_wall = 0;  // points on the walls x = x_lo, x_hi; 0 disables the wall term
    int epochs = 15000;
    AdamHyper adam;
    RarSettings rar;
    std::uint64_t seed = 1234;
    double x_lo = 0.0;
    double x_hi = 6.0;
    double t_final = 200.0;
    double residual_target = 1e-3;
    // Early stopping is only considered from this epoch on.
    int min_epochs = 0;
    LossWeights weights;
    int checkpoint_every = 1000;
    int threads = 1;

    void validate() const;
};

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step = 0;

    static AdamState zeros(Eigen::Index n);
};

struct HistoryRow {
    long epoch = 0;
    LossBreakdown losses;
    double wall_seconds = 0.0;
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& what, NetworkParams last_good, long epoch)
        : std::runtime_error(what), last_good(std::move(last_good)), epoch(epoch) {}
    NetworkParams last_good;
    long epoch;
};

CollocationSet sample_collocation(const TrainConfig& config);

/// Scores a fresh uniform interior pool by the summed PDE residual magnitude
/// and appends the top `add` candidates to the interior group. `round`
/// selects the pool's random stream.
CollocationSet adaptive_refine(const NetworkParams& params, const TrainConfig& config,
                               const CollocationSet& current, const BridgeProblem& problem,
                               int round);

/// Pool scored by adaptive_refine for a given round (exposed for checking).
std::vector<SpaceTime> refinement_pool(const TrainConfig& config, int round);
double refinement_score(const PdeResiduals& r, const LossWeights& w);

/// Bias-corrected Adam update, in place.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               const AdamHyper& hyper);

struct TrainHooks {
    // Called after every epoch with the losses evaluated at the parameters
    // that step was taken from.
    std::function<void(const HistoryRow&)> on_epoch;
    // Periodic and final checkpoint sink.
    std::function<void(const NetworkParams&, const HistoryRow&)> on_checkpoint;
};

struct TrainResult {
    NetworkParams params;
    std::vector<HistoryRow> history;
    CollocationSet collocation;
    LossBreakdown final_losses;  // at the returned parameters
    bool stopped_early = false;
};

TrainResult train(const TrainConfig& config, const BridgeProblem& problem,
                  const TrainHooks& hooks = {}, std::optional<NetworkParams> warm_start = {});

}  // namespace sbpinn
