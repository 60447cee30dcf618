#pragma once

// Fully-connected approximant (x, t) -> (psi, rho, pi) with exact input
// derivatives and parameter gradients.
//
// Each layer propagates a jet (value, d/dx, d/dt, d2/dx2) forward in closed
// form. Parameter gradients come from a reverse sweep over the whole jet
// computation, so a loss may depend on any output derivative.
//
// Parameter layout: for every layer, W (n_out x n_in, column-major) followed
// by b (n_out). Layers run input -> hidden... -> output.

#include "sbpinn/prob.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbpinn {

enum class Activation { Tanh, Identity };

/// Map applied to the raw rho output z.
///   Softplus: rho = log(1 + e^z)
///   Identity: rho = z
///   Anchored: rho = q^2, q = (1 - tau) sqrt(rho0(x)) + tau sqrt(rhoT(x)) + tau (1 - tau) z,
///             tau = t / t_final. Nonnegative, and exact at t = 0 and t = T.
enum class RhoTransform { Softplus, Identity, Anchored };

std::string to_string(RhoTransform r);
RhoTransform rho_transform_from_string(const std::string& name);

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Affine input map: xs = x_scale * x + x_shift, ts = t_scale * t.
struct InputScaling {
    double x_scale = 1.0;
    double x_shift = 0.0;
    double t_scale = 1.0;
};

struct NetworkSpec {
    int hidden_layers = 3;
    int width = 70;
    Activation activation = Activation::Tanh;
    // Domain used for the default input map [x_lo, x_hi] -> [-1, 1], [0, t_final] -> [0, 1].
    double x_lo = 0.0;
    double x_hi = 6.0;
    double t_final = 200.0;
    // Fixed multipliers on the raw (psi, rho, pi) outputs, applied before the
    // rho positivity transform. Not trained.
    std::array<double, 3> output_scale{1.0, 1.0, 1.0};
    RhoTransform rho_transform = RhoTransform::Softplus;
    // End densities used by the Anchored transform.
    TruncNormSpec anchor_initial = default_rho0();
    TruncNormSpec anchor_terminal = default_rhoT();
    std::uint64_t seed = 1234;

    void validate() const;
    InputScaling input_scaling() const;
    std::size_t parameter_count() const;
    /// Layer widths including the 2 inputs and 3 outputs.
    std::vector<int> layer_sizes() const;
};

struct NetworkParams {
    NetworkSpec spec;
    Eigen::VectorXd theta;

    std::size_t size() const { return static_cast<std::size_t>(theta.size()); }
    bool all_finite() const;
};

/// Offsets of layer k's weight block and bias block inside theta.
struct LayerSlice {
    int n_in = 0;
    int n_out = 0;
    Eigen::Index w_offset = 0;
    Eigen::Index b_offset = 0;
};
std::vector<LayerSlice> layer_slices(const NetworkSpec& spec);

struct HeadJet {
    double value = 0.0;
    double d_dx = 0.0;
    double d_dt = 0.0;
    double d_dxx = 0.0;
};

struct FieldJet {
    HeadJet psi;
    HeadJet rho;
    HeadJet pi;
};

struct SpaceTime {
    double x = 0.0;
    double t = 0.0;
    bool operator==(const SpaceTime&) const = default;
};

enum class JetOrder { Value, Full };

class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(const std::string& what, SpaceTime where)
        : std::runtime_error(what), point(where) {}
    SpaceTime point;
};

/// Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)), zero biases.
NetworkParams init_network(const NetworkSpec& spec);

FieldJet forward_jet(const NetworkParams& params, double x, double t);
std::vector<FieldJet> forward_jets(const NetworkParams& params, std::span<const SpaceTime> points,
                                   JetOrder order = JetOrder::Full);

/// Per-point loss: fills loss[i] and the adjoint d loss[i] / d jets[i] for
/// every point. Adjoint entries the loss does not depend on must be zero.
using PointLoss = std::function<void(std::span<const SpaceTime> points,
                                     std::span<const FieldJet> jets, std::span<double> loss,
                                     std::span<FieldJet> adjoint)>;

struct GradientOptions {
    JetOrder order = JetOrder::Full;
    // Worker threads; chunk results are reduced in a fixed order so the
    // output does not depend on this value.
    int threads = 1;
};

struct LossGradient {
    double loss = 0.0;
    Eigen::VectorXd grad;
};

/// Sum of per-point losses over the batch and its exact gradient w.r.t. theta.
LossGradient loss_gradient(const NetworkParams& params, std::span<const SpaceTime> points,
                           const PointLoss& loss_fn, const GradientOptions& opts = {});

}  // namespace sbpinn
