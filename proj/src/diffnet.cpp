#include "sbpinn/diffnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace sbpinn {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "identity" || name == "linear") return Activation::Identity;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(RhoTransform r) {
    switch (r) {
        case RhoTransform::Softplus: return "softplus";
        case RhoTransform::Identity: return "identity";
        case RhoTransform::Anchored: return "anchored";
    }
    return "unknown";
}

RhoTransform rho_transform_from_string(const std::string& name) {
    if (name == "softplus") return RhoTransform::Softplus;
    if (name == "identity") return RhoTransform::Identity;
    if (name == "anchored") return RhoTransform::Anchored;
    throw std::invalid_argument("unknown rho transform '" + name + "'");
}

void NetworkSpec::validate() const {
    if (hidden_layers < 0) throw std::invalid_argument("network: hidden_layers must be >= 0");
    if (hidden_layers > 0 && width < 1)
        throw std::invalid_argument("network: zero-width hidden layer");
    if (!(x_hi > x_lo)) throw std::invalid_argument("network: x_hi must exceed x_lo");
    if (!(t_final > 0.0)) throw std::invalid_argument("network: t_final must be positive");
    for (double s : output_scale)
        if (!std::isfinite(s) || s == 0.0)
            throw std::invalid_argument("network: output scales must be finite and nonzero");
    if (rho_transform == RhoTransform::Anchored) {
        anchor_initial.validate();
        anchor_terminal.validate();
    }
}

InputScaling NetworkSpec::input_scaling() const {
    InputScaling s;
    s.x_scale = 2.0 / (x_hi - x_lo);
    s.x_shift = -1.0 - s.x_scale * x_lo;
    s.t_scale = 1.0 / t_final;
    return s;
}

std::vector<int> NetworkSpec::layer_sizes() const {
    std::vector<int> sizes{2};
    for (int i = 0; i < hidden_layers; ++i) sizes.push_back(width);
    sizes.push_back(3);
    return sizes;
}

std::vector<LayerSlice> layer_slices(const NetworkSpec& spec) {
    const auto sizes = spec.layer_sizes();
    std::vector<LayerSlice> out;
    Index offset = 0;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        LayerSlice s;
        s.n_in = sizes[k];
        s.n_out = sizes[k + 1];
        s.w_offset = offset;
        offset += Index(s.n_in) * s.n_out;
        s.b_offset = offset;
        offset += s.n_out;
        out.push_back(s);
    }
    return out;
}

std::size_t NetworkSpec::parameter_count() const {
    std::size_t n = 0;
    for (const auto& s : layer_slices(*this)) n += std::size_t(s.n_in) * s.n_out + s.n_out;
    return n;
}

bool NetworkParams::all_finite() const { return theta.allFinite(); }

NetworkParams init_network(const NetworkSpec& spec) {
    spec.validate();
    NetworkParams p;
    p.spec = spec;
    p.theta = VectorXd::Zero(static_cast<Index>(spec.parameter_count()));
    std::mt19937_64 rng(spec.seed);
    for (const auto& s : layer_slices(spec)) {
        const double r = std::sqrt(6.0 / double(s.n_in + s.n_out));
        std::uniform_real_distribution<double> dist(-r, r);
        for (Index i = 0; i < Index(s.n_in) * s.n_out; ++i) p.theta[s.w_offset + i] = dist(rng);
    }
    return p;
}

namespace {

constexpr Index kChunk = 256;

// Jets of m points stacked column-wise: [value | d/dx | d/dt | d2/dx2], or
// just [value] in value-only mode.
struct HiddenTape {
    MatrixXd input;  // layer input jets
    MatrixXd z;      // pre-activation jets
    ArrayXXd h;      // activation value (n_out x m)
};

// Eigen 3.4 only vectorizes tanh for float; exp is vectorized for double.
ArrayXXd fast_tanh(const Eigen::Ref<const MatrixXd>& z) {
    return 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
}

struct Tape {
    std::vector<HiddenTape> hidden;
    MatrixXd last_input;
    MatrixXd y;  // raw output jets (3 x blocks*m)
    std::vector<SpaceTime> pts;
};

// Value and first two x-derivatives of the square root of a truncated normal density.
std::array<double, 3> sqrt_density_jet(const TruncNormSpec& d, double x) {
    if (x < d.lo || x > d.hi) return {0.0, 0.0, 0.0};
    const double r = std::sqrt(truncnorm_pdf(x, d));
    const double k = 0.5 / (d.sigma * d.sigma);
    const double z = (x - d.mu) * k;
    return {r, -z * r, (z * z - k) * r};
}

// Anchored transform: q = (1 - tau) sqrt(rho0) + tau sqrt(rhoT) + tau (1 - tau) z, rho = q^2.
struct AnchorJet {
    HeadJet q;
    double g = 0.0;   // tau (1 - tau)
    double gt = 0.0;  // dg/dt
};

AnchorJet anchor_jet(const NetworkSpec& spec, SpaceTime pt, double z, double zx, double zt, double zxx) {
    const double T = spec.t_final;
    const double tau = pt.t / T;
    AnchorJet a;
    a.g = tau * (1.0 - tau);
    a.gt = (1.0 - 2.0 * tau) / T;
    const auto r0 = sqrt_density_jet(spec.anchor_initial, pt.x);
    const auto r1 = sqrt_density_jet(spec.anchor_terminal, pt.x);
    a.q = {(1.0 - tau) * r0[0] + tau * r1[0] + a.g * z, (1.0 - tau) * r0[1] + tau * r1[1] + a.g * zx,
           (r1[0] - r0[0]) / T + a.gt * z + a.g * zt, (1.0 - tau) * r0[2] + tau * r1[2] + a.g * zxx};
    return a;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

class JetEvaluator {
public:
    JetEvaluator(const NetworkParams& params, JetOrder order)
        : params_(params), slices_(layer_slices(params.spec)), order_(order),
          scaling_(params.spec.input_scaling()) {}

    int blocks() const { return order_ == JetOrder::Full ? 4 : 1; }

    Eigen::Map<const MatrixXd> weight(const LayerSlice& s) const {
        return {params_.theta.data() + s.w_offset, s.n_out, s.n_in};
    }
    Eigen::Map<const VectorXd> bias(const LayerSlice& s) const {
        return {params_.theta.data() + s.b_offset, s.n_out};
    }

    void forward(std::span<const SpaceTime> pts, Tape& tape) const {
        tape.pts.assign(pts.begin(), pts.end());
        const Index m = Index(pts.size());
        const int nb = blocks();
        MatrixXd a = MatrixXd::Zero(2, nb * m);
        for (Index j = 0; j < m; ++j) {
            a(0, j) = scaling_.x_scale * pts[j].x + scaling_.x_shift;
            a(1, j) = scaling_.t_scale * pts[j].t;
        }
        if (nb == 4) {
            a.block(0, m, 1, m).setConstant(scaling_.x_scale);
            a.block(1, 2 * m, 1, m).setConstant(scaling_.t_scale);
        }
        const bool tanh_act = params_.spec.activation == Activation::Tanh;
        tape.hidden.resize(slices_.size() - 1);
        for (std::size_t k = 0; k < slices_.size(); ++k) {
            const auto& s = slices_[k];
            MatrixXd z = weight(s) * a;
            z.leftCols(m).colwise() += bias(s);
            if (k + 1 == slices_.size()) {
                tape.last_input = std::move(a);
                tape.y = std::move(z);
                return;
            }
            HiddenTape& ht = tape.hidden[k];
            ht.input = std::move(a);
            if (tanh_act) {
                ht.h = fast_tanh(z.leftCols(m));
            } else {
                ht.h = z.leftCols(m).array();
            }
            a.resize(s.n_out, nb * m);
            a.leftCols(m) = ht.h.matrix();
            if (nb == 4) {
                if (tanh_act) {
                    const ArrayXXd s1 = 1.0 - ht.h.square();
                    const auto zx = z.middleCols(m, m).array();
                    a.middleCols(m, m) = (s1 * zx).matrix();
                    a.middleCols(2 * m, m) = (s1 * z.middleCols(2 * m, m).array()).matrix();
                    a.middleCols(3 * m, m) =
                        (s1 * (z.middleCols(3 * m, m).array() - 2.0 * ht.h * zx.square())).matrix();
                } else {
                    a.middleCols(m, 3 * m) = z.middleCols(m, 3 * m);
                }
            }
            ht.z = std::move(z);
        }
    }

    // Post-transform head jets from raw outputs.
    void heads(const Tape& tape, Index m, std::span<FieldJet> out) const {
        const auto& sc = params_.spec.output_scale;
        const bool full = order_ == JetOrder::Full;
        for (Index j = 0; j < m; ++j) {
            auto raw = [&](int row, int blk) { return full || blk == 0 ? tape.y(row, blk * m + j) : 0.0; };
            FieldJet& f = out[j];
            f.psi = {sc[0] * raw(0, 0), sc[0] * raw(0, 1), sc[0] * raw(0, 2), sc[0] * raw(0, 3)};
            f.pi = {sc[2] * raw(2, 0), sc[2] * raw(2, 1), sc[2] * raw(2, 2), sc[2] * raw(2, 3)};
            const double z = sc[1] * raw(1, 0);
            const double zx = sc[1] * raw(1, 1);
            const double zt = sc[1] * raw(1, 2);
            const double zxx = sc[1] * raw(1, 3);
            if (params_.spec.rho_transform == RhoTransform::Identity) {
                f.rho = {z, zx, zt, zxx};
                continue;
            }
            if (params_.spec.rho_transform == RhoTransform::Anchored) {
                const HeadJet q = anchor_jet(params_.spec, tape.pts[j], z, zx, zt, zxx).q;
                f.rho = {q.value * q.value, 2.0 * q.value * q.d_dx, 2.0 * q.value * q.d_dt,
                         2.0 * (q.d_dx * q.d_dx + q.value * q.d_dxx)};
                continue;
            }
            const double sg = logistic(z);
            const double sg1 = sg * (1.0 - sg);
            f.rho = {softplus(z), sg * zx, sg * zt, sg1 * zx * zx + sg * zxx};
        }
    }

    // Reverse sweep; adds d(sum loss)/d theta into grad.
    void backward(const Tape& tape, std::span<const FieldJet> adj, VectorXd& grad) const {
        const Index m = Index(adj.size());
        const int nb = blocks();
        const auto& sc = params_.spec.output_scale;
        MatrixXd ybar = MatrixXd::Zero(3, nb * m);
        for (Index j = 0; j < m; ++j) {
            const FieldJet& g = adj[j];
            const double psi_bar[4] = {g.psi.value, g.psi.d_dx, g.psi.d_dt, g.psi.d_dxx};
            const double pi_bar[4] = {g.pi.value, g.pi.d_dx, g.pi.d_dt, g.pi.d_dxx};
            for (int blk = 0; blk < nb; ++blk) {
                ybar(0, blk * m + j) = sc[0] * psi_bar[blk];
                ybar(2, blk * m + j) = sc[2] * pi_bar[blk];
            }
            if (params_.spec.rho_transform == RhoTransform::Identity) {
                const double rho_bar[4] = {g.rho.value, g.rho.d_dx, g.rho.d_dt, g.rho.d_dxx};
                for (int blk = 0; blk < nb; ++blk) ybar(1, blk * m + j) = sc[1] * rho_bar[blk];
                continue;
            }
            if (params_.spec.rho_transform == RhoTransform::Anchored) {
                auto raw = [&](int blk) { return blk < nb ? sc[1] * tape.y(1, blk * m + j) : 0.0; };
                const auto a = anchor_jet(params_.spec, tape.pts[j], raw(0), raw(1), raw(2), raw(3));
                const HeadJet& q = a.q;
                const HeadJet& r = g.rho;
                if (nb == 1) {
                    ybar(1, j) = sc[1] * a.g * 2.0 * r.value * q.value;
                    continue;
                }
                const double qbar = 2.0 * (r.value * q.value + r.d_dx * q.d_dx + r.d_dt * q.d_dt +
                                           r.d_dxx * q.d_dxx);
                const double qbar_x = 2.0 * r.d_dx * q.value + 4.0 * r.d_dxx * q.d_dx;
                const double qbar_t = 2.0 * r.d_dt * q.value;
                const double qbar_xx = 2.0 * r.d_dxx * q.value;
                ybar(1, j) = sc[1] * (a.g * qbar + a.gt * qbar_t);
                ybar(1, m + j) = sc[1] * a.g * qbar_x;
                ybar(1, 2 * m + j) = sc[1] * a.g * qbar_t;
                ybar(1, 3 * m + j) = sc[1] * a.g * qbar_xx;
                continue;
            }
            const double z = sc[1] * tape.y(1, j);
            const double sg = logistic(z);
            const double sg1 = sg * (1.0 - sg);
            if (nb == 1) {
                ybar(1, j) = sc[1] * g.rho.value * sg;
                continue;
            }
            const double sg2 = sg1 * (1.0 - 2.0 * sg);
            const double zx = sc[1] * tape.y(1, m + j);
            const double zt = sc[1] * tape.y(1, 2 * m + j);
            const double zxx = sc[1] * tape.y(1, 3 * m + j);
            const HeadJet& r = g.rho;
            ybar(1, j) = sc[1] * (r.value * sg + sg1 * (r.d_dx * zx + r.d_dt * zt) +
                                  r.d_dxx * (sg2 * zx * zx + sg1 * zxx));
            ybar(1, m + j) = sc[1] * (r.d_dx * sg + 2.0 * r.d_dxx * sg1 * zx);
            ybar(1, 2 * m + j) = sc[1] * r.d_dt * sg;
            ybar(1, 3 * m + j) = sc[1] * r.d_dxx * sg;
        }

        const bool tanh_act = params_.spec.activation == Activation::Tanh;
        MatrixXd zbar = std::move(ybar);
        for (Index k = Index(slices_.size()) - 1; k >= 0; --k) {
            const auto& s = slices_[k];
            const MatrixXd& input =
                (k + 1 == Index(slices_.size())) ? tape.last_input : tape.hidden[k].input;
            Eigen::Map<MatrixXd> wbar(grad.data() + s.w_offset, s.n_out, s.n_in);
            wbar.noalias() += zbar * input.transpose();
            grad.segment(s.b_offset, s.n_out) += zbar.leftCols(m).rowwise().sum();
            if (k == 0) break;

            MatrixXd hbar = weight(s).transpose() * zbar;
            const HiddenTape& ht = tape.hidden[k - 1];
            zbar.resize(hbar.rows(), hbar.cols());
            if (!tanh_act) {
                zbar = std::move(hbar);
                continue;
            }
            const ArrayXXd s1 = 1.0 - ht.h.square();
            if (nb == 1) {
                zbar = (hbar.array() * s1).matrix();
                continue;
            }
            // s1 = tanh', s2 = tanh'', s3 = tanh'''
            const ArrayXXd s2 = -2.0 * ht.h * s1;
            const ArrayXXd s3 = s1 * (4.0 * ht.h.square() - 2.0 * s1);
            const auto zx = ht.z.middleCols(m, m).array();
            const auto zt = ht.z.middleCols(2 * m, m).array();
            const auto zxx = ht.z.middleCols(3 * m, m).array();
            const auto hv = hbar.leftCols(m).array();
            const auto hx = hbar.middleCols(m, m).array();
            const auto ht_ = hbar.middleCols(2 * m, m).array();
            const auto hxx = hbar.middleCols(3 * m, m).array();
            zbar.leftCols(m) =
                (hv * s1 + s2 * (hx * zx + ht_ * zt) + hxx * (s3 * zx.square() + s2 * zxx)).matrix();
            zbar.middleCols(m, m) = (hx * s1 + 2.0 * hxx * s2 * zx).matrix();
            zbar.middleCols(2 * m, m) = (ht_ * s1).matrix();
            zbar.middleCols(3 * m, m) = (hxx * s1).matrix();
        }
    }

private:
    const NetworkParams& params_;
    std::vector<LayerSlice> slices_;
    JetOrder order_;
    InputScaling scaling_;
};

void require_finite(const NetworkParams& params) {
    if (params.theta.size() != Index(params.spec.parameter_count()))
        throw std::invalid_argument("network: parameter vector does not match its spec");
    if (!params.all_finite())
        throw NonFiniteError("network: non-finite parameters", SpaceTime{});
}

}  // namespace

std::vector<FieldJet> forward_jets(const NetworkParams& params, std::span<const SpaceTime> points,
                                   JetOrder order) {
    require_finite(params);
    JetEvaluator ev(params, order);
    std::vector<FieldJet> out(points.size());
    Tape tape;
    for (std::size_t start = 0; start < points.size(); start += kChunk) {
        const std::size_t m = std::min<std::size_t>(kChunk, points.size() - start);
        ev.forward(points.subspan(start, m), tape);
        ev.heads(tape, Index(m), std::span<FieldJet>(out).subspan(start, m));
    }
    return out;
}

FieldJet forward_jet(const NetworkParams& params, double x, double t) {
    if (!std::isfinite(x) || !std::isfinite(t))
        throw NonFiniteError("network: non-finite input", SpaceTime{x, t});
    const SpaceTime p{x, t};
    return forward_jets(params, std::span<const SpaceTime>(&p, 1)).front();
}

LossGradient loss_gradient(const NetworkParams& params, std::span<const SpaceTime> points,
                           const PointLoss& loss_fn, const GradientOptions& opts) {
    require_finite(params);
    const Index dim = params.theta.size();
    const std::size_t n = points.size();
    const std::size_t n_chunks = (n + kChunk - 1) / kChunk;

    std::vector<VectorXd> chunk_grad(n_chunks);
    std::vector<double> chunk_loss(n_chunks, 0.0);
    std::vector<double> loss(n, 0.0);
    std::vector<FieldJet> jets(n);
    std::vector<FieldJet> adj(n);

    auto run_chunk = [&](std::size_t c) {
        JetEvaluator ev(params, opts.order);
        Tape tape;
        const std::size_t start = c * kChunk;
        const std::size_t m = std::min<std::size_t>(kChunk, n - start);
        auto pts = points.subspan(start, m);
        auto jet_span = std::span<FieldJet>(jets).subspan(start, m);
        auto adj_span = std::span<FieldJet>(adj).subspan(start, m);
        auto loss_span = std::span<double>(loss).subspan(start, m);
        ev.forward(pts, tape);
        ev.heads(tape, Index(m), jet_span);
        std::fill(adj_span.begin(), adj_span.end(), FieldJet{});
        loss_fn(pts, jet_span, loss_span, adj_span);
        double sum = 0.0;
        for (double l : loss_span) sum += l;
        chunk_loss[c] = sum;
        chunk_grad[c] = VectorXd::Zero(dim);
        if (std::isfinite(sum)) ev.backward(tape, adj_span, chunk_grad[c]);
    };

    const int threads = std::max(1, std::min<int>(opts.threads, int(n_chunks)));
    if (threads == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t c = std::size_t(w); c < n_chunks; c += std::size_t(threads))
                    run_chunk(c);
            });
    }

    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(loss[i]))
            throw NonFiniteError("loss: non-finite value at collocation point (x=" +
                                     std::to_string(points[i].x) +
                                     ", t=" + std::to_string(points[i].t) + ")",
                                 points[i]);

    LossGradient out;
    out.grad = VectorXd::Zero(dim);
    for (std::size_t c = 0; c < n_chunks; ++c) {
        out.loss += chunk_loss[c];
        out.grad += chunk_grad[c];
    }
    return out;
}

}  // namespace sbpinn
