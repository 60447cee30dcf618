#include "sbpinn/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sbpinn {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string raw(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw CheckpointError("checkpoint: truncated file");
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const NetworkParams& params) {
    const NetworkSpec& s = params.spec;
    std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(s.hidden_layers));
    put_u32(out, static_cast<std::uint32_t>(s.width));
    put_u32(out, s.activation == Activation::Tanh ? 0u : 1u);
    put_f64(out, s.x_lo);
    put_f64(out, s.x_hi);
    put_f64(out, s.t_final);
    for (double v : s.output_scale) put_f64(out, v);
    put_u32(out, static_cast<std::uint32_t>(s.rho_transform));
    for (const TruncNormSpec* d : {&s.anchor_initial, &s.anchor_terminal})
        for (double v : {d->mu, d->sigma, d->lo, d->hi}) put_f64(out, v);
    put_u64(out, s.seed);
    put_u64(out, static_cast<std::uint64_t>(params.theta.size()));
    for (Eigen::Index i = 0; i < params.theta.size(); ++i) put_f64(out, params.theta[i]);
    return out;
}

NetworkParams decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (r.raw(8) != std::string(kCheckpointMagic, 8))
        throw CheckpointError("checkpoint: bad magic (not a checkpoint file)");
    const auto version = r.u32();
    if (version != kCheckpointVersion)
        throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version));
    NetworkParams p;
    p.spec.hidden_layers = static_cast<int>(r.u32());
    p.spec.width = static_cast<int>(r.u32());
    const auto act = r.u32();
    if (act > 1) throw CheckpointError("checkpoint: unknown activation code");
    p.spec.activation = act == 0 ? Activation::Tanh : Activation::Identity;
    p.spec.x_lo = r.f64();
    p.spec.x_hi = r.f64();
    p.spec.t_final = r.f64();
    for (double& v : p.spec.output_scale) v = r.f64();
    const auto rho = r.u32();
    if (rho > 2) throw CheckpointError("checkpoint: unknown rho transform code");
    p.spec.rho_transform = static_cast<RhoTransform>(rho);
    for (TruncNormSpec* d : {&p.spec.anchor_initial, &p.spec.anchor_terminal}) {
        d->mu = r.f64();
        d->sigma = r.f64();
        d->lo = r.f64();
        d->hi = r.f64();
    }
    p.spec.seed = r.u64();
    try {
        p.spec.validate();
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("checkpoint: invalid network spec: ") + e.what());
    }
    const auto count = r.u64();
    if (count != p.spec.parameter_count())
        throw CheckpointError("checkpoint: parameter count does not match network shape");
    p.theta.resize(static_cast<Eigen::Index>(count));
    for (Eigen::Index i = 0; i < p.theta.size(); ++i) p.theta[i] = r.f64();
    if (!r.at_end()) throw CheckpointError("checkpoint: trailing bytes");
    return p;
}

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params) {
    const std::string bytes = encode_checkpoint(params);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw CheckpointError("checkpoint: cannot write " + tmp.string());
        f.write(bytes.data(), std::streamsize(bytes.size()));
        if (!f) throw CheckpointError("checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("checkpoint: cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return decode_checkpoint(ss.str());
}

void save_checkpoint_meta(const std::filesystem::path& path, const CheckpointMeta& meta) {
    nlohmann::ordered_json j;
    j["epoch"] = meta.epoch;
    j["seed"] = meta.seed;
    j["wall_seconds"] = meta.wall_seconds;
    j["losses"] = {{"L_psi", meta.losses.L_psi},   {"L_rho", meta.losses.L_rho},
                   {"L_pi", meta.losses.L_pi},     {"L_rho0", meta.losses.L_rho0},
                   {"L_rhoT", meta.losses.L_rhoT}, {"L_wall", meta.losses.L_wall},
                   {"total", meta.losses.total}};
    if (!meta.note.empty()) j["note"] = meta.note;
    std::ofstream f(path);
    if (!f) throw CheckpointError("checkpoint: cannot write " + path.string());
    f << j.dump(2) << "\n";
}

CheckpointMeta load_checkpoint_meta(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw CheckpointError("checkpoint: cannot open " + path.string());
    const auto j = nlohmann::json::parse(f);
    CheckpointMeta m;
    m.epoch = j.at("epoch").get<long>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.wall_seconds = j.value("wall_seconds", 0.0);
    const auto& l = j.at("losses");
    m.losses = {l.at("L_psi"), l.at("L_rho"), l.at("L_pi"), l.at("L_rho0"), l.at("L_rhoT"),
                l.value("L_wall", 0.0), l.at("total")};
    m.note = j.value("note", std::string{});
    return m;
}

}  // namespace sbpinn
