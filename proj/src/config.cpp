#include "sbpinn/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace sbpinn {

namespace {

struct Field {
    std::string section;
    std::string key;
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;  // throws std::invalid_argument
};

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("not a number");
    return v;
}

template <class Int>
Int parse_int(const std::string& s) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::invalid_argument("not an integer");
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument("expected true or false");
}

Field num(std::string sec, std::string key, double& ref) {
    return {std::move(sec), std::move(key), [&ref] { return fmt_double(ref); },
            [&ref](const std::string& s) { ref = parse_double(s); }};
}

Field integer(std::string sec, std::string key, int& ref) {
    return {std::move(sec), std::move(key), [&ref] { return std::to_string(ref); },
            [&ref](const std::string& s) { ref = parse_int<int>(s); }};
}

Field flag(std::string sec, std::string key, bool& ref) {
    return {std::move(sec), std::move(key), [&ref] { return std::string(ref ? "true" : "false"); },
            [&ref](const std::string& s) { ref = parse_bool(s); }};
}

std::vector<Field> bind(RunConfig& c) {
    auto& L = c.landscape;
    auto& N = c.train.network;
    auto& T = c.train;
    std::vector<Field> f{
        num("landscape", "a", L.a),
        num("landscape", "b", L.b),
        num("landscape", "c", L.c),
        num("landscape", "d", L.d),
        num("landscape", "f", L.f),
        num("landscape", "k_B", L.k_B),
        num("landscape", "theta", L.theta),
        num("problem", "x_lo", T.x_lo),
        num("problem", "x_hi", T.x_hi),
        num("problem", "t_final", T.t_final),
        num("problem", "rho0_mu", c.rho0.mu),
        num("problem", "rho0_sigma", c.rho0.sigma),
        num("problem", "rhoT_mu", c.rhoT.mu),
        num("problem", "rhoT_sigma", c.rhoT.sigma),
        integer("network", "hidden_layers", N.hidden_layers),
        integer("network", "width", N.width),
        {"network", "activation", [&N] { return to_string(N.activation); },
         [&N](const std::string& s) { N.activation = activation_from_string(s); }},
        {"network", "rho_transform", [&N] { return to_string(N.rho_transform); },
         [&N](const std::string& s) { N.rho_transform = rho_transform_from_string(s); }},
        num("network", "psi_scale", N.output_scale[0]),
        num("network", "rho_scale", N.output_scale[1]),
        num("network", "pi_scale", N.output_scale[2]),
        integer("train", "epochs", T.epochs),
        integer("train", "n_interior", T.n_interior),
        integer("train", "n_initial", T.n_initial),
        integer("train", "n_terminal", T.n_terminal),
        integer("train", "n_wall", T.n_wall),
        num("train", "lr", T.adam.lr),
        num("train", "beta1", T.adam.beta1),
        num("train", "beta2", T.adam.beta2),
        num("train", "eps", T.adam.eps),
        flag("train", "rar", T.rar.enabled),
        integer("train", "rar_period", T.rar.period),
        integer("train", "rar_pool", T.rar.pool),
        integer("train", "rar_add", T.rar.add),
        num("train", "residual_target", T.residual_target),
        integer("train", "min_epochs", T.min_epochs),
        num("train", "w_psi", T.weights.psi),
        num("train", "w_rho", T.weights.rho),
        num("train", "w_pi", T.weights.pi),
        num("train", "w_rho0", T.weights.rho0),
        num("train", "w_rhoT", T.weights.rhoT),
        num("train", "w_wall", T.weights.wall),
        integer("train", "checkpoint_every", T.checkpoint_every),
        integer("train", "threads", T.threads),
        integer("sample", "n", c.sample.n),
        num("sample", "proposal_sigma", c.sample.mh.proposal_sigma),
        integer("sample", "burn_in", c.sample.mh.burn_in),
        integer("sample", "thin", c.sample.mh.thin),
        num("simulate", "dt", c.sim.dt),
        {"simulate", "boundary", [&c] { return to_string(c.sim.boundary); },
         [&c](const std::string& s) { c.sim.boundary = boundary_mode_from_string(s); }},
        integer("kde", "grid_points", c.kde.grid_points),
        num("kde", "bandwidth", c.kde.bandwidth),
        integer("oracle", "nx", c.oracle.nx),
        num("oracle", "safety", c.oracle.safety),
        num("oracle", "policy_dt", c.oracle.policy_dt),
        integer("oracle", "store_every", c.oracle.store_every),
        num("verify", "w1_max", c.verify.w1_max),
        num("verify", "ks_max", c.verify.ks_max),
        num("verify", "oracle_l1_max", c.verify.oracle_l1_max),
        num("verify", "mass_drift_max", c.verify.mass_drift_max),
        integer("export", "nx", c.export_grid.nx),
        integer("export", "nt", c.export_grid.nt),
        {"run", "seed", [&c] { return std::to_string(c.seed); },
         [&c](const std::string& s) { c.seed = parse_int<std::uint64_t>(s); }},
        {"run", "out", [&c] { return c.out_dir.string(); },
         [&c](const std::string& s) { c.out_dir = s; }},
        flag("run", "deterministic", c.deterministic),
    };
    return f;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void RunConfig::sync() {
    train.seed = seed;
    train.network.seed = seed;
    train.network.x_lo = train.x_lo;
    train.network.x_hi = train.x_hi;
    train.network.t_final = train.t_final;
    rho0.lo = rhoT.lo = train.x_lo;
    rho0.hi = rhoT.hi = train.x_hi;
    train.network.anchor_initial = rho0;
    train.network.anchor_terminal = rhoT;
    sim.n_paths = sample.n;
    sim.T = train.t_final;
    sim.x_lo = train.x_lo;
    sim.x_hi = train.x_hi;
    sim.seed = seed + 2;
    if (deterministic) train.threads = 1;
}

void RunConfig::validate() const {
    landscape.validate();
    rho0.validate();
    rhoT.validate();
    train.validate();
    sim.validate();
    if (sample.n < 2) throw std::invalid_argument("sample: n must be >= 2");
    if (!(sample.mh.proposal_sigma > 0.0) || sample.mh.burn_in < 0 || sample.mh.thin < 1)
        throw std::invalid_argument("sample: need proposal_sigma > 0, burn_in >= 0, thin >= 1");
    if (kde.grid_points < 2 || kde.bandwidth < 0.0)
        throw std::invalid_argument("kde: need grid_points >= 2 and bandwidth >= 0");
    if (oracle.nx < 16 || !(oracle.safety > 0.0 && oracle.safety <= 1.0) || !(oracle.policy_dt > 0.0) ||
        oracle.store_every < 0)
        throw std::invalid_argument("oracle: need nx >= 16, safety in (0, 1], policy_dt > 0");
    if (export_grid.nx < 2 || export_grid.nt < 2)
        throw std::invalid_argument("export: grid needs at least 2 x 2 points");
}

BridgeProblem RunConfig::problem() const {
    BridgeProblem p;
    p.landscape = Landscape(landscape);
    p.rho0 = rho0;
    p.rhoT = rhoT;
    p.t_final = train.t_final;
    return p;
}

std::string RunConfig::dump() const {
    auto copy = *this;
    std::ostringstream out;
    std::string section;
    for (const auto& f : bind(copy)) {
        if (f.section != section) {
            if (!section.empty()) out << "\n";
            section = f.section;
            out << "[" << section << "]\n";
        }
        out << f.key << " = " << f.get() << "\n";
    }
    return out.str();
}

// The output directory does not change results, so it is left out of the hash.
std::string RunConfig::hash() const {
    auto copy = *this;
    copy.out_dir.clear();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : copy.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(std::string_view text, const std::string& source) {
    RunConfig cfg;
    auto fields = bind(cfg);
    std::map<std::string, Field*> index;
    for (auto& f : fields) index[f.section + "." + f.key] = &f;

    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    auto fail = [&](const std::string& msg, const std::string& field = {}) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": " + msg, line_no, field);
    };
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("malformed section header '" + line + "'");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value', got '" + line + "'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        const std::string name = section + "." + key;
        const auto it = index.find(name);
        if (it == index.end()) fail("unknown setting '" + name + "'", name);
        if (value.empty()) fail("empty value for '" + name + "'", name);
        try {
            it->second->set(value);
        } catch (const std::exception& e) {
            fail("bad value '" + value + "' for '" + name + "': " + e.what(), name);
        }
    }
    cfg.sync();
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(source + ": invalid configuration: " + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path.string());
}

}  // namespace sbpinn
