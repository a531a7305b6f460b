#include "aeat/io/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <variant>

namespace aeat::io {

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

struct Range {
    double lo = -INFINITY;
    double hi = INFINITY;
    bool lo_open = false;
    bool hi_open = false;

    bool ok(double v) const {
        return (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
    }
    std::string text() const {
        std::ostringstream s;
        s << (lo_open ? '(' : '[') << lo << ", " << hi << (hi_open ? ')' : ']');
        return s.str();
    }
};

const Range kAny{};
const Range kPositive{0.0, INFINITY, true, false};
const Range kNonNeg{0.0, INFINITY, false, false};
const Range kUnit{0.0, 1.0, false, false};
const Range kUnitOpenLow{0.0, 1.0, true, false};

using Target = std::variant<double*, std::size_t*, int*, bool*, std::vector<double>*,
                            channel::CoherenceVariant*>;

struct Field {
    std::string path;
    Target target;
    Range range;
};

std::vector<Field> fields(ExperimentConfig& c) {
    auto& k = c.channel.consts;
    auto& r = c.channel.ranges;
    auto& m = c.model;
    auto& t = c.train;
    auto& q = c.dqn;
    auto& e = c.eval;
    return {
        {"channel.eta_e", &k.eta_e, kPositive},
        {"channel.sigma_w2", &k.sigma_w2, kPositive},
        {"channel.wavelength", &k.wavelength, kPositive},
        {"channel.r_a", &k.r_a, kPositive},
        {"channel.w_oz", &k.w_oz, kPositive},
        {"channel.theta_fov", &k.theta_fov, kPositive},
        {"channel.alpha", &k.alpha, kPositive},
        {"channel.beta", &k.beta, {1, 64}},
        {"channel.b0", &k.b0, kPositive},
        {"channel.rho_malaga", &k.rho_malaga, kUnit},
        {"channel.Omega", &k.Omega, kPositive},
        {"channel.phase_diff", &k.phase_diff, kAny},
        {"channel.coherence", &c.channel.coherence, kAny},
        {"channel.table_nodes", &c.channel.table_nodes, {16, 1e7}},
        {"channel.table_h_min", &c.channel.table_h_min, kPositive},
        {"channel.table_h_max", &c.channel.table_h_max, kPositive},
        {"channel.Z_min", &r.Z_min, kPositive},
        {"channel.Z_max", &r.Z_max, kPositive},
        {"channel.V_min", &r.V_min, kPositive},
        {"channel.V_max", &r.V_max, kPositive},
        {"channel.sigma_s_min", &r.sigma_s_min, kPositive},
        {"channel.sigma_s_max", &r.sigma_s_max, kPositive},
        {"channel.sigma_a_min", &r.sigma_a_min, kPositive},
        {"channel.sigma_a_max", &r.sigma_a_max, kPositive},
        {"channel.calibration_draws", &c.calibration_draws, {1000, 1e9}},
        {"model.T", &m.T, {1, 4096}},
        {"model.d", &m.d, {1, 4096}},
        {"model.heads", &m.heads, {1, 256}},
        {"model.layers", &m.layers, {1, 16}},
        {"model.d_in", &m.d_in, {1, 4096}},
        {"model.ffn_mult", &m.ffn_mult, {1, 64}},
        {"model.positional", &m.positional, kAny},
        {"model.env_conditioning", &m.env_conditioning, kAny},
        {"train_ae.batch_size", &t.batch_size, {1, 1e6}},
        {"train_ae.epochs", &t.epochs, {1, 1e6}},
        {"train_ae.steps_per_epoch", &t.steps_per_epoch, {1, 1e9}},
        {"train_ae.lr", &t.lr, kPositive},
        {"train_ae.lr_min", &t.lr_min, kNonNeg},
        {"train_ae.train_snr_db", &t.train_snr_db, {-100, 100}},
        {"train_ae.lambda_bce", &t.lambda_bce, kNonNeg},
        {"train_ae.weight_decay", &t.weight_decay, kNonNeg},
        {"train_ae.grad_chunks", &t.grad_chunks, {1, 4096}},
        {"train_ae.noiseless", &t.noiseless, kAny},
        {"dqn.hidden", &q.hidden, {1, 1e5}},
        {"dqn.lr", &q.lr, kPositive},
        {"dqn.lr_min", &q.lr_min, kNonNeg},
        {"dqn.gamma", &q.gamma, kUnitOpenLow},
        {"dqn.tau", &q.tau, kUnitOpenLow},
        {"dqn.eps_init", &q.eps_init, kUnit},
        {"dqn.eps_min", &q.eps_min, kUnit},
        {"dqn.eps_decay", &q.eps_decay, kUnitOpenLow},
        {"dqn.replay_capacity", &q.replay_capacity, {1, 1e9}},
        {"dqn.batch", &q.batch, {1, 1e6}},
        {"dqn.learn_start", &q.learn_start, {1, 1e9}},
        {"dqn.per_alpha", &q.per_alpha, kUnit},
        {"dqn.per_beta", &q.per_beta, kUnit},
        {"dqn.lambda_mse", &q.lambda_mse, kNonNeg},
        {"dqn.lambda_layer", &q.lambda_layer, kNonNeg},
        {"dqn.episodes", &q.episodes, {1, 1e9}},
        {"dqn.blocks_per_episode", &q.blocks_per_episode, {1, 1e6}},
        {"dqn.snr_grid", &q.snr_grid, {-100, 100}},
        {"dqn.change_threshold", &q.change_threshold, kNonNeg},
        {"eval.snr_grid", &e.snr_grid, {-100, 100}},
        {"eval.n_bits", &e.n_bits, {1, 1e15}},
        {"eval.group_blocks", &e.group_blocks, {1, 1e6}},
        {"eval.hard_transmit", &e.hard_transmit, kAny},
        {"eval.image_snr_db", &e.image_snr_db, {-100, 100}},
        {"eval.timing_bits", &e.timing_bits, {1, 1e15}},
    };
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& path, const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last || !std::isfinite(v)) {
        throw ConfigError(path + ": expected a number, got '" + text + "'");
    }
    return v;
}

void check_range(const std::string& path, double v, const Range& r) {
    if (!r.ok(v)) {
        std::ostringstream s;
        s << path << ": value " << v << " out of range " << r.text();
        throw ConfigError(s.str());
    }
}

double parse_integer(const std::string& path, const std::string& text, const Range& r) {
    const double v = parse_number(path, text);
    if (v != std::floor(v) || v < 0) throw ConfigError(path + ": expected a non-negative integer, got '" + text + "'");
    check_range(path, v, r);
    return v;
}

void assign(const Field& f, const std::string& text) {
    const std::string& path = f.path;
    std::visit(
        [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, double>) {
                const double v = parse_number(path, text);
                check_range(path, v, f.range);
                *p = v;
            } else if constexpr (std::is_same_v<T, std::size_t>) {
                *p = static_cast<T>(parse_integer(path, text, f.range));
            } else if constexpr (std::is_same_v<T, int>) {
                *p = static_cast<int>(parse_integer(path, text, f.range));
            } else if constexpr (std::is_same_v<T, bool>) {
                if (text == "true") {
                    *p = true;
                } else if (text == "false") {
                    *p = false;
                } else {
                    throw ConfigError(path + ": expected true or false, got '" + text + "'");
                }
            } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                std::vector<double> out;
                std::stringstream ss(text);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    const double v = parse_number(path, trim(item));
                    check_range(path, v, f.range);
                    out.push_back(v);
                }
                if (out.empty()) throw ConfigError(path + ": list must not be empty");
                *p = out;
            } else {
                if (text == "standard_k") {
                    *p = channel::CoherenceVariant::standard_k;
                } else if (text == "paper_lambda") {
                    *p = channel::CoherenceVariant::paper_lambda;
                } else {
                    throw ConfigError(path + ": expected standard_k or paper_lambda, got '" + text + "'");
                }
            }
        },
        f.target);
}

std::string render(const Target& t) {
    return std::visit(
        [](auto* p) -> std::string {
            using T = std::remove_pointer_t<decltype(p)>;
            char buf[64];
            if constexpr (std::is_same_v<T, double>) {
                std::snprintf(buf, sizeof buf, "%.17g", *p);
                return buf;
            } else if constexpr (std::is_same_v<T, bool>) {
                return *p ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                std::string s;
                for (std::size_t i = 0; i < p->size(); ++i) {
                    std::snprintf(buf, sizeof buf, "%.17g", (*p)[i]);
                    s += (i ? ", " : "") + std::string(buf);
                }
                return s;
            } else if constexpr (std::is_same_v<T, channel::CoherenceVariant>) {
                return *p == channel::CoherenceVariant::standard_k ? "standard_k" : "paper_lambda";
            } else {
                return std::to_string(*p);
            }
        },
        t);
}

void validate(ExperimentConfig& c) {
    auto wrap = [](const char* section, const std::function<void()>& f) {
        try {
            f();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string(section) + ": " + e.what());
        }
    };
    wrap("channel", [&] { c.channel.consts.validate(); });
    const auto& r = c.channel.ranges;
    if (r.Z_min > r.Z_max) throw ConfigError("channel.Z_min: exceeds channel.Z_max");
    if (r.V_min > r.V_max) throw ConfigError("channel.V_min: exceeds channel.V_max");
    if (r.sigma_s_min > r.sigma_s_max) throw ConfigError("channel.sigma_s_min: exceeds channel.sigma_s_max");
    if (r.sigma_a_min > r.sigma_a_max) throw ConfigError("channel.sigma_a_min: exceeds channel.sigma_a_max");
    if (c.channel.table_h_min >= c.channel.table_h_max) {
        throw ConfigError("channel.table_h_min: must be below channel.table_h_max");
    }
    wrap("model", [&] { c.model.validate(); });
    wrap("train_ae", [&] { c.train.validate(); });
    if (c.dqn.eps_min > c.dqn.eps_init) throw ConfigError("dqn.eps_min: exceeds dqn.eps_init");
    if (c.dqn.lr_min > c.dqn.lr) throw ConfigError("dqn.lr_min: exceeds dqn.lr");
    wrap("dqn", [&] { c.dqn.validate(); });
    if (c.train.lr_min > c.train.lr) throw ConfigError("train_ae.lr_min: exceeds train_ae.lr");
}

}  // namespace

std::string ExperimentConfig::canonical() const {
    ExperimentConfig copy = *this;
    std::string out;
    for (const auto& f : fields(copy)) out += f.path + " = " + render(f.target) + "\n";
    return out;
}

std::uint64_t ExperimentConfig::hash() const {
    const std::string c = canonical();
    return fnv1a64(c.data(), c.size());
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    auto table = fields(cfg);
    static const std::set<std::string> sections = {"channel", "model", "train_ae", "dqn", "eval"};
    std::set<std::string> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (!sections.count(section)) throw ConfigError(where + "unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::string path = key;
        if (key.find('.') == std::string::npos) {
            if (section.empty()) throw ConfigError(where + key + ": key outside any section");
            path = section + "." + key;
        }
        auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.path == path; });
        if (it == table.end()) throw ConfigError(where + path + ": unknown key");
        if (!seen.insert(path).second) throw ConfigError(where + path + ": set more than once");
        try {
            assign(*it, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    if (path == "default") return parse_config_text("", "default");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

}  // namespace aeat::io
