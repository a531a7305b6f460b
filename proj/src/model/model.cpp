#include "aeat/model/model.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace aeat::model {

void ModelConfig::validate() const {
    if (T == 0 || d == 0 || heads == 0 || layers == 0 || d_in == 0 || env_dim == 0 || ffn_mult == 0) {
        throw std::invalid_argument("ModelConfig: all sizes must be positive");
    }
    if (d % heads != 0) throw std::invalid_argument("ModelConfig: d must be divisible by heads");
    if (layers > 16) throw std::invalid_argument("ModelConfig: at most 16 layers per stack");
}

LayerMask LayerMask::full(std::size_t layers) {
    const std::uint32_t all = (1u << layers) - 1u;
    return {all, all};
}

int LayerMask::active_layers() const { return std::popcount(enc) + std::popcount(dec); }

std::string layer_prefix(const char* stack, std::size_t layer) {
    return std::string(stack) + "." + std::to_string(layer) + ".";
}

namespace {

void add_layer(ParamStore& p, const std::string& pre, const ModelConfig& c) {
    const std::size_t d = c.d, h = c.ffn_mult * c.d;
    for (const char* m : {"self.", "cross."}) {
        for (const char* w : {"Wq", "Wk", "Wv", "Wo"}) p.add(pre + m + w, Tensor(d, d));
    }
    p.add(pre + "ffn.W1", Tensor(d, h));
    p.add(pre + "ffn.b1", Tensor(1, h));
    p.add(pre + "ffn.W2", Tensor(h, d));
    p.add(pre + "ffn.b2", Tensor(1, d));
    for (const char* ln : {"ln1.", "ln2.", "ln3."}) {
        p.add(pre + ln + "g", Tensor(1, d, 1.0));
        p.add(pre + ln + "b", Tensor(1, d));
    }
}

bool is_bias(const std::string& name) {
    const auto dot = name.rfind('.');
    const std::string leaf = name.substr(dot + 1);
    return leaf[0] == 'b';
}

}  // namespace

AeModel::AeModel(const ModelConfig& cfg, std::size_t enc_layers, std::size_t dec_layers, ParamStore params)
    : cfg_(cfg), enc_layers_(enc_layers), dec_layers_(dec_layers), params_(std::move(params)) {
    cfg_.validate();
    const ParamStore expect = layout(cfg_, enc_layers_, dec_layers_);
    if (expect.size() != params_.size()) throw ShapeError("AeModel: parameter count does not match layout");
    for (std::size_t i = 0; i < expect.size(); ++i) {
        const auto& a = expect.entries()[i];
        const auto& b = params_.entries()[i];
        if (a.name != b.name || !a.value.same_shape(b.value)) {
            throw ShapeError("AeModel: parameter '" + b.name + "' does not match layout");
        }
    }
}

ParamStore AeModel::layout(const ModelConfig& c, std::size_t enc_layers, std::size_t dec_layers) {
    ParamStore p;
    p.add("sig.W", Tensor(c.d_in, c.d));
    p.add("sig.b", Tensor(1, c.d));
    p.add("env.W1", Tensor(c.env_dim, c.d));
    p.add("env.b1", Tensor(1, c.d));
    p.add("env.W2", Tensor(c.d, c.d));
    p.add("env.b2", Tensor(1, c.d));
    p.add("pos", Tensor(c.T, c.d));
    for (std::size_t l = 0; l < enc_layers; ++l) add_layer(p, layer_prefix("enc", l), c);
    p.add("enc.out.W", Tensor(c.d, c.d_in));
    p.add("enc.out.b", Tensor(1, c.d_in));
    p.add("dec.in.W", Tensor(c.d_in, c.d));
    p.add("dec.in.b", Tensor(1, c.d));
    for (std::size_t l = 0; l < dec_layers; ++l) add_layer(p, layer_prefix("dec", l), c);
    p.add("dec.out.W", Tensor(c.d, c.d_in));
    p.add("dec.out.b", Tensor(1, c.d_in));
    return p;
}

AeModel AeModel::init(const ModelConfig& cfg, RngStream& rng) {
    cfg.validate();
    ParamStore p = layout(cfg, cfg.layers, cfg.layers);
    for (auto& e : p.entries()) {
        if (e.name == "pos") {
            for (auto& v : e.value.data) v = 0.02 * rng.normal();
        } else if (e.name.find(".ln") != std::string::npos || is_bias(e.name)) {
            continue;
        } else {
            const double lim = std::sqrt(6.0 / static_cast<double>(e.value.rows + e.value.cols));
            for (auto& v : e.value.data) v = rng.uniform(-lim, lim);
        }
    }
    return AeModel(cfg, cfg.layers, cfg.layers, std::move(p));
}

void AeModel::check_mask(const LayerMask& mask) const {
    if (mask.enc == 0 || mask.dec == 0) {
        throw std::invalid_argument("LayerMask: each stack needs at least one active layer");
    }
    if ((mask.enc >> enc_layers_) != 0 || (mask.dec >> dec_layers_) != 0) {
        throw std::invalid_argument("LayerMask: selects a layer the model does not have");
    }
}

AeModel AeModel::rebuild_active(const LayerMask& mask) const {
    check_mask(mask);
    const std::size_t ne = static_cast<std::size_t>(std::popcount(mask.enc));
    const std::size_t nd = static_cast<std::size_t>(std::popcount(mask.dec));
    ParamStore out = layout(cfg_, ne, nd);
    auto remap = [&](const std::string& name) -> std::string {
        for (const char* stack : {"enc", "dec"}) {
            const std::string s = std::string(stack) + ".";
            if (name.rfind(s, 0) != 0) continue;
            const auto dot = name.find('.', s.size());
            const std::string idx = name.substr(s.size(), dot - s.size());
            if (idx.empty() || !std::isdigit(static_cast<unsigned char>(idx[0]))) return name;
            const std::size_t new_l = std::stoul(idx);
            const std::uint32_t bits = stack[0] == 'e' ? mask.enc : mask.dec;
            std::size_t seen = 0;
            for (std::size_t l = 0; l < 16; ++l) {
                if (!(bits >> l & 1u)) continue;
                if (seen++ == new_l) return s + std::to_string(l) + name.substr(dot);
            }
        }
        return name;
    };
    for (auto& e : out.entries()) e.value = params_.at(remap(e.name));
    return AeModel(cfg_, ne, nd, std::move(out));
}

Tensor as_tokens(const Tensor& bits, const ModelConfig& cfg) {
    if (bits.cols != cfg.block_bits()) throw ShapeError("as_tokens: block length must equal T*d_in");
    Tensor t = bits;
    t.rows = bits.rows * cfg.T;
    t.cols = cfg.d_in;
    return t;
}

ad::Var embed_signal(ad::Tape& tape, AeModel& m, const Tensor& bit_tokens) {
    const auto& c = m.config();
    if (bit_tokens.cols != c.d_in || bit_tokens.rows % c.T != 0) {
        throw ShapeError("embed_signal: expected (B*T) x d_in tokens");
    }
    auto& p = m.params();
    auto x = ad::add_row(ad::matmul(tape.constant(bit_tokens), tape.param(p, "sig.W")), tape.param(p, "sig.b"));
    if (c.positional) x = ad::add_tiled(x, tape.param(p, "pos"));
    return x;
}

ad::Var embed_env(ad::Tape& tape, AeModel& m, const Tensor& states) {
    const auto& c = m.config();
    if (states.cols != c.env_dim) throw ShapeError("embed_env: state width must equal env_dim");
    for (double v : states.data) {
        if (!(v >= -0.1 && v <= 1.1)) {
            throw std::invalid_argument("embed_env: environment state is not normalised to [0, 1]");
        }
    }
    if (!c.env_conditioning) return tape.constant(Tensor(states.rows, c.d));
    auto& p = m.params();
    auto h = ad::relu(
        ad::add_row(ad::matmul(tape.constant(states), tape.param(p, "env.W1")), tape.param(p, "env.b1")));
    return ad::add_row(ad::matmul(h, tape.param(p, "env.W2")), tape.param(p, "env.b2"));
}

ad::Var self_attention(ad::Tape& tape, AeModel& m, const std::string& pre, ad::Var input, Tensor* weights_out) {
    const auto& c = m.config();
    auto& p = m.params();
    auto q = ad::matmul(input, tape.param(p, pre + "self.Wq"));
    auto k = ad::matmul(input, tape.param(p, pre + "self.Wk"));
    auto v = ad::matmul(input, tape.param(p, pre + "self.Wv"));
    auto o = ad::attention(q, k, v, c.T, c.T, c.heads, weights_out);
    return ad::matmul(o, tape.param(p, pre + "self.Wo"));
}

ad::Var cross_attention(ad::Tape& tape, AeModel& m, const std::string& pre, ad::Var queries, ad::Var env_tokens,
                        Tensor* weights_out) {
    const auto& c = m.config();
    auto& p = m.params();
    auto q = ad::matmul(queries, tape.param(p, pre + "cross.Wq"));
    auto k = ad::matmul(env_tokens, tape.param(p, pre + "cross.Wk"));
    auto v = ad::matmul(env_tokens, tape.param(p, pre + "cross.Wv"));
    auto o = ad::attention(q, k, v, c.T, 1, c.heads, weights_out);
    return ad::matmul(o, tape.param(p, pre + "cross.Wo"));
}

ad::Var transformer_layer(ad::Tape& tape, AeModel& m, const std::string& pre, ad::Var input, ad::Var env_tokens) {
    auto& p = m.params();
    auto ln = [&](ad::Var x, const char* which) {
        return ad::layer_norm(x, tape.param(p, pre + which + "g"), tape.param(p, pre + which + "b"));
    };
    auto n_self = ln(ad::add(input, self_attention(tape, m, pre, input)), "ln1.");
    auto n_cross = ln(ad::add(n_self, cross_attention(tape, m, pre, n_self, env_tokens)), "ln2.");
    auto hidden = ad::relu(ad::add_row(ad::matmul(n_cross, tape.param(p, pre + "ffn.W1")), tape.param(p, pre + "ffn.b1")));
    auto ffn = ad::add_row(ad::matmul(hidden, tape.param(p, pre + "ffn.W2")), tape.param(p, pre + "ffn.b2"));
    return ln(ad::add(n_cross, ffn), "ln3.");
}

ad::Var encode(ad::Tape& tape, AeModel& m, const Tensor& bits, ad::Var env_tokens, std::uint32_t enc_mask) {
    m.check_mask({enc_mask, 1u});
    auto x = embed_signal(tape, m, as_tokens(bits, m.config()));
    for (std::size_t l = 0; l < m.enc_layers(); ++l) {
        if (enc_mask >> l & 1u) x = transformer_layer(tape, m, layer_prefix("enc", l), x, env_tokens);
    }
    auto& p = m.params();
    return ad::sigmoid(ad::add_row(ad::matmul(x, tape.param(p, "enc.out.W")), tape.param(p, "enc.out.b")));
}

ad::Var decode(ad::Tape& tape, AeModel& m, ad::Var received, ad::Var env_tokens, std::uint32_t dec_mask) {
    m.check_mask({1u, dec_mask});
    const auto& c = m.config();
    if (received.cols() != c.d_in || received.rows() % c.T != 0) {
        throw ShapeError("decode: expected (B*T) x d_in received symbols");
    }
    auto& p = m.params();
    auto r = ad::add_row(ad::matmul(received, tape.param(p, "dec.in.W")), tape.param(p, "dec.in.b"));
    if (c.positional) r = ad::add_tiled(r, tape.param(p, "pos"));
    for (std::size_t l = 0; l < m.dec_layers(); ++l) {
        if (dec_mask >> l & 1u) r = transformer_layer(tape, m, layer_prefix("dec", l), r, env_tokens);
    }
    return ad::sigmoid(ad::add_row(ad::matmul(r, tape.param(p, "dec.out.W")), tape.param(p, "dec.out.b")));
}

}  // namespace aeat::model
