#include "aeat/model/end_to_end.hpp"

#include <stdexcept>

namespace aeat::model {

void append_block(Link& link, double h, const channel::SnrReference& ref, double snr_db, const ModelConfig& cfg,
                  RngStream& rng) {
    const std::size_t k = cfg.symbols();
    const double sd = ref.sigma_w * ref.rx_scale(snr_db);
    if (link.noise.cols == 0) link.noise = Tensor(0, cfg.d_in);
    link.gain.push_back(h / ref.mean_h);
    link.noise.rows += cfg.T;
    link.noise.data.reserve(link.noise.data.size() + k);
    for (std::size_t i = 0; i < k; ++i) link.noise.data.push_back(sd * rng.normal());
}

Link noiseless_link(std::size_t blocks, const ModelConfig& cfg) {
    Link link;
    link.gain.assign(blocks, 1.0);
    link.noise = Tensor(blocks * cfg.T, cfg.d_in);
    return link;
}

Forward forward_end_to_end(ad::Tape& tape, AeModel& model, const Tensor& bits, const Tensor& env_states,
                           const LayerMask& mask, const Link& link) {
    const auto& cfg = model.config();
    const std::size_t B = bits.rows;
    if (env_states.rows != B) throw ShapeError("forward_end_to_end: one environment state per block");
    if (link.blocks() != B || link.noise.rows != B * cfg.T || link.noise.cols != cfg.d_in) {
        throw ShapeError("forward_end_to_end: link does not match batch");
    }
    model.check_mask(mask);

    auto env = embed_env(tape, model, env_states);
    auto x = encode(tape, model, bits, env, mask.enc);
    if (link.hard_transmit) {
        Tensor hard = x.value();
        for (auto& v : hard.data) v = v > 0.5 ? 1.0 : 0.0;
        x = tape.constant(std::move(hard));
    }
    auto y = ad::scale_blocks_add(x, link.gain, cfg.T, link.noise);
    auto probs = decode(tape, model, y, env, mask.dec);

    Forward f;
    f.probs = probs;
    const Tensor target = as_tokens(bits, cfg);
    f.bce = ad::bce_loss(probs, target);
    const std::size_t n = cfg.block_bits();
    f.block_mse.assign(B, 0.0);
    const auto& p = probs.value().data;
    for (std::size_t b = 0; b < B; ++b) {
        double s = 0.0;
        for (std::size_t i = b * n; i < (b + 1) * n; ++i) {
            const double e = p[i] - target.data[i];
            s += e * e;
        }
        f.block_mse[b] = s / static_cast<double>(n);
        f.mse += f.block_mse[b];
    }
    f.mse /= static_cast<double>(B);
    return f;
}

}  // namespace aeat::model
