#include "aeat/eval/ber.hpp"

#include <algorithm>
#include <chrono>
#include <map>

namespace aeat::eval {

Tensor AeCodec::decide(const train::Batch& blocks, const model::LayerMask& mask) const {
    ad::Tape tape;
    auto f = model::forward_end_to_end(tape, model_, blocks.bits, blocks.states, mask, blocks.link);
    Tensor p = f.probs.value();
    p.rows = blocks.bits.rows;
    p.cols = blocks.bits.cols;
    return p;
}

Tensor OokCodec::decide(const train::Batch& blocks, const model::LayerMask&) const {
    Tensor p(blocks.bits.rows, blocks.bits.cols);
    const std::size_t n = blocks.bits.cols;
    for (std::size_t b = 0; b < blocks.bits.rows; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            const double y = blocks.link.gain[b] * blocks.bits(b, i) + blocks.link.noise.data[b * n + i];
            p(b, i) = std::clamp(y, 0.0, 1.0);
        }
    }
    return p;
}

Tensor GuessCodec::decide(const train::Batch& blocks, const model::LayerMask&) const {
    Tensor p(blocks.bits.rows, blocks.bits.cols);
    for (std::size_t i = 0; i < p.size(); ++i) p.data[i] = blocks.link.noise.data[i] > 0.0 ? 1.0 : 0.0;
    return p;
}

namespace {

struct GroupResult {
    std::uint64_t errors = 0;
    double mse_sum = 0.0;
};

// Runs one group, splitting it by layer mask in order of first appearance.
GroupResult run_group(const BlockCodec& codec, const train::Batch& group,
                      const std::vector<model::LayerMask>& masks) {
    const auto fr = codec.framing();
    const std::size_t n = group.bits.cols;
    std::vector<model::LayerMask> distinct;
    for (const auto& m : masks) {
        if (std::find(distinct.begin(), distinct.end(), m) == distinct.end()) distinct.push_back(m);
    }
    GroupResult out;
    for (const auto& m : distinct) {
        std::vector<std::size_t> idx;
        for (std::size_t b = 0; b < masks.size(); ++b) {
            if (masks[b] == m) idx.push_back(b);
        }
        const train::Batch sub = idx.size() == masks.size() ? group : train::gather_blocks(group, idx, fr);
        const Tensor p = codec.decide(sub, m);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            double se = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double bit = sub.bits(r, i);
                const double pr = p(r, i);
                out.errors += static_cast<std::uint64_t>((pr > 0.5) != (bit > 0.5));
                se += (pr - bit) * (pr - bit);
            }
            out.mse_sum += se / static_cast<double>(n);
        }
    }
    return out;
}

}  // namespace

EvalReport ber_curve(const BlockCodec& codec, const MaskPolicy& policy, const channel::ChannelModel& chan,
                     const channel::SnrReference& ref, const EvalConfig& cfg) {
    const auto fr = codec.framing();
    const std::size_t N = fr.block_bits();
    const std::uint64_t n_blocks = (cfg.n_bits + N - 1) / N;
    const std::size_t G = std::max<std::size_t>(1, cfg.group_blocks);
    const std::uint64_t n_groups = (n_blocks + G - 1) / G;
    constexpr std::uint64_t kWave = 64;  // groups generated before each parallel pass
    const train::EnvNormalizer norm{chan.settings().ranges};
    const model::LayerMask full = model::LayerMask::full(fr.layers);
    const RngStream master(cfg.seed);

    EvalReport report;
    report.mean_h = ref.mean_h;
    report.sigma_w = ref.sigma_w;
    report.seed = cfg.seed;

    for (double snr : cfg.snr_grid) {
        const auto t0 = std::chrono::steady_clock::now();
        SnrRecord rec;
        rec.snr_db = snr;
        rec.amplitude = ref.amplitude(snr);
        double layer_sum = 0.0;
        double mse_sum = 0.0;
        for (std::uint64_t w0 = 0; w0 < n_groups; w0 += kWave) {
            const std::uint64_t w1 = std::min(n_groups, w0 + kWave);
            std::vector<train::Batch> groups(w1 - w0);
            std::vector<std::vector<model::LayerMask>> masks(w1 - w0);
            for (std::uint64_t g = w0; g < w1; ++g) {
                auto& batch = groups[g - w0];
                batch.link.hard_transmit = cfg.hard_transmit;
                for (std::uint64_t b = g * G; b < std::min(n_blocks, (g + 1) * G); ++b) {
                    RngStream rng = master.derive(b);
                    train::append_random_block(batch, rng, fr, chan, ref, snr, norm, cfg.noiseless);
                    const auto mask = policy ? policy(batch.states.row(batch.states.rows - 1), b) : full;
                    masks[g - w0].push_back(mask);
                    layer_sum += mask.active_layers();
                }
            }
            std::vector<GroupResult> res(groups.size());
#pragma omp parallel for schedule(dynamic)
            for (std::size_t g = 0; g < groups.size(); ++g) res[g] = run_group(codec, groups[g], masks[g]);
            for (const auto& r : res) {
                rec.errors += r.errors;
                mse_sum += r.mse_sum;
            }
        }
        rec.bits = n_blocks * N;
        rec.ber = static_cast<double>(rec.errors) / static_cast<double>(rec.bits);
        rec.avg_active_layers = layer_sum / static_cast<double>(n_blocks);
        rec.mean_mse = mse_sum / static_cast<double>(n_blocks);
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.records.push_back(rec);
    }
    return report;
}

TimingResult time_inference(const BlockCodec& codec, const MaskPolicy& policy, const channel::ChannelModel& chan,
                            const channel::SnrReference& ref, std::uint64_t n_bits, double snr_db,
                            std::uint64_t seed) {
    EvalConfig cfg;
    cfg.snr_grid = {snr_db};
    cfg.n_bits = n_bits;
    cfg.seed = seed;
    ber_curve(codec, policy, chan, ref, cfg);
    const auto rep = ber_curve(codec, policy, chan, ref, cfg);
    const auto& r = rep.records.front();
    return {r.wall_time_s, r.bits, r.avg_active_layers};
}

}  // namespace aeat::eval
