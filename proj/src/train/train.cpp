#include "aeat/train/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace aeat::train {

std::array<double, 5> EnvNormalizer::operator()(const channel::EnvParams& env, bool* clamped) const {
    const auto& r = ranges;
    std::array<double, 5> s = {
        (env.Z - r.Z_min) / (r.Z_max - r.Z_min),
        (env.V_d - r.V_min) / (r.V_max - r.V_min),
        env.Cn2 > 0.0 ? std::log(env.Cn2 / Cn2_min) / std::log(Cn2_max / Cn2_min) : -1.0,
        (env.sigma_s - r.sigma_s_min) / (r.sigma_s_max - r.sigma_s_min),
        (env.sigma_a - r.sigma_a_min) / (r.sigma_a_max - r.sigma_a_min),
    };
    bool any = false;
    for (auto& v : s) {
        if (v < 0.0 || v > 1.0) {
            any = true;
            v = std::clamp(v, 0.0, 1.0);
        }
    }
    if (clamped) {
        *clamped = any;
    } else if (any) {
        std::cerr << "warning: environment outside the sampling ranges; state clamped to [0, 1]\n";
    }
    return s;
}

void TrainConfig::validate() const {
    if (batch_size == 0 || epochs == 0 || steps_per_epoch == 0 || grad_chunks == 0) {
        throw std::invalid_argument("train_ae: sizes must be positive");
    }
    if (!(lr > 0.0) || lr_min < 0.0 || lr_min > lr) throw std::invalid_argument("train_ae: need 0 <= lr_min <= lr");
    if (lambda_bce < 0.0 || weight_decay < 0.0) throw std::invalid_argument("train_ae: weights must be >= 0");
}

namespace {

void append_bits(Batch& batch, std::span<const double> bits, const model::ModelConfig& mcfg) {
    const std::size_t n = mcfg.block_bits();
    if (bits.size() != n) throw ShapeError("append_block: block length must equal T*d_in");
    if (batch.bits.cols == 0) {
        batch.bits = Tensor(0, n);
        batch.states = Tensor(0, mcfg.env_dim);
    }
    batch.bits.data.insert(batch.bits.data.end(), bits.begin(), bits.end());
    batch.bits.rows += 1;
}

void append_env_and_link(Batch& batch, const channel::EnvParams& env, RngStream& rng,
                         const model::ModelConfig& mcfg, const channel::ChannelModel& chan,
                         const channel::SnrReference& ref, double snr_db, const EnvNormalizer& norm,
                         bool noiseless) {
    const auto s = norm(env);
    batch.states.data.insert(batch.states.data.end(), s.begin(), s.end());
    batch.states.rows += 1;
    batch.envs.push_back(env);

    const auto draw = chan.sample(rng, env);
    batch.draws.push_back(draw);
    if (noiseless) {
        batch.link.gain.push_back(1.0);
        if (batch.link.noise.cols == 0) batch.link.noise = Tensor(0, mcfg.d_in);
        batch.link.noise.rows += mcfg.T;
        batch.link.noise.data.resize(batch.link.noise.rows * mcfg.d_in, 0.0);
    } else {
        model::append_block(batch.link, draw.h, ref, snr_db, mcfg, rng);
    }
}

}  // namespace

void append_block(Batch& batch, std::span<const double> bits, RngStream& rng, const model::ModelConfig& mcfg,
                  const channel::ChannelModel& chan, const channel::SnrReference& ref, double snr_db,
                  const EnvNormalizer& norm, bool noiseless) {
    append_bits(batch, bits, mcfg);
    append_env_and_link(batch, channel::sample_env(rng, chan.settings().ranges), rng, mcfg, chan, ref, snr_db, norm,
                        noiseless);
}

void append_block_in(Batch& batch, std::span<const double> bits, const channel::EnvParams& env, RngStream& rng,
                     const model::ModelConfig& mcfg, const channel::ChannelModel& chan,
                     const channel::SnrReference& ref, double snr_db, const EnvNormalizer& norm, bool noiseless) {
    append_bits(batch, bits, mcfg);
    append_env_and_link(batch, env, rng, mcfg, chan, ref, snr_db, norm, noiseless);
}

void append_random_block(Batch& batch, RngStream& rng, const model::ModelConfig& mcfg,
                         const channel::ChannelModel& chan, const channel::SnrReference& ref, double snr_db,
                         const EnvNormalizer& norm, bool noiseless) {
    std::vector<double> bits(mcfg.block_bits());
    for (auto& b : bits) b = static_cast<double>(rng.next_u64() >> 63);
    append_block(batch, bits, rng, mcfg, chan, ref, snr_db, norm, noiseless);
}

Batch make_batch(std::uint64_t seed, std::uint64_t step, std::size_t batch_size, const model::ModelConfig& mcfg,
                 const channel::ChannelModel& chan, const channel::SnrReference& ref, double snr_db,
                 const EnvNormalizer& norm, bool noiseless) {
    Batch batch;
    const RngStream step_rng = RngStream(seed).derive(step);
    for (std::size_t b = 0; b < batch_size; ++b) {
        RngStream rng = step_rng.derive(b);
        append_random_block(batch, rng, mcfg, chan, ref, snr_db, norm, noiseless);
    }
    return batch;
}

Batch slice_batch(const Batch& src, std::size_t begin, std::size_t count, const model::ModelConfig& mcfg) {
    if (begin + count > src.bits.rows) throw ShapeError("slice_batch: range outside batch");
    auto rows = [](const Tensor& t, std::size_t r0, std::size_t nr) {
        Tensor out(nr, t.cols);
        std::copy_n(t.data.begin() + static_cast<std::ptrdiff_t>(r0 * t.cols), nr * t.cols, out.data.begin());
        return out;
    };
    Batch b;
    b.bits = rows(src.bits, begin, count);
    b.states = rows(src.states, begin, count);
    b.envs.assign(src.envs.begin() + static_cast<std::ptrdiff_t>(begin),
                  src.envs.begin() + static_cast<std::ptrdiff_t>(begin + count));
    b.draws.assign(src.draws.begin() + static_cast<std::ptrdiff_t>(begin),
                   src.draws.begin() + static_cast<std::ptrdiff_t>(begin + count));
    b.link.gain.assign(src.link.gain.begin() + static_cast<std::ptrdiff_t>(begin),
                       src.link.gain.begin() + static_cast<std::ptrdiff_t>(begin + count));
    b.link.noise = rows(src.link.noise, begin * mcfg.T, count * mcfg.T);
    b.link.hard_transmit = src.link.hard_transmit;
    return b;
}

Batch gather_blocks(const Batch& src, std::span<const std::size_t> idx, const model::ModelConfig& mcfg) {
    Batch b;
    b.bits = Tensor(idx.size(), src.bits.cols);
    b.states = Tensor(idx.size(), src.states.cols);
    b.link.noise = Tensor(idx.size() * mcfg.T, mcfg.d_in);
    b.link.hard_transmit = src.link.hard_transmit;
    const std::size_t ns = mcfg.T * mcfg.d_in;
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::size_t i = idx[r];
        if (i >= src.bits.rows) throw ShapeError("gather_blocks: index outside batch");
        std::copy_n(src.bits.data.begin() + static_cast<std::ptrdiff_t>(i * b.bits.cols), b.bits.cols,
                    b.bits.data.begin() + static_cast<std::ptrdiff_t>(r * b.bits.cols));
        std::copy_n(src.states.data.begin() + static_cast<std::ptrdiff_t>(i * b.states.cols), b.states.cols,
                    b.states.data.begin() + static_cast<std::ptrdiff_t>(r * b.states.cols));
        std::copy_n(src.link.noise.data.begin() + static_cast<std::ptrdiff_t>(i * ns), ns,
                    b.link.noise.data.begin() + static_cast<std::ptrdiff_t>(r * ns));
        b.envs.push_back(src.envs[i]);
        b.draws.push_back(src.draws[i]);
        b.link.gain.push_back(src.link.gain[i]);
    }
    return b;
}

double batch_gradient_serial(model::AeModel& m, const Batch& batch, const model::LayerMask& mask,
                             double lambda_bce) {
    m.params().zero_grad();
    ad::Tape tape;
    auto f = model::forward_end_to_end(tape, m, batch.bits, batch.states, mask, batch.link);
    tape.backward(ad::scale(f.bce, lambda_bce));
    return f.bce.value().data[0];
}

double batch_gradient(model::AeModel& m, const Batch& batch, const model::LayerMask& mask, double lambda_bce,
                      std::size_t chunks, std::vector<model::AeModel>& replicas) {
    const std::size_t B = batch.bits.rows;
    chunks = std::min(chunks, B);
    while (replicas.size() < chunks) replicas.push_back(m);
    std::vector<double> loss(chunks, 0.0);
    const auto& master = m.params().entries();

#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * B / chunks;
        const std::size_t end = (c + 1) * B / chunks;
        auto& rep = replicas[c];
        auto& ent = rep.params().entries();
        for (std::size_t i = 0; i < ent.size(); ++i) ent[i].value.data = master[i].value.data;
        rep.params().zero_grad();
        const Batch part = slice_batch(batch, begin, end - begin, m.config());
        ad::Tape tape;
        auto f = model::forward_end_to_end(tape, rep, part.bits, part.states, mask, part.link);
        const double w = static_cast<double>(end - begin) / static_cast<double>(B);
        tape.backward(ad::scale(f.bce, lambda_bce * w));
        loss[c] = f.bce.value().data[0] * w;
    }

    m.params().zero_grad();
    double total = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        total += loss[c];
        auto& dst = m.params().entries();
        const auto& src = replicas[c].params().entries();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            for (std::size_t j = 0; j < dst[i].grad.size(); ++j) dst[i].grad.data[j] += src[i].grad.data[j];
        }
    }
    return total;
}

TrainResult train_ae(model::AeModel& m, const TrainConfig& cfg, const channel::ChannelModel& chan,
                     const channel::SnrReference& ref, const ProgressFn& progress) {
    cfg.validate();
    const auto mask = model::LayerMask{(1u << m.enc_layers()) - 1u, (1u << m.dec_layers()) - 1u};
    const EnvNormalizer norm{chan.settings().ranges};
    AdamWConfig opt;
    opt.weight_decay = cfg.weight_decay;
    AdamWState state = AdamWState::zeros_like(m.params());
    std::vector<model::AeModel> replicas;

    TrainResult result;
    const std::size_t total = cfg.total_steps();
    for (std::size_t step = 0; step < total; ++step) {
        const Batch batch =
            make_batch(cfg.seed, step, cfg.batch_size, m.config(), chan, ref, cfg.train_snr_db, norm, cfg.noiseless);
        const double bce = batch_gradient(m, batch, mask, cfg.lambda_bce, cfg.grad_chunks, replicas);
        if (!std::isfinite(bce)) {
            throw TrainingDiverged("train_ae: non-finite loss at step " + std::to_string(step));
        }
        const double lr = cosine_lr(step, total, cfg.lr, cfg.lr_min);
        adamw_step(m.params(), state, lr, opt);
        const LogRow row{step / cfg.steps_per_epoch, step, bce, lr};
        result.log.push_back(row);
        if (progress) progress(row);
    }
    if (!result.log.empty()) {
        result.initial_bce = result.log.front().bce;
        result.final_bce = result.log.back().bce;
    }
    return result;
}

}  // namespace aeat::train
