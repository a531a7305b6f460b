// OpenMP kernels against their serial references.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "aeat/eval/ber.hpp"

using namespace aeat;

namespace {

struct Fixture {
    channel::ChannelModel chan;
    channel::SnrReference ref = channel::calibrate_snr(chan, 1, 20000);
    model::ModelConfig cfg;
    train::EnvNormalizer norm{chan.settings().ranges};
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

model::AeModel fresh_model() {
    RngStream rng(1);
    return model::AeModel::init(fixture().cfg, rng);
}

void BM_GradientSerial(benchmark::State& state) {
    auto& f = fixture();
    auto m = fresh_model();
    const auto batch = train::make_batch(1, 0, 64, f.cfg, f.chan, f.ref, 10.0, f.norm);
    const auto full = model::LayerMask::full(f.cfg.layers);
    for (auto _ : state) benchmark::DoNotOptimize(train::batch_gradient_serial(m, batch, full, 1.0));
}

void BM_GradientParallel(benchmark::State& state) {
    auto& f = fixture();
    omp_set_num_threads(static_cast<int>(state.range(0)));
    auto m = fresh_model();
    const auto batch = train::make_batch(1, 0, 64, f.cfg, f.chan, f.ref, 10.0, f.norm);
    const auto full = model::LayerMask::full(f.cfg.layers);
    std::vector<model::AeModel> replicas;
    for (auto _ : state) benchmark::DoNotOptimize(train::batch_gradient(m, batch, full, 1.0, 4, replicas));
}

void BM_BerCurve(benchmark::State& state) {
    auto& f = fixture();
    omp_set_num_threads(static_cast<int>(state.range(0)));
    auto m = fresh_model();
    const eval::AeCodec codec(m);
    eval::EvalConfig cfg;
    cfg.snr_grid = {10.0};
    cfg.n_bits = 128 * 256;
    for (auto _ : state) benchmark::DoNotOptimize(eval::ber_curve(codec, {}, f.chan, f.ref, cfg));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.n_bits));
}

}  // namespace

BENCHMARK(BM_GradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BerCurve)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
