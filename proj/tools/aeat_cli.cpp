// Command-line driver: train-ae -> train-dqn -> eval-ber / eval-image / timing,
// plus channel sampling and self-checks.
#include <omp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>

#include "aeat/channel/verify.hpp"
#include "aeat/io/checkpoint.hpp"
#include "aeat/io/config.hpp"
#include "aeat/io/report.hpp"
#include "json.hpp"

using namespace aeat;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kCalibrationSeed = 1;

struct Common {
    std::string config = "default";
    std::uint64_t seed = 1;
    std::string out = ".";
    int threads = 0;
};

struct Loaded {
    io::ExperimentConfig cfg;
    io::Provenance prov;
    std::unique_ptr<channel::ChannelModel> chan;
    channel::SnrReference ref;
};

Loaded setup(const Common& c) {
    if (c.threads > 0) omp_set_num_threads(c.threads);
    Loaded l;
    l.cfg = io::load_config(c.config);
    l.prov = {l.cfg.hash(), c.seed};
    l.chan = std::make_unique<channel::ChannelModel>(l.cfg.channel);
    l.ref = channel::calibrate_snr(*l.chan, kCalibrationSeed, l.cfg.calibration_draws);
    fs::create_directories(c.out);
    return l;
}

std::string out_path(const Common& c, const char* name) { return (fs::path(c.out) / name).string(); }

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "config file, or 'default'")->capture_default_str();
    app->add_option("--seed", c.seed, "master seed")->capture_default_str();
    app->add_option("--out", c.out, "output directory")->capture_default_str();
    app->add_option("--threads", c.threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
}

io::Checkpoint load_kind(const std::string& path, io::CheckpointKind kind, const io::Provenance& prov) {
    io::Checkpoint ck = io::load_checkpoint(path);
    if (ck.kind != kind) throw io::CheckpointError(path + ": wrong checkpoint kind");
    if (ck.config_hash != prov.config_hash) {
        std::cerr << "warning: " << path << " was written under config " << io::hex64(ck.config_hash)
                  << ", current config is " << io::hex64(prov.config_hash) << "\n";
    }
    return ck;
}

struct Policy {
    std::optional<io::Checkpoint> q;
    std::unique_ptr<dqn::DeploySelector> sel;
    eval::MaskPolicy fn;
};

Policy make_policy(const std::string& q_path, const io::ExperimentConfig& cfg, const io::Provenance& prov) {
    Policy p;
    if (q_path.empty()) return p;
    p.q = load_kind(q_path, io::CheckpointKind::q_network, prov);
    p.sel = std::make_unique<dqn::DeploySelector>(p.q->params, cfg.dqn.change_threshold);
    p.fn = dqn::deploy_policy(*p.sel);
    return p;
}

std::vector<io::CheckpointRef> refs(const std::string& ae, const io::Checkpoint& ae_ck, const Policy& pol,
                                    const std::string& q) {
    std::vector<io::CheckpointRef> r = {{"autoencoder", ae, ae_ck.config_hash, ae_ck.seed}};
    if (pol.q) r.push_back({"q_network", q, pol.q->config_hash, pol.q->seed});
    return r;
}

int cmd_train_ae(const Common& c) {
    Loaded l = setup(c);
    train::TrainConfig tc = l.cfg.train;
    tc.seed = c.seed;
    RngStream init = RngStream(c.seed).derive(~0ull);
    auto model = model::AeModel::init(l.cfg.model, init);
    const auto res = train::train_ae(model, tc, *l.chan, l.ref, [&](const train::LogRow& r) {
        if ((r.step + 1) % tc.steps_per_epoch == 0) {
            std::cerr << "epoch " << r.epoch + 1 << "/" << tc.epochs << " bce " << r.bce << " lr " << r.lr << "\n";
        }
    });
    io::Checkpoint ck;
    ck.kind = io::CheckpointKind::autoencoder;
    ck.model = model.config();
    ck.enc_layers = static_cast<std::uint32_t>(model.enc_layers());
    ck.dec_layers = static_cast<std::uint32_t>(model.dec_layers());
    ck.config_hash = l.prov.config_hash;
    ck.seed = c.seed;
    ck.params = model.params();
    io::save_checkpoint(ck, out_path(c, "ae.ckpt"));
    io::write_file(out_path(c, "train_log.csv"), io::train_log_csv(res.log, l.prov));
    std::cerr << "bce " << res.initial_bce << " -> " << res.final_bce << "\n";
    return 0;
}

int cmd_train_dqn(const Common& c, const std::string& ae_path) {
    Loaded l = setup(c);
    const io::Checkpoint ae_ck = load_kind(ae_path, io::CheckpointKind::autoencoder, l.prov);
    auto ae = io::to_model(ae_ck);
    dqn::DqnConfig dc = l.cfg.dqn;
    dc.seed = c.seed;
    const std::size_t every = std::max<std::size_t>(1, dc.episodes / 20);
    const auto res = dqn::train_dqn(ae, dc, *l.chan, l.ref, [&](const dqn::EpisodeLog& r) {
        if ((r.episode + 1) % every == 0) {
            std::cerr << "episode " << r.episode + 1 << "/" << dc.episodes << " eps " << r.epsilon << " reward "
                      << r.reward << " avg_layers " << r.avg_layers << "\n";
        }
    });
    io::Checkpoint ck;
    ck.kind = io::CheckpointKind::q_network;
    ck.model = ae_ck.model;
    ck.enc_layers = ae_ck.enc_layers;
    ck.dec_layers = ae_ck.dec_layers;
    ck.config_hash = l.prov.config_hash;
    ck.seed = c.seed;
    ck.params = res.q;
    io::save_checkpoint(ck, out_path(c, "q.ckpt"));
    io::write_file(out_path(c, "dqn_log.csv"), io::dqn_log_csv(res.log, l.prov));
    return 0;
}

int cmd_eval_ber(const Common& c, const std::string& ae_path, const std::string& q_path) {
    Loaded l = setup(c);
    const io::Checkpoint ae_ck = load_kind(ae_path, io::CheckpointKind::autoencoder, l.prov);
    auto ae = io::to_model(ae_ck);
    Policy pol = make_policy(q_path, l.cfg, l.prov);
    const eval::AeCodec codec(ae);
    eval::EvalConfig ec;
    ec.snr_grid = l.cfg.eval.snr_grid;
    ec.n_bits = l.cfg.eval.n_bits;
    ec.group_blocks = l.cfg.eval.group_blocks;
    ec.hard_transmit = l.cfg.eval.hard_transmit;
    ec.seed = c.seed;
    const auto rep = eval::ber_curve(codec, pol.fn, *l.chan, l.ref, ec);
    for (const auto& r : rep.records) {
        std::cerr << "snr " << r.snr_db << " dB  ber " << r.ber << "  layers " << r.avg_active_layers << "  ("
                  << r.wall_time_s << " s)\n";
    }
    io::write_file(out_path(c, "ber.csv"), io::ber_csv(rep, l.prov));
    io::write_file(out_path(c, "ber.json"),
                   io::ber_json(rep, l.prov, refs(ae_path, ae_ck, pol, q_path), l.cfg.canonical()));
    return 0;
}

int cmd_eval_image(const Common& c, const std::string& ae_path, const std::string& q_path, const std::string& image,
                   std::optional<double> snr) {
    Loaded l = setup(c);
    const io::Checkpoint ae_ck = load_kind(ae_path, io::CheckpointKind::autoencoder, l.prov);
    auto ae = io::to_model(ae_ck);
    Policy pol = make_policy(q_path, l.cfg, l.prov);
    const eval::AeCodec codec(ae);
    const double snr_db = snr.value_or(l.cfg.eval.image_snr_db);
    const eval::Raster img = eval::read_ppm(image);
    const auto job = eval::image_pipeline(img, codec, pol.fn, *l.chan, l.ref, snr_db, c.seed);
    eval::write_ppm(job.received, out_path(c, "received.ppm"));
    nlohmann::ordered_json j;
    j["config_hash"] = io::hex64(l.prov.config_hash);
    j["seed"] = c.seed;
    j["image"] = image;
    j["width"] = img.width;
    j["height"] = img.height;
    j["snr_db"] = snr_db;
    j["payload_bits"] = job.payload_bits;
    j["padded_bits"] = job.padded_bits;
    j["bit_errors"] = job.bit_errors;
    j["ber"] = job.payload_bits ? double(job.bit_errors) / double(job.payload_bits) : 0.0;
    j["avg_active_layers"] = job.avg_active_layers;
    // JSON has no infinity; identical images are reported as the string.
    if (std::isinf(job.psnr_db))
        j["psnr_db"] = "inf";
    else
        j["psnr_db"] = job.psnr_db;
    io::write_file(out_path(c, "image.json"), j.dump(2) + "\n");
    std::cerr << "psnr " << job.psnr_db << " dB, " << job.bit_errors << " bit errors\n";
    return 0;
}

int cmd_timing(const Common& c, const std::string& ae_path, const std::string& q_path,
               std::optional<std::uint64_t> bits) {
    Loaded l = setup(c);
    const io::Checkpoint ae_ck = load_kind(ae_path, io::CheckpointKind::autoencoder, l.prov);
    auto ae = io::to_model(ae_ck);
    Policy pol = make_policy(q_path, l.cfg, l.prov);
    const eval::AeCodec codec(ae);
    const std::uint64_t n = bits.value_or(l.cfg.eval.timing_bits);
    const double snr_db = l.cfg.train.train_snr_db;
    const auto t = eval::time_inference(codec, pol.fn, *l.chan, l.ref, n, snr_db, c.seed);
    nlohmann::ordered_json j;
    j["config_hash"] = io::hex64(l.prov.config_hash);
    j["seed"] = c.seed;
    j["snr_db"] = snr_db;
    j["bits"] = t.bits;
    j["seconds"] = t.seconds;
    j["avg_active_layers"] = t.avg_active_layers;
    j["threads"] = omp_get_max_threads();
    io::write_file(out_path(c, "timing.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_sample_channel(const Common& c, std::size_t n) {
    Loaded l = setup(c);
    const RngStream master(c.seed);
    std::string csv = io::csv_preamble(l.prov) + "Z,V_d,Cn2,sigma_s,sigma_a,h_l,h_a,h_p,h_aoa,h\n";
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng = master.derive(i);
        const auto env = channel::sample_env(rng, l.cfg.channel.ranges);
        const auto d = l.chan->sample(rng, env);
        for (double v : {env.Z, env.V_d, env.Cn2, env.sigma_s, env.sigma_a, d.h_l, d.h_a, d.h_p, d.h_aoa}) {
            csv += io::fmt_double(v) + ",";
        }
        csv += io::fmt_double(d.h) + "\n";
    }
    io::write_file(out_path(c, "channel_samples.csv"), csv);
    return 0;
}

int cmd_verify_channel(const Common& c) {
    Loaded l = setup(c);
    const auto checks = channel::verify_channel(*l.chan, c.seed);
    nlohmann::ordered_json j;
    j["config_hash"] = io::hex64(l.prov.config_hash);
    j["seed"] = c.seed;
    bool all = true;
    auto& arr = j["checks"] = nlohmann::ordered_json::array();
    for (const auto& r : checks) {
        all = all && r.pass;
        arr.push_back({{"name", r.name},
                       {"value", r.value},
                       {"reference", r.reference},
                       {"tolerance", r.tolerance},
                       {"detail", r.detail},
                       {"pass", r.pass}});
    }
    j["all_pass"] = all;
    const std::string text = j.dump(2) + "\n";
    io::write_file(out_path(c, "verify_channel.json"), text);
    std::cout << text;
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Environment-aware transformer autoencoder for UAV free-space optical links"};
    app.require_subcommand(1);

    Common common;
    std::string ae_path, q_path, image;
    std::optional<double> snr;
    std::optional<std::uint64_t> bits;
    std::size_t samples = 10000;

    auto* train_ae = app.add_subcommand("train-ae", "train the autoencoder at full depth");
    add_common(train_ae, common);

    auto* train_dqn = app.add_subcommand("train-dqn", "train the layer-selection controller");
    add_common(train_dqn, common);
    train_dqn->add_option("--ae", ae_path, "autoencoder checkpoint")->required();

    auto* eval_ber = app.add_subcommand("eval-ber", "bit error rate over the SNR grid");
    add_common(eval_ber, common);
    eval_ber->add_option("--ae", ae_path, "autoencoder checkpoint")->required();
    eval_ber->add_option("--q", q_path, "Q-network checkpoint (full depth without)");

    auto* eval_image = app.add_subcommand("eval-image", "send a PPM image through the link");
    add_common(eval_image, common);
    eval_image->add_option("--ae", ae_path, "autoencoder checkpoint")->required();
    eval_image->add_option("--q", q_path, "Q-network checkpoint");
    eval_image->add_option("--image", image, "binary PPM (P6) input")->required();
    eval_image->add_option("--snr", snr, "SNR in dB (default eval.image_snr_db)");

    auto* timing = app.add_subcommand("timing", "inference wall-clock time");
    add_common(timing, common);
    timing->add_option("--ae", ae_path, "autoencoder checkpoint")->required();
    timing->add_option("--q", q_path, "Q-network checkpoint");
    timing->add_option("--bits", bits, "bits to decode (default eval.timing_bits)");

    auto* sample = app.add_subcommand("sample-channel", "write channel realisations as CSV");
    add_common(sample, common);
    sample->add_option("--n", samples, "number of draws")->capture_default_str();

    auto* verify = app.add_subcommand("verify-channel", "statistical checks of the channel samplers");
    add_common(verify, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*train_ae) return cmd_train_ae(common);
        if (*train_dqn) return cmd_train_dqn(common, ae_path);
        if (*eval_ber) return cmd_eval_ber(common, ae_path, q_path);
        if (*eval_image) return cmd_eval_image(common, ae_path, q_path, image, snr);
        if (*timing) return cmd_timing(common, ae_path, q_path, bits);
        if (*sample) return cmd_sample_channel(common, samples);
        if (*verify) return cmd_verify_channel(common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
