#include <filesystem>
#include <fstream>
#include <sstream>

#include "aeat/io/checkpoint.hpp"
#include "aeat/io/config.hpp"
#include "aeat/io/report.hpp"
#include "doctest.h"

using namespace aeat;
using namespace aeat::io;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config_text(text, "cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

std::filesystem::path scratch() {
    const auto dir = std::filesystem::temp_directory_path() / "aeat_test_io";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("empty config gives the table defaults") {
    const ExperimentConfig c = parse_config_text("");
    CHECK(c.model.T == 16);
    CHECK(c.model.d == 32);
    CHECK(c.model.heads == 4);
    CHECK(c.model.layers == 4);
    CHECK(c.model.env_dim == 5);
    CHECK(c.train.batch_size == 64);
    CHECK(c.train.epochs == 50);
    CHECK(c.train.lr == 0.001);
    CHECK(c.train.train_snr_db == 10.0);
    CHECK(c.dqn.state_dim == 5);
    CHECK(c.dqn.lr == 3e-4);
    CHECK(c.dqn.gamma == 0.99);
    CHECK(c.dqn.tau == 1e-3);
    CHECK(c.dqn.eps_init == 1.0);
    CHECK(c.dqn.eps_min == 0.01);
    CHECK(c.dqn.eps_decay == 0.995);
    CHECK(c.dqn.replay_capacity == 100000);
    CHECK(c.dqn.batch == 128);
    CHECK(c.dqn.per_alpha == 0.6);
    CHECK(c.dqn.per_beta == 0.4);
    CHECK(c.channel.consts.eta_e == 0.5);
    CHECK(c.channel.consts.sigma_w2 == 1e-10);
    CHECK(c.channel.consts.wavelength == 1550e-9);
    CHECK(c.channel.consts.alpha == 8.2);
    CHECK(c.channel.consts.beta == 4);
    CHECK(c.channel.consts.b0 == 0.1079);
    CHECK(c.channel.consts.rho_malaga == 0.596);
    CHECK(c.channel.consts.Omega == 1.3265);
    CHECK(c.channel.consts.r_a == 0.1);
    CHECK(c.channel.consts.w_oz == 2.0);
    CHECK(c.channel.consts.theta_fov == 0.020);
    CHECK(c.channel.ranges.Z_min == 1000.0);
    CHECK(c.channel.ranges.Z_max == 5000.0);
    CHECK(c.channel.ranges.V_min == 2.0);
    CHECK(c.channel.ranges.V_max == 13.0);
    CHECK(c.eval.snr_grid == std::vector<double>{0, 2, 4, 6, 8, 10});
    CHECK(c.eval.timing_bits == 200000);
    CHECK(c.hash() == ExperimentConfig{}.hash());
}

TEST_CASE("config parsing") {
    const std::string text =
        "# experiment\n"
        "[model]\n"
        "layers = 2 ; trailing comment\n"
        "env_conditioning = false\n"
        "[dqn]\n"
        "gamma = 0.9\n"
        "snr_grid = 0, 5, 10\n"
        "eval.n_bits = 4096\n"
        "[channel]\n"
        "coherence = paper_lambda\n";
    const ExperimentConfig c = parse_config_text(text);
    CHECK(c.model.layers == 2);
    CHECK_FALSE(c.model.env_conditioning);
    CHECK(c.dqn.gamma == 0.9);
    CHECK(c.dqn.snr_grid == std::vector<double>{0, 5, 10});
    CHECK(c.eval.n_bits == 4096);
    CHECK(c.channel.coherence == channel::CoherenceVariant::paper_lambda);

    CHECK(parse_config_text(text).hash() == c.hash());
    CHECK(parse_config_text(text).canonical() == c.canonical());
    CHECK(c.hash() != ExperimentConfig{}.hash());
    // Formatting does not change the hash, values do.
    CHECK(parse_config_text("[dqn]\ngamma=0.99\n").hash() == ExperimentConfig{}.hash());
    CHECK(parse_config_text("[dqn]\ngamma=0.98\n").hash() != ExperimentConfig{}.hash());
}

TEST_CASE("config errors name the key") {
    const std::string range = error_of("[dqn]\ngamma = 1.5\n");
    CHECK(contains(range, "dqn.gamma"));
    CHECK(contains(range, "out of range"));
    CHECK(contains(range, "cfg:2"));
    CHECK(contains(error_of("[dqn]\ngamm = 0.5\n"), "dqn.gamm: unknown key"));
    CHECK(contains(error_of("[bogus]\n"), "unknown section"));
    CHECK(contains(error_of("[model]\nlayers = two\n"), "model.layers"));
    CHECK(contains(error_of("[model]\nlayers = 2.5\n"), "model.layers"));
    CHECK(contains(error_of("[model]\npositional = maybe\n"), "model.positional"));
    CHECK(contains(error_of("[model]\nlayers = 2\nlayers = 3\n"), "set more than once"));
    CHECK(contains(error_of("gamma = 0.5\n"), "outside any section"));
    CHECK(contains(error_of("[dqn]\ngamma\n"), "key = value"));
    CHECK(contains(error_of("[dqn]\ntau = 0\n"), "dqn.tau"));
    CHECK(contains(error_of("[dqn]\nper_alpha = -0.1\n"), "dqn.per_alpha"));
    CHECK(contains(error_of("[dqn]\neps_min = 0.5\neps_init = 0.2\n"), "dqn.eps_min"));
    CHECK(contains(error_of("[channel]\nrho_malaga = 2\n"), "channel.rho_malaga"));
    CHECK(contains(error_of("[model]\nd = 30\n"), "model"));
    CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ConfigError);
    CHECK(load_config("default").hash() == ExperimentConfig{}.hash());
}

TEST_CASE("checkpoint round trip") {
    model::ModelConfig mc;
    mc.T = 4;
    mc.d = 8;
    mc.heads = 2;
    mc.layers = 2;
    mc.d_in = 4;
    RngStream rng(3);
    const auto m = model::AeModel::init(mc, rng);

    Checkpoint ck;
    ck.model = mc;
    ck.enc_layers = 2;
    ck.dec_layers = 2;
    ck.config_hash = 0x0123456789abcdefull;
    ck.seed = 42;
    ck.params = m.params();

    const auto dir = scratch();
    const std::string p1 = (dir / "a.ckpt").string(), p2 = (dir / "b.ckpt").string();
    save_checkpoint(ck, p1);
    const Checkpoint back = load_checkpoint(p1);
    CHECK(back.kind == CheckpointKind::autoencoder);
    CHECK(back.config_hash == ck.config_hash);
    CHECK(back.seed == 42);
    CHECK(back.model.T == 4);
    CHECK(back.model.d_in == 4);
    CHECK(back.params.size() == ck.params.size());
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
        const auto& a = ck.params.entries()[i];
        const auto& b = back.params.entries()[i];
        CHECK(a.name == b.name);
        REQUIRE(a.value.same_shape(b.value));
        for (std::size_t j = 0; j < a.value.size(); ++j) {
            CHECK(static_cast<float>(a.value.data[j]) == static_cast<float>(b.value.data[j]));
            CHECK(b.value.data[j] == static_cast<double>(static_cast<float>(a.value.data[j])));
        }
    }
    save_checkpoint(back, p2);
    CHECK(slurp(p1) == slurp(p2));

    const auto rebuilt = to_model(back);
    CHECK(rebuilt.enc_layers() == 2);
    CHECK(rebuilt.params().size() == m.params().size());

    Checkpoint q;
    q.kind = CheckpointKind::q_network;
    q.model = mc;
    dqn::DqnConfig dc;
    dc.hidden = 8;
    q.params = dqn::q_init(dc, rng);
    const Checkpoint qb = decode_checkpoint(encode_checkpoint(q));
    CHECK(qb.kind == CheckpointKind::q_network);
    CHECK(qb.params.size() == 6);
    CHECK_THROWS_AS(to_model(qb), CheckpointError);

    const std::string bytes = slurp(p1);
    CHECK_THROWS_WITH_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 9)), doctest::Contains("checksum"),
                         CheckpointError);
    std::string flipped = bytes;
    flipped[flipped.size() - 20] ^= 0x10;
    CHECK_THROWS_WITH_AS(decode_checkpoint(flipped), doctest::Contains("checksum"), CheckpointError);
    std::string magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(magic), CheckpointError);
    std::string version = bytes;
    version[5] = 9;
    CHECK_THROWS_AS(decode_checkpoint(version), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), CheckpointError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("report formats") {
    const Provenance p{0xabcull, 7};
    CHECK(csv_preamble(p) == "# config_hash=0000000000000abc seed=7\n");
    CHECK(fmt_double(0.1) == "0.10000000000000001");

    eval::EvalReport rep;
    rep.seed = 7;
    eval::SnrRecord r;
    r.snr_db = 2;
    r.bits = 1000;
    r.errors = 12;
    r.ber = 0.012;
    r.avg_active_layers = 8;
    r.mean_mse = 0.25;
    r.wall_time_s = 3.5;
    rep.records.push_back(r);
    const std::string csv = ber_csv(rep, p);
    CHECK(contains(csv, "snr_db,ber,avg_active_layers,bits,errors,mean_mse,seed\n"));
    CHECK(contains(csv, "\n2,0.012,8,1000,12,0.25,7\n"));
    CHECK_FALSE(contains(csv, "3.5"));

    const std::string js = ber_json(rep, p, {{"autoencoder", "ae.ckpt", 1, 2}}, "x = 1\n");
    CHECK(contains(js, "\"config_hash\""));
    CHECK(contains(js, "ook_theoretical_ber"));
    CHECK(contains(js, "ae.ckpt"));

    std::vector<dqn::EpisodeLog> log = {{0, 1.0, -0.3, 5.0, std::numeric_limits<double>::quiet_NaN()}};
    const std::string dcsv = dqn_log_csv(log, p);
    CHECK(contains(dcsv, "episode,epsilon,reward,avg_layers,loss\n"));
}
