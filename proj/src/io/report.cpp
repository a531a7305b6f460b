#include "aeat/io/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "aeat/eval/baselines.hpp"
#include "aeat/io/config.hpp"
#include "json.hpp"

namespace aeat::io {

std::string csv_preamble(const Provenance& p) {
    return "# config_hash=" + hex64(p.config_hash) + " seed=" + std::to_string(p.seed) + "\n";
}

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string train_log_csv(const std::vector<train::LogRow>& log, const Provenance& p) {
    std::string out = csv_preamble(p) + "epoch,step,bce,lr\n";
    for (const auto& r : log) {
        out += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + fmt_double(r.bce) + "," +
               fmt_double(r.lr) + "\n";
    }
    return out;
}

std::string dqn_log_csv(const std::vector<dqn::EpisodeLog>& log, const Provenance& p) {
    std::string out = csv_preamble(p) + "episode,epsilon,reward,avg_layers,loss\n";
    for (const auto& r : log) {
        out += std::to_string(r.episode) + "," + fmt_double(r.epsilon) + "," + fmt_double(r.reward) + "," +
               fmt_double(r.avg_layers) + "," + fmt_double(r.loss) + "\n";
    }
    return out;
}

std::string ber_csv(const eval::EvalReport& report, const Provenance& p) {
    std::string out = csv_preamble(p) + "snr_db,ber,avg_active_layers,bits,errors,mean_mse,seed\n";
    for (const auto& r : report.records) {
        out += fmt_double(r.snr_db) + "," + fmt_double(r.ber) + "," + fmt_double(r.avg_active_layers) + "," +
               std::to_string(r.bits) + "," + std::to_string(r.errors) + "," + fmt_double(r.mean_mse) + "," +
               std::to_string(report.seed) + "\n";
    }
    return out;
}

std::string ber_json(const eval::EvalReport& report, const Provenance& p, const std::vector<CheckpointRef>& ckpts,
                     const std::string& config_canonical) {
    nlohmann::ordered_json j;
    j["config_hash"] = hex64(p.config_hash);
    j["seed"] = p.seed;
    j["snr_convention"] = {
        {"definition", "SNR_dB = 20 log10(amplitude * E[h] / sigma_w); receiver scales by 1 / (amplitude * E[h])"},
        {"mean_h", report.mean_h},
        {"sigma_w", report.sigma_w},
        {"ook_reference", "Q(sqrt(SNR_lin) / 2), on-off levels with mid-point threshold over AWGN"},
    };
    auto& cks = j["checkpoints"] = nlohmann::ordered_json::array();
    for (const auto& c : ckpts) {
        cks.push_back({{"role", c.role}, {"path", c.path}, {"config_hash", hex64(c.config_hash)}, {"seed", c.seed}});
    }
    auto& recs = j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : report.records) {
        recs.push_back({{"snr_db", r.snr_db},
                        {"ber", r.ber},
                        {"avg_active_layers", r.avg_active_layers},
                        {"bits", r.bits},
                        {"errors", r.errors},
                        {"mean_mse", r.mean_mse},
                        {"seed", report.seed},
                        {"amplitude", r.amplitude},
                        {"ook_theoretical_ber", eval::ook_theoretical_ber(r.snr_db)}});
    }
    j["config"] = config_canonical;
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace aeat::io
