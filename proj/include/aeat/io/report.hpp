#pragma once

// CSV and JSON artifacts. Every file carries the config hash and seed; no
// wall-clock values are written, so equal (config, seed) give equal bytes.

#include <string>
#include <vector>

#include "aeat/dqn/dqn.hpp"
#include "aeat/eval/image.hpp"

namespace aeat::io {

struct Provenance {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

// "# config_hash=<hex> seed=<n>"
std::string csv_preamble(const Provenance& p);
std::string fmt_double(double v);

std::string train_log_csv(const std::vector<train::LogRow>& log, const Provenance& p);
std::string dqn_log_csv(const std::vector<dqn::EpisodeLog>& log, const Provenance& p);
std::string ber_csv(const eval::EvalReport& report, const Provenance& p);

struct CheckpointRef {
    std::string role;  // "autoencoder" or "q_network"
    std::string path;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

std::string ber_json(const eval::EvalReport& report, const Provenance& p, const std::vector<CheckpointRef>& ckpts,
                     const std::string& config_canonical);

void write_file(const std::string& path, const std::string& content);

}  // namespace aeat::io
