#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "msep/taskgen.hpp"

namespace msep::cli {

/// One bag of knobs for every subcommand; unused fields are ignored.
struct RunConfig {
    std::string command;
    std::size_t n = 32;
    double theta = -1.0; // < 0 means n^-0.5
    std::size_t k = 0;   // 0 means n^3
    std::uint64_t seed = 1;
    bool seed_set = false;
    bool strict_seed = false;
    std::size_t trials = 100;
    double tau = 0.25;
    std::size_t max_weight = 6;
    std::uint64_t budget = 4000;
    std::size_t pairs = 50;       // probe dataset size per trial
    std::size_t sessions = 200;   // ba / adversary sessions
    std::size_t m_sessions = 128; // ka repetitions
    std::size_t key_len = 64;
    std::string rule = "threshold"; // or "exact"
    std::string out;
    std::string format = "json"; // json | csv
    bool check = false;
    double min_agreement = 0.9;
    double min_key_rate = 0.95;
    std::string dataset;          // learn: input file
    std::string n_grid = "12,24,48";
    bool jsonl = false;
    unsigned threads = 0; // 0 = hardware concurrency
    std::string config_path;
};

taskgen::TaskParams task_params(const RunConfig& cfg);

nlohmann::json run_gen_data(const RunConfig& cfg);
nlohmann::json run_learn(const RunConfig& cfg);
nlohmann::json run_probe_hardness(const RunConfig& cfg);
nlohmann::json run_ba(const RunConfig& cfg);
nlohmann::json run_ka(const RunConfig& cfg);
nlohmann::json run_reduce(const RunConfig& cfg);

/// Runs the configured subcommand and attaches the meta block (the only
/// non-deterministic part of a report).
nlohmann::json dispatch(const RunConfig& cfg);

/// Flattens a report into "key,value" lines; meta is skipped.
std::string to_csv(const nlohmann::json& report);

/// Whether the report's self-check block passed (true when absent).
bool check_passed(const nlohmann::json& report);

} // namespace msep::cli
