#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "mining/mining_engine.hpp"
#include "mining/sim_oracle.hpp"

namespace mining {

/// Invalid configuration; `key()` is "section.key" of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct ServiceConfig {
    int port = 8764;
    std::string host = "127.0.0.1";
    /// Seconds the engine waits at a round boundary before queued items expire.
    double timeout_seconds = 300.0;
    /// JSONL file receiving every accepted decision; empty disables logging.
    std::filesystem::path decision_log;
    /// Directory holding the static UI bundle served at /.
    std::filesystem::path ui_dir;
};

/// Everything one run needs. Defaults are the documented settings, with the
/// reference 4-class synthetic pool as data source.
struct ExperimentConfig {
    SyntheticPoolSpec pool;
    /// When set, the pool is read from this dataset CSV instead of generated.
    std::filesystem::path dataset_csv;
    /// Fraction of the training pool annotated up front, outside the budget.
    double seed_fraction = 0.1;
    /// Fraction of each category's truth flipped before the oracle sees it.
    double noise_fraction = 0.0;
    /// Budget as a fraction of the training pool, used unless
    /// strategy.annotation_budget is given explicitly.
    double budget_fraction = 0.2;
    bool explicit_budget = false;

    EngineConfig engine;
    Strategy strategy;

    /// Optional learner checkpoint to start from instead of random init.
    std::filesystem::path initial_checkpoint;
    std::filesystem::path output_dir = "asm_output";
    ServiceConfig service;

    /// Throws ConfigError naming the first invalid key.
    void validate() const;
};

/// The reference configuration: m=4 synthetic pool with desk-scale defaults.
ExperimentConfig default_experiment_config();

/**
 * Reads an INI config with sections [pool], [hyper], [learner], [strategy],
 * [output] and [service]. Missing keys keep their defaults; unknown sections or
 * keys and unparsable values raise ConfigError naming the key.
 */
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& in);

/// Resolved config as INI text; parse_config(render_config(c)) reproduces c.
std::string render_config(const ExperimentConfig& config);

}  // namespace mining
