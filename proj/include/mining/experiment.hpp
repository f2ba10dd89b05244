#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mining/config.hpp"
#include "mining/mining_engine.hpp"
#include "mining/sim_oracle.hpp"

namespace mining {

/// Data and seed annotations for one run, before the engine exists.
struct PreparedRun {
    /// pool_truth holds the truth the oracle answers with, noise included.
    Dataset dataset;
    std::vector<AnnotationDecision> seeds;
    long budget = 0;
};

/// Builds or loads the pool, injects label noise, and draws the seed set.
PreparedRun prepare_run(const ExperimentConfig& config);

/// Engine over a prepared run, with the checkpoint loaded if configured.
MiningEngine make_engine(const ExperimentConfig& config, const PreparedRun& run);

/// Answers queues from a SimOracle; stops at budget exhaustion and skips ids
/// whose truth is withheld.
class OracleAnnotator : public Annotator {
public:
    explicit OracleAnnotator(SimOracle& oracle) : oracle_(oracle) {}
    std::vector<AnnotationDecision> annotate(std::span<const QueueItem> queue) override;

private:
    SimOracle& oracle_;
};

struct ExperimentResult {
    RunMetrics metrics;
    CurriculumState curriculum;
    ModelParameters parameters;
    /// Latent solve over the remaining unlabeled pool at the final parameters.
    std::vector<SampleOutcome> final_pass;
    std::string metrics_csv;
    std::string summary_json;
};

/// Runs one experiment end to end against the simulated oracle.
ExperimentResult run_oracle_experiment(const ExperimentConfig& config);

/// Output directory after applying the ASM_OUTPUT_DIR override.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

/// Writes metrics.csv, summary.json, curriculum.json and model.asmw.
void write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir);

/// Human-readable plan printed by --dry-run.
std::string describe_plan(const ExperimentConfig& config);

/// Same config with both the pool seed and the run seed set to `seed`.
ExperimentConfig with_seed(ExperimentConfig config, std::uint64_t seed);

enum class SweepParameter { Lambda0, GammaFactor };
std::optional<SweepParameter> parse_sweep_parameter(std::string_view text);
const char* to_string(SweepParameter parameter);

struct SweepRow {
    double value = 0.0;
    std::uint64_t seed = 0;
    long annotations_used = 0;
    double pseudo_fraction = 0.0;
    double final_accuracy = 0.0;
    /// Stop reason of the cell, or FAILED when the cell threw.
    std::string status;
    std::string error;
};

/// One run per (value, seed) in row-major order; failing cells are recorded
/// and the sweep continues.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, SweepParameter parameter,
                                std::span<const double> values, std::span<const std::uint64_t> seeds);

/// Columns: value, seed, annotations_used, pseudo_fraction, final_accuracy, status.
std::string sweep_csv(SweepParameter parameter, std::span<const SweepRow> rows);

}  // namespace mining
