#pragma once

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mining/core_model.hpp"
#include "mining/curriculum.hpp"
#include "mining/learner.hpp"
#include "mining/minmax_solver.hpp"

namespace mining {

enum class StrategyMode { Asm, SlOnly, AlOnly, Rand, SlThenAl, AlThenSl };

const char* to_string(StrategyMode mode);
/// Accepts ASM, SL_ONLY, AL_ONLY, RAND, SL_THEN_AL, AL_THEN_SL (case-insensitive).
std::optional<StrategyMode> parse_strategy_mode(std::string_view text);

struct Strategy {
    StrategyMode mode = StrategyMode::Asm;
    long annotation_budget = 0;
    /// Round index at which the two-phase modes switch; required for them only.
    std::optional<int> phase_switch;

    void validate() const;
    bool self_learning_active(int round) const;
    bool active_learning_active(int round) const;
};

struct EngineConfig {
    Hyperparameters hyper;
    SgdConfig sgd;
    Representation representation = Representation::Linear;
    int hidden = 32;
    double init_weight_std = 0.1;
    /// Mini-batches per AL round.
    int batches_per_round = 50;
    /// An empty queue ends the run only from this round count on.
    int min_rounds = 1;
    int max_rounds = 1000;
    long max_iterations = 100000;
    /// Epochs over the seed annotations before mining starts.
    int pretrain_epochs = 20;
    /// Optional gamma per round; receives the round index and the configured gamma.
    std::function<double(int, double)> gamma_schedule;

    void validate() const;
};

/// One queried sample as published to annotators.
struct QueueItem {
    SampleId id = 0;
    std::vector<double> features;
    std::vector<double> predictions;
    double total_loss = 0.0;
};

/// Source of user decisions for a queue. Items left unanswered expire.
class Annotator {
public:
    virtual ~Annotator() = default;
    virtual std::vector<AnnotationDecision> annotate(std::span<const QueueItem> queue) = 0;
};

enum class StopReason { QueueEmpty, StoppedByCap, Diverged };
const char* to_string(StopReason reason);

enum class EngineState { Running, AwaitingLabels, Done };
const char* to_string(EngineState state);

struct StatusSnapshot {
    long iteration = 0;
    long annotated = 0;
    long rejected = 0;
    long pseudo = 0;
    long budget_remaining = 0;
    double test_accuracy = 0.0;
    EngineState state = EngineState::Running;
};

/// One row per AL round.
struct IterationRecord {
    long iteration = 0;
    int round = 0;
    long annotated = 0;
    long rejected = 0;
    long pseudo = 0;
    long discarded = 0;
    double test_accuracy = 0.0;
    std::vector<double> validation_accuracy;
    std::vector<double> lambda;
};

struct RunMetrics {
    std::vector<IterationRecord> records;
    StopReason stop = StopReason::QueueEmpty;
    std::string error;
    long annotations_used = 0;
    long pseudo_total = 0;
    long free_visits = 0;
    double final_test_accuracy = 0.0;

    /// Pseudo-label assignments per visit of an unlabeled sample.
    double pseudo_fraction() const;
};

/// Stable column order: iteration, annotated, rejected, pseudo, discarded,
/// test_acc, lambda_0..lambda_{m-1}.
std::string metrics_csv(const RunMetrics& metrics, int m);
std::string run_summary_json(const RunMetrics& metrics, const Strategy& strategy,
                             const CurriculumState& curriculum);

struct BatchSummary {
    int size = 0;
    int trained = 0;
    int pseudo = 0;
    int discarded = 0;
    int al_flagged = 0;
    int ambiguous = 0;
};

/// Latent solve for one sample during a batch or a pool pass.
struct SampleOutcome {
    SampleId id = 0;
    Membership membership = Membership::Free;
    std::vector<double> predictions;
    double total_loss = 0.0;
    LatentAssignment assignment;
    bool ambiguous = false;
    /// Set when the sample would be pseudo-labeled.
    std::optional<LabelVector> pseudo_label;
};

/**
 * Runs the alternating mining loop: per mini-batch fine-tune -> latent solve ->
 * pseudo-label, then one AL round, with lambda advanced every beta mini-batches.
 *
 * The engine never sees ground truth: the pool carries features only and all
 * labels arrive through the Annotator.
 */
class MiningEngine {
public:
    MiningEngine(EngineConfig config, Strategy strategy, std::vector<SampleRecord> pool,
                 std::vector<LabeledSample> validation, std::vector<LabeledSample> test,
                 std::span<const AnnotationDecision> seeds);

    /// Replaces the randomly initialized parameters, e.g. from a checkpoint.
    void set_parameters(ModelParameters params);
    void pretrain();

    RunMetrics run(Annotator& annotator);

    BatchSummary minibatch_step(std::span<const SampleId> batch);

    /// Latent solve over the given ids at the current parameters; epsilon is
    /// taken over the ids' joint loss matrix. Pure.
    std::vector<SampleOutcome> assign(std::span<const SampleId> ids, bool self_learning) const;

    /// Queue for the round: u = 1 or ambiguous samples by descending total loss
    /// (ASM/AL phases), random unlabeled samples (RAND), or empty.
    std::vector<QueueItem> build_al_queue(int round);

    /// Applies decisions for queued ids; returns the number committed.
    long apply_decisions(std::span<const AnnotationDecision> decisions);

    /// Pool pass at the current parameters over every unlabeled sample.
    std::vector<SampleOutcome> pool_pass() const;

    std::vector<SampleId> next_batch();

    void set_status_observer(std::function<void(const StatusSnapshot&)> observer) {
        observer_ = std::move(observer);
    }

    const ModelParameters& parameters() const { return params_; }
    const CurriculumState& curriculum() const { return curriculum_; }
    const std::vector<SampleRecord>& pool() const { return pool_; }
    long iteration() const { return curriculum_.iteration; }
    long budget_remaining() const { return strategy_.annotation_budget - annotations_used_; }
    double test_accuracy() const;

private:
    const SampleRecord& record(SampleId id) const;
    SampleRecord& record(SampleId id);
    std::vector<SampleId> free_ids() const;
    void publish(EngineState state);
    void maybe_update_lambda();

    EngineConfig config_;
    Strategy strategy_;
    std::vector<SampleRecord> pool_;
    std::unordered_map<SampleId, std::size_t> index_;
    std::vector<LabeledSample> validation_;
    std::vector<LabeledSample> test_;
    CurriculumState curriculum_;
    ModelParameters params_;
    SgdOptimizer optimizer_;
    std::mt19937_64 rng_;

    std::vector<SampleId> stream_;
    std::size_t cursor_ = 0;
    std::vector<TrainingExample> pending_pseudo_;
    int round_ = 0;
    long annotations_used_ = 0;
    long round_pseudo_ = 0;
    long round_discarded_ = 0;
    long pseudo_total_ = 0;
    long free_visits_ = 0;
    bool pretrained_ = false;
    std::function<void(const StatusSnapshot&)> observer_;
};

}  // namespace mining
