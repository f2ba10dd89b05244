#include "mining/mining_engine.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mining/dataset_io.hpp"
#include "mining/pseudo_labeler.hpp"

namespace mining {

namespace {

struct ModeName {
    StrategyMode mode;
    const char* name;
};

constexpr ModeName kModeNames[] = {
    {StrategyMode::Asm, "ASM"},           {StrategyMode::SlOnly, "SL_ONLY"},
    {StrategyMode::AlOnly, "AL_ONLY"},    {StrategyMode::Rand, "RAND"},
    {StrategyMode::SlThenAl, "SL_THEN_AL"}, {StrategyMode::AlThenSl, "AL_THEN_SL"},
};

bool two_phase(StrategyMode mode) {
    return mode == StrategyMode::SlThenAl || mode == StrategyMode::AlThenSl;
}

}  // namespace

// ---------------------------------------------------------------------------
// Strategy / config
// ---------------------------------------------------------------------------

const char* to_string(StrategyMode mode) {
    for (const auto& e : kModeNames)
        if (e.mode == mode) return e.name;
    return "?";
}

std::optional<StrategyMode> parse_strategy_mode(std::string_view text) {
    std::string upper(text);
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& e : kModeNames)
        if (upper == e.name) return e.mode;
    return std::nullopt;
}

void Strategy::validate() const {
    if (annotation_budget < 0) throw InvalidArgument("annotation_budget must be >= 0");
    if (two_phase(mode) && !phase_switch)
        throw InvalidArgument("phase_switch is required for " + std::string(to_string(mode)));
    if (!two_phase(mode) && phase_switch)
        throw InvalidArgument("phase_switch is only valid for SL_THEN_AL / AL_THEN_SL");
    if (phase_switch && *phase_switch < 0) throw InvalidArgument("phase_switch must be >= 0");
}

bool Strategy::self_learning_active(int round) const {
    switch (mode) {
        case StrategyMode::Asm:
        case StrategyMode::SlOnly: return true;
        case StrategyMode::AlOnly:
        case StrategyMode::Rand: return false;
        case StrategyMode::SlThenAl: return round < *phase_switch;
        case StrategyMode::AlThenSl: return round >= *phase_switch;
    }
    return false;
}

bool Strategy::active_learning_active(int round) const {
    switch (mode) {
        case StrategyMode::Asm:
        case StrategyMode::AlOnly:
        case StrategyMode::Rand: return true;
        case StrategyMode::SlOnly: return false;
        case StrategyMode::SlThenAl: return round >= *phase_switch;
        case StrategyMode::AlThenSl: return round < *phase_switch;
    }
    return false;
}

void EngineConfig::validate() const {
    hyper.validate();
    sgd.validate();
    if (hidden < 1) throw InvalidArgument("hidden must be >= 1");
    if (!(init_weight_std >= 0.0)) throw InvalidArgument("init_weight_std must be >= 0");
    if (batches_per_round < 1) throw InvalidArgument("batches_per_round must be >= 1");
    if (min_rounds < 1) throw InvalidArgument("min_rounds must be >= 1");
    if (max_rounds < min_rounds) throw InvalidArgument("max_rounds must be >= min_rounds");
    if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
    if (pretrain_epochs < 0) throw InvalidArgument("pretrain_epochs must be >= 0");
}

const char* to_string(StopReason reason) {
    switch (reason) {
        case StopReason::QueueEmpty: return "QUEUE_EMPTY";
        case StopReason::StoppedByCap: return "STOPPED_BY_CAP";
        case StopReason::Diverged: return "DIVERGED";
    }
    return "?";
}

const char* to_string(EngineState state) {
    switch (state) {
        case EngineState::Running: return "RUNNING";
        case EngineState::AwaitingLabels: return "AWAITING_LABELS";
        case EngineState::Done: return "DONE";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double RunMetrics::pseudo_fraction() const {
    return free_visits == 0 ? 0.0 : static_cast<double>(pseudo_total) / static_cast<double>(free_visits);
}

std::string metrics_csv(const RunMetrics& metrics, int m) {
    std::ostringstream out;
    out << "iteration,annotated,rejected,pseudo,discarded,test_acc";
    for (int j = 0; j < m; ++j) out << ",lambda_" << j;
    out << '\n';
    for (const auto& r : metrics.records) {
        out << r.iteration << ',' << r.annotated << ',' << r.rejected << ',' << r.pseudo << ','
            << r.discarded << ',' << format_real(r.test_accuracy);
        for (double l : r.lambda) out << ',' << format_real(l);
        out << '\n';
    }
    return out.str();
}

std::string run_summary_json(const RunMetrics& metrics, const Strategy& strategy,
                             const CurriculumState& curriculum) {
    nlohmann::json j;
    j["strategy"] = to_string(strategy.mode);
    j["annotation_budget"] = strategy.annotation_budget;
    j["stop_reason"] = to_string(metrics.stop);
    if (!metrics.error.empty()) j["error"] = metrics.error;
    j["rounds"] = metrics.records.size();
    j["iterations"] = curriculum.iteration;
    j["annotations_used"] = metrics.annotations_used;
    j["annotated"] = curriculum.annotated.size();
    j["rejected"] = curriculum.rejected.size();
    j["pseudo_total"] = metrics.pseudo_total;
    j["pseudo_fraction"] = metrics.pseudo_fraction();
    j["final_test_accuracy"] = metrics.final_test_accuracy;
    j["lambda"] = curriculum.lambda;
    j["gamma"] = curriculum.gamma;
    if (!metrics.records.empty()) j["validation_accuracy"] = metrics.records.back().validation_accuracy;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

MiningEngine::MiningEngine(EngineConfig config, Strategy strategy, std::vector<SampleRecord> pool,
                           std::vector<LabeledSample> validation, std::vector<LabeledSample> test,
                           std::span<const AnnotationDecision> seeds)
    : config_(std::move(config)),
      strategy_(strategy),
      pool_(std::move(pool)),
      validation_(std::move(validation)),
      test_(std::move(test)),
      optimizer_(config_.sgd),
      rng_(config_.hyper.seed) {
    config_.validate();
    strategy_.validate();
    if (pool_.empty()) throw InvalidArgument("pool is empty");
    if (validation_.empty()) throw InvalidArgument("validation set is empty");
    if (test_.empty()) throw InvalidArgument("test set is empty");

    const int d = static_cast<int>(pool_.front().features.size());
    for (std::size_t i = 0; i < pool_.size(); ++i) {
        if (static_cast<int>(pool_[i].features.size()) != d)
            throw InvalidArgument("pool samples differ in feature dimension");
        if (!index_.emplace(pool_[i].id, i).second)
            throw InvalidArgument("duplicate sample id " + std::to_string(pool_[i].id));
    }
    for (const auto& s : seeds)
        if (!index_.contains(s.id)) throw InvalidArgument("seed id " + std::to_string(s.id) + " not in pool");

    curriculum_ = init_curriculum(config_.hyper, seeds);
    for (auto& r : pool_) {
        switch (membership(curriculum_, r.id)) {
            case Membership::InA:
                r.status = SampleStatus::Annotated;
                r.current_label = LabelVector::positive(config_.hyper.m, curriculum_.annotated.at(r.id));
                break;
            case Membership::InB:
                r.status = SampleStatus::Rejected;
                r.current_label.reset();
                break;
            case Membership::Free:
                r.status = SampleStatus::Unlabeled;
                r.current_label.reset();
                break;
        }
    }

    const int m = config_.hyper.m;
    params_ = config_.representation == Representation::Linear
                  ? ModelParameters::linear(d, m)
                  : ModelParameters::mlp(d, config_.hidden, m);
    params_.randomize(rng_, config_.init_weight_std);
}

void MiningEngine::set_parameters(ModelParameters params) {
    if (params.input_dim != params_.input_dim || params.num_classes != params_.num_classes)
        throw InvalidArgument("parameters do not match pool dimension / class count");
    params_ = std::move(params);
    optimizer_.reset();
}

const SampleRecord& MiningEngine::record(SampleId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw InvalidArgument("unknown sample id " + std::to_string(id));
    return pool_[it->second];
}

SampleRecord& MiningEngine::record(SampleId id) {
    return const_cast<SampleRecord&>(std::as_const(*this).record(id));
}

std::vector<SampleId> MiningEngine::free_ids() const {
    std::vector<SampleId> ids;
    for (const auto& r : pool_)
        if (membership(curriculum_, r.id) == Membership::Free) ids.push_back(r.id);
    return ids;
}

double MiningEngine::test_accuracy() const { return classification_accuracy(params_, test_); }

void MiningEngine::publish(EngineState state) {
    if (!observer_) return;
    StatusSnapshot s;
    s.iteration = curriculum_.iteration;
    s.annotated = static_cast<long>(curriculum_.annotated.size());
    s.rejected = static_cast<long>(curriculum_.rejected.size());
    s.pseudo = pseudo_total_;
    s.budget_remaining = budget_remaining();
    s.test_accuracy = test_accuracy();
    s.state = state;
    observer_(s);
}

void MiningEngine::pretrain() {
    if (pretrained_) return;
    pretrained_ = true;
    std::vector<TrainingExample> seeds;
    const std::vector<double> ones(static_cast<std::size_t>(config_.hyper.m), 1.0);
    for (const auto& r : pool_)
        if (r.status == SampleStatus::Annotated) seeds.push_back({r.features, *r.current_label, ones});
    if (seeds.empty()) return;
    const auto bs = static_cast<std::size_t>(config_.sgd.batch_size);
    for (int epoch = 0; epoch < config_.pretrain_epochs; ++epoch) {
        std::shuffle(seeds.begin(), seeds.end(), rng_);
        for (std::size_t start = 0; start < seeds.size(); start += bs) {
            const auto end = std::min(seeds.size(), start + bs);
            params_ = optimizer_.step(params_, std::span(seeds).subspan(start, end - start));
        }
    }
}

std::vector<SampleId> MiningEngine::next_batch() {
    std::vector<SampleId> batch;
    const auto want = static_cast<std::size_t>(config_.sgd.batch_size);
    std::size_t attempts = 0;
    while (batch.size() < want && attempts < 2 * pool_.size() + want) {
        if (cursor_ >= stream_.size()) {
            stream_.clear();
            for (const auto& r : pool_)
                if (membership(curriculum_, r.id) != Membership::InB) stream_.push_back(r.id);
            if (stream_.empty()) break;
            std::shuffle(stream_.begin(), stream_.end(), rng_);
            cursor_ = 0;
        }
        const SampleId id = stream_[cursor_++];
        ++attempts;
        if (membership(curriculum_, id) == Membership::InB) continue;
        batch.push_back(id);
    }
    return batch;
}

std::vector<SampleOutcome> MiningEngine::assign(std::span<const SampleId> ids,
                                                bool self_learning) const {
    std::vector<SampleOutcome> out;
    out.reserve(ids.size());
    LossMatrix losses;
    const int m = config_.hyper.m;
    for (SampleId id : ids) {
        const auto& r = record(id);
        SampleOutcome o;
        o.id = id;
        o.membership = membership(curriculum_, id);
        o.predictions = predict(params_, r.features);
        const LabelVector label = o.membership == Membership::InA ? *r.current_label
                                  : o.membership == Membership::InB
                                      ? LabelVector::undefined(m)
                                      : most_likely_label(o.predictions);
        std::vector<double> row(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j)
            row[static_cast<std::size_t>(j)] = class_loss(label[j], o.predictions[static_cast<std::size_t>(j)]);
        o.total_loss = std::accumulate(row.begin(), row.end(), 0.0);
        losses.append_row(row);
        out.push_back(std::move(o));
    }
    if (out.empty()) return out;

    const EpsilonValue eps = compute_epsilon(losses, curriculum_.lambda);
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& o = out[i];
        const auto row = losses.row(static_cast<int>(i));
        o.assignment = solve_sample(row, curriculum_.gamma, curriculum_.lambda, eps, o.membership);
        if (o.membership != Membership::Free) continue;
        o.ambiguous = detect_ambiguous(o.predictions);
        if (self_learning && !o.ambiguous && !o.assignment.discarded && o.assignment.u == 0)
            o.pseudo_label = assign_labels(o.predictions, o.assignment.v, 0);
    }
    return out;
}

BatchSummary MiningEngine::minibatch_step(std::span<const SampleId> batch) {
    BatchSummary summary;
    summary.size = static_cast<int>(batch.size());
    if (batch.empty()) return summary;

    // Fine-tune on the batch's annotations plus the previous batch's pseudo-labels.
    std::vector<TrainingExample> examples;
    const std::vector<double> ones(static_cast<std::size_t>(config_.hyper.m), 1.0);
    for (SampleId id : batch) {
        const auto& r = record(id);
        if (membership(curriculum_, id) == Membership::InA)
            examples.push_back({r.features, *r.current_label, ones});
    }
    for (auto& ex : pending_pseudo_) examples.push_back(std::move(ex));
    pending_pseudo_.clear();
    if (!examples.empty()) params_ = optimizer_.step(params_, examples);
    summary.trained = static_cast<int>(examples.size());

    const bool sl = strategy_.self_learning_active(round_);
    auto outcomes = assign(batch, sl);
    for (auto& o : outcomes) {
        if (o.membership != Membership::Free) continue;
        ++free_visits_;
        auto& r = record(o.id);
        r.status = SampleStatus::Unlabeled;
        if (o.assignment.discarded) {
            r.status = SampleStatus::MarginSkipped;
            ++summary.discarded;
        }
        summary.al_flagged += o.assignment.u == 1;
        summary.ambiguous += o.ambiguous;
        if (o.pseudo_label) {
            r.status = SampleStatus::Pseudo;
            pending_pseudo_.push_back({r.features, *o.pseudo_label, o.assignment.v});
            ++summary.pseudo;
        }
    }
    round_pseudo_ += summary.pseudo;
    round_discarded_ += summary.discarded;
    pseudo_total_ += summary.pseudo;
    return summary;
}

std::vector<SampleOutcome> MiningEngine::pool_pass() const {
    const auto ids = free_ids();
    return assign(ids, true);
}

std::vector<QueueItem> MiningEngine::build_al_queue(int round) {
    std::vector<QueueItem> queue;
    if (!strategy_.active_learning_active(round)) return queue;
    const long limit = std::min<long>(config_.hyper.al_batch_size, budget_remaining());
    if (limit <= 0) return queue;

    auto ids = free_ids();
    if (ids.empty()) return queue;
    if (strategy_.mode == StrategyMode::Rand) {
        std::shuffle(ids.begin(), ids.end(), rng_);
        ids.resize(std::min<std::size_t>(ids.size(), static_cast<std::size_t>(limit)));
        for (const auto& o : assign(ids, false))
            queue.push_back({o.id, record(o.id).features, o.predictions, o.total_loss});
        return queue;
    }

    auto outcomes = assign(ids, false);
    std::vector<const SampleOutcome*> picked;
    for (const auto& o : outcomes)
        if (o.assignment.u == 1 || o.ambiguous) picked.push_back(&o);
    std::stable_sort(picked.begin(), picked.end(), [](const SampleOutcome* a, const SampleOutcome* b) {
        return a->total_loss > b->total_loss;
    });
    if (static_cast<long>(picked.size()) > limit) picked.resize(static_cast<std::size_t>(limit));
    for (const auto* o : picked) queue.push_back({o->id, record(o->id).features, o->predictions, o->total_loss});
    return queue;
}

long MiningEngine::apply_decisions(std::span<const AnnotationDecision> decisions) {
    long committed = 0;
    const int m = config_.hyper.m;
    for (const auto& d : decisions) {
        if (budget_remaining() <= 0) break;
        auto& r = record(d.id);
        try {
            curriculum_ = commit_decision(std::move(curriculum_), d);
        } catch (const ConflictingAnnotation&) {
            continue;
        }
        if (d.is_rejection()) {
            r.status = SampleStatus::Rejected;
            r.current_label.reset();
        } else {
            r.status = SampleStatus::Annotated;
            r.current_label = LabelVector::positive(m, *d.label);
        }
        ++annotations_used_;
        ++committed;
    }
    return committed;
}

void MiningEngine::maybe_update_lambda() {
    if (curriculum_.iteration % config_.hyper.beta != 0) return;
    const auto acc = validation_accuracy(params_, validation_);
    curriculum_ = update_lambda(std::move(curriculum_), acc, config_.hyper.alpha, config_.hyper.tau);
}

RunMetrics MiningEngine::run(Annotator& annotator) {
    RunMetrics metrics;
    const double base_gamma = curriculum_.gamma;
    try {
        pretrain();
        publish(EngineState::Running);
        for (round_ = 0;; ++round_) {
            if (config_.gamma_schedule) curriculum_.gamma = config_.gamma_schedule(round_, base_gamma);
            round_pseudo_ = 0;
            round_discarded_ = 0;
            bool capped = false;
            for (int t = 0; t < config_.batches_per_round; ++t) {
                if (curriculum_.iteration >= config_.max_iterations) {
                    capped = true;
                    break;
                }
                const auto batch = next_batch();
                minibatch_step(batch);
                ++curriculum_.iteration;
                maybe_update_lambda();
                publish(EngineState::Running);
            }

            const auto queue = capped ? std::vector<QueueItem>{} : build_al_queue(round_);
            if (!queue.empty()) {
                publish(EngineState::AwaitingLabels);
                const auto decisions = annotator.annotate(queue);
                std::vector<AnnotationDecision> valid;
                for (const auto& d : decisions) {
                    const bool queued = std::any_of(queue.begin(), queue.end(),
                                                    [&](const QueueItem& q) { return q.id == d.id; });
                    if (queued && (!d.label || (*d.label >= 0 && *d.label < config_.hyper.m)))
                        valid.push_back(d);
                }
                apply_decisions(valid);
                publish(EngineState::Running);
            }

            IterationRecord rec;
            rec.iteration = curriculum_.iteration;
            rec.round = round_;
            rec.annotated = static_cast<long>(curriculum_.annotated.size());
            rec.rejected = static_cast<long>(curriculum_.rejected.size());
            rec.pseudo = round_pseudo_;
            rec.discarded = round_discarded_;
            rec.test_accuracy = test_accuracy();
            rec.validation_accuracy = validation_accuracy(params_, validation_);
            rec.lambda = curriculum_.lambda;
            metrics.records.push_back(std::move(rec));

            if (capped || round_ + 1 >= config_.max_rounds) {
                metrics.stop = StopReason::StoppedByCap;
                break;
            }
            if (queue.empty() && strategy_.active_learning_active(round_) &&
                round_ + 1 >= config_.min_rounds) {
                metrics.stop = StopReason::QueueEmpty;
                break;
            }
        }
    } catch (const TrainingDiverged& e) {
        metrics.stop = StopReason::Diverged;
        metrics.error = e.what();
    }
    metrics.annotations_used = annotations_used_;
    metrics.pseudo_total = pseudo_total_;
    metrics.free_visits = free_visits_;
    metrics.final_test_accuracy = test_accuracy();
    publish(EngineState::Done);
    return metrics;
}

}  // namespace mining
