#include <doctest.h>

#include <algorithm>
#include <set>

#include "mining/experiment.hpp"

using namespace mining;

namespace {

ExperimentConfig small_config(StrategyMode mode = StrategyMode::Asm) {
    ExperimentConfig c = default_experiment_config();
    c.pool.n = 400;
    c.pool.separation = 4.0;
    c.engine.sgd.learning_rate = 0.01;
    c.engine.batches_per_round = 10;
    c.engine.min_rounds = 4;
    c.engine.max_rounds = 4;
    c.engine.pretrain_epochs = 5;
    c.strategy.mode = mode;
    return c;
}

/// Records every queue and answers from a truth table.
class RecordingAnnotator : public Annotator {
public:
    RecordingAnnotator(TruthTable truth, int m, long budget) : oracle_(std::move(truth), m, budget), inner_(oracle_) {}
    std::vector<AnnotationDecision> annotate(std::span<const QueueItem> queue) override {
        queues.emplace_back(queue.begin(), queue.end());
        return inner_.annotate(queue);
    }
    std::vector<std::vector<QueueItem>> queues;

private:
    SimOracle oracle_;
    OracleAnnotator inner_;
};

/// Answers nothing.
class SilentAnnotator : public Annotator {
public:
    std::vector<AnnotationDecision> annotate(std::span<const QueueItem>) override { return {}; }
};

}  // namespace

TEST_CASE("strategy names and phases") {
    CHECK(parse_strategy_mode("asm") == StrategyMode::Asm);
    CHECK(parse_strategy_mode("SL_THEN_AL") == StrategyMode::SlThenAl);
    CHECK_FALSE(parse_strategy_mode("bogus").has_value());
    for (auto m : {StrategyMode::Asm, StrategyMode::SlOnly, StrategyMode::AlOnly, StrategyMode::Rand,
                   StrategyMode::SlThenAl, StrategyMode::AlThenSl})
        CHECK(parse_strategy_mode(to_string(m)) == m);

    Strategy s{StrategyMode::SlThenAl, 10, 2};
    CHECK(s.self_learning_active(1));
    CHECK_FALSE(s.active_learning_active(1));
    CHECK_FALSE(s.self_learning_active(2));
    CHECK(s.active_learning_active(2));
    Strategy t{StrategyMode::AlThenSl, 10, 2};
    CHECK(t.active_learning_active(0));
    CHECK(t.self_learning_active(3));

    CHECK_THROWS_AS((Strategy{StrategyMode::SlThenAl, 10, std::nullopt}.validate()), InvalidArgument);
    CHECK_THROWS_AS((Strategy{StrategyMode::Asm, 10, 3}.validate()), InvalidArgument);
    CHECK_THROWS_AS((Strategy{StrategyMode::Asm, -1, std::nullopt}.validate()), InvalidArgument);
}

TEST_CASE("self-learning only with zero budget") {
    auto c = small_config(StrategyMode::SlOnly);
    c.explicit_budget = true;
    c.strategy.annotation_budget = 0;
    const auto r = run_oracle_experiment(c);
    CHECK(r.metrics.annotations_used == 0);
    CHECK(r.metrics.pseudo_total > 0);
    for (const auto& rec : r.metrics.records) CHECK(rec.annotated == r.metrics.records.front().annotated);
}

TEST_CASE("iteration cap stops cleanly with a non-empty queue") {
    auto c = small_config();
    c.engine.max_iterations = 25;
    c.engine.max_rounds = 100;
    const auto prep = prepare_run(c);
    auto engine = make_engine(c, prep);
    SilentAnnotator silent;
    const auto m = engine.run(silent);
    CHECK(m.stop == StopReason::StoppedByCap);
    CHECK(engine.iteration() == 25);
    CHECK(m.error.empty());
}

TEST_CASE("divergence aborts with partial metrics") {
    auto c = small_config();
    c.engine.sgd.learning_rate = 1e306;
    c.engine.init_weight_std = 1e3;
    c.engine.pretrain_epochs = 0;
    const auto r = run_oracle_experiment(c);
    CHECK(r.metrics.stop == StopReason::Diverged);
    CHECK_FALSE(r.metrics.error.empty());
}

TEST_CASE("first mini-batch trains on seed annotations only") {
    auto c = small_config();
    const auto prep = prepare_run(c);
    auto engine = make_engine(c, prep);
    const auto batch = engine.next_batch();
    long annotated = 0;
    for (auto id : batch) annotated += membership(engine.curriculum(), id) == Membership::InA;
    const auto s = engine.minibatch_step(batch);
    CHECK(s.trained == annotated);
    CHECK(s.size == static_cast<int>(batch.size()));
    CHECK(engine.minibatch_step(std::span<const SampleId>{}).size == 0);
}

TEST_CASE("batch of rejected samples contributes nothing") {
    auto c = small_config();
    c.pool.undefined_fraction = 0.3;
    const auto prep = prepare_run(c);
    auto engine = make_engine(c, prep);
    std::vector<SampleId> rejected(engine.curriculum().rejected.begin(), engine.curriculum().rejected.end());
    REQUIRE_FALSE(rejected.empty());
    const auto before = engine.parameters().flatten();
    const auto s = engine.minibatch_step(rejected);
    CHECK(s.trained == 0);
    CHECK(s.pseudo == 0);
    CHECK(engine.parameters().flatten() == before);
}

TEST_CASE("assignment is pure") {
    auto c = small_config();
    const auto prep = prepare_run(c);
    auto engine = make_engine(c, prep);
    engine.pretrain();
    const auto batch = engine.next_batch();
    const auto a = engine.assign(batch, true);
    const auto b = engine.assign(batch, true);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].assignment == b[i].assignment);
        CHECK(a[i].pseudo_label == b[i].pseudo_label);
        // selector exclusivity: never both pseudo-labeled and flagged for annotation
        if (a[i].pseudo_label) {
            CHECK(a[i].assignment.u == 0);
            CHECK_FALSE(a[i].ambiguous);
            CHECK(a[i].membership == Membership::Free);
        }
    }
}

TEST_CASE("queue ordering and truncation") {
    auto c = small_config();
    const auto prep = prepare_run(c);
    auto engine = make_engine(c, prep);
    // Every head positive everywhere: every unlabeled sample is ambiguous.
    auto p = engine.parameters();
    p.b1.setConstant(3.0);
    engine.set_parameters(p);
    const auto pass = engine.pool_pass();
    REQUIRE(pass.size() > 50);
    const auto q = engine.build_al_queue(0);
    REQUIRE(q.size() == 50);
    for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i - 1].total_loss >= q[i].total_loss);
    std::vector<double> losses;
    for (const auto& o : pass) losses.push_back(o.total_loss);
    std::sort(losses.rbegin(), losses.rend());
    CHECK(q.back().total_loss >= losses[49]);
    for (const auto& item : q) CHECK(membership(engine.curriculum(), item.id) == Membership::Free);
}

TEST_CASE("self-learning only never queues; random queues only unlabeled ids") {
    auto c = small_config(StrategyMode::SlOnly);
    auto prep = prepare_run(c);
    auto sl = make_engine(c, prep);
    CHECK(sl.build_al_queue(0).empty());

    c.strategy.mode = StrategyMode::Rand;
    auto rnd = make_engine(c, prep);
    const auto q = rnd.build_al_queue(0);
    CHECK(q.size() == 50);
    for (const auto& item : q) CHECK(membership(rnd.curriculum(), item.id) == Membership::Free);
}

TEST_CASE("annotations never exceed the budget and sets stay disjoint") {
    auto c = small_config();
    c.pool.undefined_fraction = 0.2;
    c.explicit_budget = true;
    c.strategy.annotation_budget = 37;
    c.engine.max_rounds = 6;
    c.engine.min_rounds = 6;
    const auto prep = prepare_run(c);
    auto engine = make_engine(c, prep);
    RecordingAnnotator ann(prep.dataset.pool_truth, c.engine.hyper.m, 1000);
    const auto m = engine.run(ann);
    CHECK(m.annotations_used <= 37);
    CHECK(engine.budget_remaining() >= 0);
    for (const auto& [id, cat] : engine.curriculum().annotated) CHECK(engine.curriculum().rejected.count(id) == 0);
    long prev_a = 0, prev_b = 0;
    for (const auto& r : m.records) {
        CHECK(r.annotated >= prev_a);
        CHECK(r.rejected >= prev_b);
        prev_a = r.annotated;
        prev_b = r.rejected;
    }
    for (const auto& r : engine.pool()) {
        const auto mem = membership(engine.curriculum(), r.id);
        if (mem == Membership::InA) CHECK(r.status == SampleStatus::Annotated);
        if (mem == Membership::InB) CHECK(r.status == SampleStatus::Rejected);
    }
}

TEST_CASE("two-phase strategies switch behavior") {
    auto c = small_config(StrategyMode::SlThenAl);
    c.strategy.phase_switch = 2;
    // A confident model so the self-learning phase has something to label.
    c.engine.pretrain_epochs = 30;
    const auto prep = prepare_run(c);
    auto engine = make_engine(c, prep);
    RecordingAnnotator ann(prep.dataset.pool_truth, c.engine.hyper.m, 1000);
    const auto m = engine.run(ann);
    REQUIRE(m.records.size() == 4);
    CHECK(m.records[0].annotated == m.records[1].annotated);
    CHECK(m.records[0].pseudo > 0);
    CHECK(m.records[3].pseudo == 0);
}

TEST_CASE("noise-free full-budget run terminates within the cap") {
    auto c = small_config();
    c.explicit_budget = true;
    c.strategy.annotation_budget = 10000;
    c.engine.min_rounds = 1;
    c.engine.max_rounds = 1000;
    c.engine.max_iterations = 20000;
    const auto r = run_oracle_experiment(c);
    CHECK(r.metrics.stop == StopReason::QueueEmpty);
}

TEST_CASE("identical config and seed give byte-identical metrics") {
    const auto c = small_config();
    const auto a = run_oracle_experiment(c);
    const auto b = run_oracle_experiment(c);
    CHECK(a.metrics_csv == b.metrics_csv);
    CHECK(a.summary_json == b.summary_json);
    const auto other = run_oracle_experiment(with_seed(c, 1));
    CHECK(other.metrics_csv != a.metrics_csv);
}

TEST_CASE("metrics csv columns") {
    const auto r = run_oracle_experiment(small_config());
    const auto header = r.metrics_csv.substr(0, r.metrics_csv.find('\n'));
    CHECK(header == "iteration,annotated,rejected,pseudo,discarded,test_acc,lambda_0,lambda_1,lambda_2,lambda_3");
    CHECK(std::count(r.metrics_csv.begin(), r.metrics_csv.end(), '\n') ==
          static_cast<long>(r.metrics.records.size()) + 1);
}

TEST_CASE("engine is blind to the truth of samples it never queried") {
    auto c = small_config();
    c.pool.undefined_fraction = 0.1;
    const auto prep = prepare_run(c);

    auto e1 = make_engine(c, prep);
    RecordingAnnotator a1(prep.dataset.pool_truth, c.engine.hyper.m, prep.budget);
    const auto m1 = e1.run(a1);

    std::set<SampleId> seen;
    for (const auto& s : prep.seeds) seen.insert(s.id);
    for (const auto& q : a1.queues)
        for (const auto& item : q) seen.insert(item.id);
    // Rotate the truths of never-queried samples among themselves.
    std::vector<SampleId> hidden;
    for (const auto& [id, cat] : prep.dataset.pool_truth.entries())
        if (!seen.count(id)) hidden.push_back(id);
    REQUIRE(hidden.size() > 10);
    TruthTable permuted = prep.dataset.pool_truth;
    for (std::size_t k = 0; k < hidden.size(); ++k)
        permuted.set(hidden[k], *prep.dataset.pool_truth.lookup(hidden[(k + 1) % hidden.size()]));
    REQUIRE_FALSE(permuted == prep.dataset.pool_truth);

    auto e2 = make_engine(c, prep);
    RecordingAnnotator a2(permuted, c.engine.hyper.m, prep.budget);
    const auto m2 = e2.run(a2);
    CHECK(metrics_csv(m1, 4) == metrics_csv(m2, 4));
    CHECK(e1.curriculum() == e2.curriculum());
    CHECK(e1.parameters().flatten() == e2.parameters().flatten());
}

TEST_CASE("engine rejects inconsistent inputs") {
    auto c = small_config();
    const auto prep = prepare_run(c);
    Strategy s = c.strategy;
    std::vector<AnnotationDecision> bad_seed{{999999, 0}};
    CHECK_THROWS_AS(MiningEngine(c.engine, s, prep.dataset.pool, prep.dataset.validation, prep.dataset.test, bad_seed),
                    InvalidArgument);
    CHECK_THROWS_AS(MiningEngine(c.engine, s, {}, prep.dataset.validation, prep.dataset.test, prep.seeds),
                    InvalidArgument);
    auto engine = make_engine(c, prep);
    CHECK_THROWS_AS(engine.set_parameters(ModelParameters::linear(3, 4)), InvalidArgument);
}

TEST_CASE("status observer sees awaiting and done states") {
    auto c = small_config();
    const auto prep = prepare_run(c);
    auto engine = make_engine(c, prep);
    std::vector<EngineState> states;
    long first_annotated = -1;
    engine.set_status_observer([&](const StatusSnapshot& s) {
        if (first_annotated < 0) first_annotated = s.annotated;
        states.push_back(s.state);
    });
    RecordingAnnotator ann(prep.dataset.pool_truth, 4, prep.budget);
    engine.run(ann);
    CHECK(first_annotated == static_cast<long>(prep.seeds.size()));
    CHECK(std::count(states.begin(), states.end(), EngineState::AwaitingLabels) > 0);
    CHECK(states.back() == EngineState::Done);
}
