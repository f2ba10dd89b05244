#include "mining/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "mining/dataset_io.hpp"

namespace mining {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

PreparedRun prepare_run(const ExperimentConfig& config) {
    const auto& hyper = config.engine.hyper;
    PreparedRun run;
    if (config.dataset_csv.empty()) {
        run.dataset = make_synthetic_pool(config.pool);
    } else {
        run.dataset = split_dataset(read_dataset_csv(config.dataset_csv), hyper.m, config.pool.seed);
    }
    run.dataset.pool_truth =
        inject_label_noise(run.dataset.pool_truth, hyper.m, config.noise_fraction, hyper.seed ^ 0x4015eULL);

    const auto& pool = run.dataset.pool;
    std::vector<SampleId> ids;
    ids.reserve(pool.size());
    for (const auto& r : pool) ids.push_back(r.id);
    std::mt19937_64 rng(hyper.seed ^ 0x5eedULL);
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto seed_count =
        static_cast<std::size_t>(std::lround(config.seed_fraction * static_cast<double>(pool.size())));
    const SimOracle seeder(run.dataset.pool_truth, hyper.m, 0);
    for (std::size_t k = 0; k < std::min(seed_count, ids.size()); ++k)
        if (auto d = seeder.seed_decision(ids[k])) run.seeds.push_back(*d);

    run.budget = config.explicit_budget
                     ? config.strategy.annotation_budget
                     : std::lround(config.budget_fraction * static_cast<double>(pool.size()));
    return run;
}

MiningEngine make_engine(const ExperimentConfig& config, const PreparedRun& run) {
    Strategy strategy = config.strategy;
    strategy.annotation_budget = run.budget;
    MiningEngine engine(config.engine, strategy, run.dataset.pool, run.dataset.validation,
                        run.dataset.test, run.seeds);
    if (!config.initial_checkpoint.empty()) engine.set_parameters(load_checkpoint(config.initial_checkpoint));
    return engine;
}

std::vector<AnnotationDecision> OracleAnnotator::annotate(std::span<const QueueItem> queue) {
    std::vector<AnnotationDecision> decisions;
    for (const auto& item : queue) {
        const auto answer = oracle_.annotate(item.id);
        if (answer.outcome == OracleOutcome::BudgetExhausted) break;
        if (answer.outcome == OracleOutcome::Unavailable) continue;
        if (answer.outcome == OracleOutcome::Reject) decisions.push_back({item.id, std::nullopt});
        else decisions.push_back({item.id, answer.category});
    }
    return decisions;
}

ExperimentResult run_oracle_experiment(const ExperimentConfig& config) {
    const PreparedRun run = prepare_run(config);
    MiningEngine engine = make_engine(config, run);
    SimOracle oracle(run.dataset.pool_truth, config.engine.hyper.m, run.budget);
    OracleAnnotator annotator(oracle);

    ExperimentResult result;
    result.metrics = engine.run(annotator);
    result.curriculum = engine.curriculum();
    result.parameters = engine.parameters();
    result.final_pass = engine.pool_pass();
    result.metrics_csv = metrics_csv(result.metrics, config.engine.hyper.m);
    Strategy strategy = config.strategy;
    strategy.annotation_budget = run.budget;
    result.summary_json = run_summary_json(result.metrics, strategy, result.curriculum);
    return result;
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
    if (const char* env = std::getenv("ASM_OUTPUT_DIR"); env && *env) return env;
    return config.output_dir;
}

void write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / "metrics.csv", result.metrics_csv);
    write_text(dir / "summary.json", result.summary_json);
    write_text(dir / "curriculum.json", to_json(result.curriculum) + "\n");
    save_checkpoint(result.parameters, dir / "model.asmw");
}

std::string describe_plan(const ExperimentConfig& config) {
    std::ostringstream out;
    const auto& h = config.engine.hyper;
    if (config.dataset_csv.empty()) {
        out << "pool: synthetic n=" << config.pool.n << " m=" << config.pool.m << " d=" << config.pool.d
            << " separation=" << format_real(config.pool.separation)
            << " undefined_fraction=" << format_real(config.pool.undefined_fraction) << '\n';
    } else {
        out << "pool: " << config.dataset_csv.string() << '\n';
    }
    out << "split: 70% pool / 10% validation / 20% test, seeds "
        << format_real(config.seed_fraction) << " of pool, noise " << format_real(config.noise_fraction)
        << '\n'
        << "strategy: " << to_string(config.strategy.mode) << ", budget "
        << (config.explicit_budget ? std::to_string(config.strategy.annotation_budget)
                                   : format_real(config.budget_fraction) + " of pool");
    if (config.strategy.phase_switch) out << ", phase switch at round " << *config.strategy.phase_switch;
    out << '\n'
        << "hyper: m=" << h.m << " lambda0=" << format_real(h.lambda0) << " gamma=" << format_real(h.gamma())
        << " alpha=" << format_real(h.alpha) << " tau=" << h.tau << " beta=" << h.beta
        << " al_batch_size=" << h.al_batch_size << " seed=" << h.seed << '\n'
        << "learner: " << (config.engine.representation == Representation::Linear ? "linear" : "mlp");
    if (config.engine.representation == Representation::Mlp) out << " hidden=" << config.engine.hidden;
    out << " lr=" << format_real(config.engine.sgd.learning_rate)
        << " momentum=" << format_real(config.engine.sgd.momentum)
        << " weight_decay=" << format_real(config.engine.sgd.weight_decay)
        << " batch=" << config.engine.sgd.batch_size << '\n'
        << "loop: " << config.engine.batches_per_round << " mini-batches per round, rounds "
        << config.engine.min_rounds << ".." << config.engine.max_rounds << ", iteration cap "
        << config.engine.max_iterations << '\n'
        << "output: " << resolve_output_dir(config).string() << '\n';
    return out.str();
}

ExperimentConfig with_seed(ExperimentConfig config, std::uint64_t seed) {
    config.pool.seed = seed;
    config.engine.hyper.seed = seed;
    return config;
}

std::optional<SweepParameter> parse_sweep_parameter(std::string_view text) {
    if (text == "lambda0") return SweepParameter::Lambda0;
    if (text == "gamma_factor") return SweepParameter::GammaFactor;
    return std::nullopt;
}

const char* to_string(SweepParameter parameter) {
    return parameter == SweepParameter::Lambda0 ? "lambda0" : "gamma_factor";
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, SweepParameter parameter,
                                std::span<const double> values, std::span<const std::uint64_t> seeds) {
    if (values.empty()) throw InvalidArgument("sweep needs at least one value");
    if (seeds.empty()) throw InvalidArgument("sweep needs at least one seed");
    std::vector<SweepRow> rows;
    for (double value : values) {
        for (std::uint64_t seed : seeds) {
            SweepRow row;
            row.value = value;
            row.seed = seed;
            try {
                ExperimentConfig cell = with_seed(base, seed);
                if (parameter == SweepParameter::Lambda0) cell.engine.hyper.lambda0 = value;
                else cell.engine.hyper.gamma_factor = value;
                cell.validate();
                const auto result = run_oracle_experiment(cell);
                row.annotations_used = result.metrics.annotations_used;
                row.pseudo_fraction = result.metrics.pseudo_fraction();
                row.final_accuracy = result.metrics.final_test_accuracy;
                row.status = to_string(result.metrics.stop);
            } catch (const std::exception& e) {
                row.status = "FAILED";
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string sweep_csv(SweepParameter parameter, std::span<const SweepRow> rows) {
    std::ostringstream out;
    out << to_string(parameter) << ",seed,annotations_used,pseudo_fraction,final_accuracy,status\n";
    for (const auto& r : rows)
        out << format_real(r.value) << ',' << r.seed << ',' << r.annotations_used << ','
            << format_real(r.pseudo_fraction) << ',' << format_real(r.final_accuracy) << ',' << r.status
            << '\n';
    return out.str();
}

}  // namespace mining
