#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "mining/annotation_service.hpp"
#include "mining/dataset_io.hpp"
#include "mining/experiment.hpp"

namespace {

using namespace mining;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

ExperimentConfig load_or_default(const std::string& path) {
    return path.empty() ? default_experiment_config() : load_config(path);
}

int cmd_run(const std::string& config_path, bool dry_run) {
    const ExperimentConfig config = load_or_default(config_path);
    if (dry_run) {
        std::cout << describe_plan(config) << "\n" << render_config(config);
        return 0;
    }
    const auto result = run_oracle_experiment(config);
    const auto dir = resolve_output_dir(config);
    write_artifacts(result, dir);
    std::cout << "stop: " << to_string(result.metrics.stop) << ", annotations used "
              << result.metrics.annotations_used << ", final test accuracy "
              << format_real(result.metrics.final_test_accuracy) << "\n"
              << "artifacts in " << dir.string() << "\n";
    if (result.metrics.stop == StopReason::Diverged) {
        std::cerr << "error: " << result.metrics.error << "\n";
        return kExitRuntime;
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param, const std::vector<double>& values,
              const std::vector<std::uint64_t>& seeds, std::string out_path) {
    const ExperimentConfig config = load_or_default(config_path);
    const auto parameter = parse_sweep_parameter(param);
    if (!parameter) throw ConfigError("param", "expected lambda0 or gamma_factor, got '" + param + "'");
    const auto rows = run_sweep(config, *parameter, values, seeds);
    const auto csv = sweep_csv(*parameter, rows);
    if (out_path.empty()) {
        const auto dir = resolve_output_dir(config);
        std::filesystem::create_directories(dir);
        out_path = (dir / "sweep.csv").string();
    }
    std::ofstream(out_path, std::ios::binary | std::ios::trunc) << csv;
    std::cout << csv;
    for (const auto& r : rows)
        if (!r.error.empty()) std::cerr << "cell " << format_real(r.value) << "/" << r.seed << ": " << r.error << "\n";
    return 0;
}

int cmd_serve(const std::string& config_path, std::optional<int> port, const std::string& decision_log,
              const std::string& ui_dir, std::optional<double> timeout, bool exit_when_done) {
    ExperimentConfig config = load_or_default(config_path);
    if (port) config.service.port = *port;
    if (!decision_log.empty()) config.service.decision_log = decision_log;
    if (!ui_dir.empty()) config.service.ui_dir = ui_dir;
    if (timeout) config.service.timeout_seconds = *timeout;
    config.validate();

    const PreparedRun run = prepare_run(config);
    MiningEngine engine = make_engine(config, run);
    AnnotationService service(config.service, config.engine.hyper.m);
    engine.set_status_observer([&service](const StatusSnapshot& s) { service.update_status(s); });
    const int bound = service.start();
    std::cout << "serving on http://" << config.service.host << ":" << bound << "/" << std::endl;

    const RunMetrics metrics = engine.run(service.annotator());
    ExperimentResult result;
    result.metrics = metrics;
    result.curriculum = engine.curriculum();
    result.parameters = engine.parameters();
    result.metrics_csv = metrics_csv(metrics, config.engine.hyper.m);
    Strategy strategy = config.strategy;
    strategy.annotation_budget = run.budget;
    result.summary_json = run_summary_json(metrics, strategy, result.curriculum);
    const auto dir = resolve_output_dir(config);
    write_artifacts(result, dir);
    std::cout << "run finished: " << to_string(metrics.stop) << ", artifacts in " << dir.string() << std::endl;

    if (!exit_when_done) {
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cout << "status stays available until interrupted" << std::endl;
        while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    service.stop();
    return metrics.stop == StopReason::Diverged ? kExitRuntime : 0;
}

int cmd_gen_pool(const SyntheticPoolSpec& spec, const std::string& out) {
    const auto rows = make_synthetic_rows(spec);
    if (out.empty() || out == "-") write_dataset_csv(std::cout, rows);
    else write_dataset_csv(std::filesystem::path(out), rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active sample mining: switchable self-learning / active-learning sample selection"};
    app.require_subcommand(1);

    std::string config_path;
    bool dry_run = false;
    auto* run = app.add_subcommand("run", "Run one experiment against the simulated oracle");
    run->add_option("-c,--config", config_path, "INI config file (defaults when omitted)");
    run->add_flag("--dry-run", dry_run, "Validate the config and print the resolved plan");

    std::string param;
    std::vector<double> values;
    std::vector<std::uint64_t> seeds{0};
    std::string sweep_out;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep->add_option("-c,--config", config_path, "INI config file");
    sweep->add_option("--param", param, "lambda0 or gamma_factor")->required();
    sweep->add_option("--values", values, "Parameter values")->required()->delimiter(',');
    sweep->add_option("--seeds", seeds, "Seeds")->delimiter(',');
    sweep->add_option("-o,--out", sweep_out, "Sweep CSV path (default: <output dir>/sweep.csv)");

    std::optional<int> port;
    std::string decision_log;
    std::string ui_dir;
    std::optional<double> timeout;
    bool exit_when_done = false;
    auto* serve = app.add_subcommand("serve", "Run with the HTTP annotation service as annotator");
    serve->add_option("-c,--config", config_path, "INI config file");
    serve->add_option("--port", port, "Port (default 8764)");
    serve->add_option("--decision-log", decision_log, "JSONL file receiving accepted decisions");
    serve->add_option("--ui-dir", ui_dir, "Static UI bundle served at /");
    serve->add_option("--timeout", timeout, "Seconds to wait for labels per round");
    serve->add_flag("--exit-when-done", exit_when_done, "Exit once the run finishes");

    SyntheticPoolSpec spec;
    std::string pool_out;
    auto* gen = app.add_subcommand("gen-pool", "Write a synthetic dataset CSV");
    gen->add_option("--n", spec.n, "Sample count");
    gen->add_option("--m", spec.m, "Category count");
    gen->add_option("--d", spec.d, "Feature dimension");
    gen->add_option("--undefined-fraction", spec.undefined_fraction, "Fraction from no category");
    gen->add_option("--separation", spec.separation, "Adjacent class-center distance");
    gen->add_option("--seed", spec.seed, "Random seed");
    gen->add_option("-o,--out", pool_out, "Output path, - for stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config_path, dry_run);
        if (*sweep) return cmd_sweep(config_path, param, values, seeds, sweep_out);
        if (*serve) return cmd_serve(config_path, port, decision_log, ui_dir, timeout, exit_when_done);
        if (*gen) return cmd_gen_pool(spec, pool_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
