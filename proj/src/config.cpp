#include "mining/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mining/dataset_io.hpp"

namespace mining {

namespace {

namespace pt = boost::property_tree;

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end)
        throw ConfigError(key, "cannot parse '" + text + "'");
    return value;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

template <typename T>
Setter field(T ExperimentConfig::* member) {
    return [member](ExperimentConfig& c, const std::string& key, const std::string& v) {
        c.*member = parse_value<T>(key, v);
    };
}

/// section -> key -> setter. Every tunable value has exactly one key.
const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"pool",
         {
             {"n", [](auto& c, auto& k, auto& v) { c.pool.n = parse_value<int>(k, v); }},
             {"d", [](auto& c, auto& k, auto& v) { c.pool.d = parse_value<int>(k, v); }},
             {"undefined_fraction",
              [](auto& c, auto& k, auto& v) { c.pool.undefined_fraction = parse_value<double>(k, v); }},
             {"separation", [](auto& c, auto& k, auto& v) { c.pool.separation = parse_value<double>(k, v); }},
             {"seed", [](auto& c, auto& k, auto& v) { c.pool.seed = parse_value<std::uint64_t>(k, v); }},
             {"dataset_csv", [](auto& c, auto&, auto& v) { c.dataset_csv = v; }},
             {"seed_fraction", field(&ExperimentConfig::seed_fraction)},
             {"noise_fraction", field(&ExperimentConfig::noise_fraction)},
         }},
        {"hyper",
         {
             {"m", [](auto& c, auto& k, auto& v) { c.engine.hyper.m = parse_value<int>(k, v); }},
             {"lambda0", [](auto& c, auto& k, auto& v) { c.engine.hyper.lambda0 = parse_value<double>(k, v); }},
             {"gamma_factor",
              [](auto& c, auto& k, auto& v) { c.engine.hyper.gamma_factor = parse_value<double>(k, v); }},
             {"alpha", [](auto& c, auto& k, auto& v) { c.engine.hyper.alpha = parse_value<double>(k, v); }},
             {"tau", [](auto& c, auto& k, auto& v) { c.engine.hyper.tau = parse_value<int>(k, v); }},
             {"beta", [](auto& c, auto& k, auto& v) { c.engine.hyper.beta = parse_value<int>(k, v); }},
             {"al_batch_size",
              [](auto& c, auto& k, auto& v) { c.engine.hyper.al_batch_size = parse_value<int>(k, v); }},
             {"seed", [](auto& c, auto& k, auto& v) { c.engine.hyper.seed = parse_value<std::uint64_t>(k, v); }},
         }},
        {"learner",
         {
             {"representation",
              [](auto& c, auto& k, auto& v) {
                  if (v == "linear") c.engine.representation = Representation::Linear;
                  else if (v == "mlp") c.engine.representation = Representation::Mlp;
                  else throw ConfigError(k, "expected linear or mlp, got '" + v + "'");
              }},
             {"hidden", [](auto& c, auto& k, auto& v) { c.engine.hidden = parse_value<int>(k, v); }},
             {"init_weight_std",
              [](auto& c, auto& k, auto& v) { c.engine.init_weight_std = parse_value<double>(k, v); }},
             {"learning_rate",
              [](auto& c, auto& k, auto& v) { c.engine.sgd.learning_rate = parse_value<double>(k, v); }},
             {"weight_decay",
              [](auto& c, auto& k, auto& v) { c.engine.sgd.weight_decay = parse_value<double>(k, v); }},
             {"momentum", [](auto& c, auto& k, auto& v) { c.engine.sgd.momentum = parse_value<double>(k, v); }},
             {"batch_size", [](auto& c, auto& k, auto& v) { c.engine.sgd.batch_size = parse_value<int>(k, v); }},
             {"pretrain_epochs",
              [](auto& c, auto& k, auto& v) { c.engine.pretrain_epochs = parse_value<int>(k, v); }},
             {"checkpoint", [](auto& c, auto&, auto& v) { c.initial_checkpoint = v; }},
         }},
        {"strategy",
         {
             {"strategy",
              [](auto& c, auto& k, auto& v) {
                  auto mode = parse_strategy_mode(v);
                  if (!mode) throw ConfigError(k, "unknown strategy '" + v + "'");
                  c.strategy.mode = *mode;
              }},
             {"annotation_budget",
              [](auto& c, auto& k, auto& v) {
                  c.strategy.annotation_budget = parse_value<long>(k, v);
                  c.explicit_budget = true;
              }},
             {"budget_fraction", field(&ExperimentConfig::budget_fraction)},
             {"phase_switch", [](auto& c, auto& k, auto& v) { c.strategy.phase_switch = parse_value<int>(k, v); }},
             {"batches_per_round",
              [](auto& c, auto& k, auto& v) { c.engine.batches_per_round = parse_value<int>(k, v); }},
             {"min_rounds", [](auto& c, auto& k, auto& v) { c.engine.min_rounds = parse_value<int>(k, v); }},
             {"max_rounds", [](auto& c, auto& k, auto& v) { c.engine.max_rounds = parse_value<int>(k, v); }},
             {"max_iterations",
              [](auto& c, auto& k, auto& v) { c.engine.max_iterations = parse_value<long>(k, v); }},
         }},
        {"output",
         {
             {"dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
         }},
        {"service",
         {
             {"port", [](auto& c, auto& k, auto& v) { c.service.port = parse_value<int>(k, v); }},
             {"host", [](auto& c, auto&, auto& v) { c.service.host = v; }},
             {"timeout_seconds",
              [](auto& c, auto& k, auto& v) { c.service.timeout_seconds = parse_value<double>(k, v); }},
             {"decision_log", [](auto& c, auto&, auto& v) { c.service.decision_log = v; }},
             {"ui_dir", [](auto& c, auto&, auto& v) { c.service.ui_dir = v; }},
         }},
    };
    return table;
}

/// Maps an InvalidArgument from a component validator onto the config key it
/// came from. Validators start their message with the field name.
std::string key_for_message(const std::string& message) {
    static const std::pair<const char*, const char*> prefixes[] = {
        {"m ", "hyper.m"},
        {"lambda0", "hyper.lambda0"},
        {"gamma_factor", "hyper.gamma_factor"},
        {"alpha", "hyper.alpha"},
        {"tau", "hyper.tau"},
        {"beta", "hyper.beta"},
        {"al_batch_size", "hyper.al_batch_size"},
        {"learning_rate", "learner.learning_rate"},
        {"weight_decay", "learner.weight_decay"},
        {"momentum", "learner.momentum"},
        {"batch_size", "learner.batch_size"},
        {"hidden", "learner.hidden"},
        {"init_weight_std", "learner.init_weight_std"},
        {"pretrain_epochs", "learner.pretrain_epochs"},
        {"batches_per_round", "strategy.batches_per_round"},
        {"min_rounds", "strategy.min_rounds"},
        {"max_rounds", "strategy.max_rounds"},
        {"max_iterations", "strategy.max_iterations"},
        {"annotation_budget", "strategy.annotation_budget"},
        {"phase_switch", "strategy.phase_switch"},
        {"n ", "pool.n"},
        {"d ", "pool.d"},
        {"undefined_fraction", "pool.undefined_fraction"},
        {"separation", "pool.separation"},
    };
    for (const auto& [prefix, key] : prefixes)
        if (message.rfind(prefix, 0) == 0) return key;
    return "config";
}

}  // namespace

ExperimentConfig default_experiment_config() {
    ExperimentConfig c;
    c.pool = SyntheticPoolSpec{};
    c.engine.hyper.m = c.pool.m;
    return c;
}

void ExperimentConfig::validate() const {
    if (!(seed_fraction > 0.0 && seed_fraction < 1.0))
        throw ConfigError("pool.seed_fraction", "must lie in (0, 1)");
    if (!(noise_fraction >= 0.0 && noise_fraction <= 1.0))
        throw ConfigError("pool.noise_fraction", "must lie in [0, 1]");
    if (!(budget_fraction >= 0.0 && budget_fraction <= 1.0))
        throw ConfigError("strategy.budget_fraction", "must lie in [0, 1]");
    if (service.port < 0 || service.port > 65535) throw ConfigError("service.port", "must lie in [0, 65535]");
    if (!(service.timeout_seconds > 0.0)) throw ConfigError("service.timeout_seconds", "must be > 0");
    if (output_dir.empty()) throw ConfigError("output.dir", "must not be empty");
    if (dataset_csv.empty() && pool.m != engine.hyper.m)
        throw ConfigError("hyper.m", "synthetic pool requires hyper.m to equal its class count");
    try {
        engine.validate();
        strategy.validate();
        if (dataset_csv.empty()) make_synthetic_rows(pool);
    } catch (const InvalidArgument& e) {
        throw ConfigError(key_for_message(e.what()), e.what());
    }
}

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config", "line " + std::to_string(e.line()) + ": " + e.message());
    }

    ExperimentConfig config = default_experiment_config();
    bool m_given = false;
    for (const auto& [section, entries] : tree) {
        if (!entries.data().empty()) throw ConfigError(section, "key outside any section");
        const auto it = schema().find(section);
        if (it == schema().end()) throw ConfigError(section, "unknown section");
        for (const auto& [key, value] : entries) {
            const std::string qualified = section + "." + key;
            const auto setter = it->second.find(key);
            if (setter == it->second.end()) throw ConfigError(qualified, "unknown key");
            setter->second(config, qualified, value.data());
            if (qualified == "hyper.m") m_given = true;
        }
    }
    // The synthetic pool follows the head count unless a dataset file is used.
    if (m_given) config.pool.m = config.engine.hyper.m;
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    return parse_config(in);
}

std::string render_config(const ExperimentConfig& c) {
    std::ostringstream out;
    const auto& h = c.engine.hyper;
    out << "[pool]\n"
        << "n = " << c.pool.n << "\n"
        << "d = " << c.pool.d << "\n"
        << "undefined_fraction = " << format_real(c.pool.undefined_fraction) << "\n"
        << "separation = " << format_real(c.pool.separation) << "\n"
        << "seed = " << c.pool.seed << "\n";
    if (!c.dataset_csv.empty()) out << "dataset_csv = " << c.dataset_csv.string() << "\n";
    out << "seed_fraction = " << format_real(c.seed_fraction) << "\n"
        << "noise_fraction = " << format_real(c.noise_fraction) << "\n\n"
        << "[hyper]\n"
        << "m = " << h.m << "\n"
        << "lambda0 = " << format_real(h.lambda0) << "\n"
        << "gamma_factor = " << format_real(h.gamma_factor) << "\n"
        << "alpha = " << format_real(h.alpha) << "\n"
        << "tau = " << h.tau << "\n"
        << "beta = " << h.beta << "\n"
        << "al_batch_size = " << h.al_batch_size << "\n"
        << "seed = " << h.seed << "\n\n"
        << "[learner]\n"
        << "representation = " << (c.engine.representation == Representation::Linear ? "linear" : "mlp") << "\n"
        << "hidden = " << c.engine.hidden << "\n"
        << "init_weight_std = " << format_real(c.engine.init_weight_std) << "\n"
        << "learning_rate = " << format_real(c.engine.sgd.learning_rate) << "\n"
        << "weight_decay = " << format_real(c.engine.sgd.weight_decay) << "\n"
        << "momentum = " << format_real(c.engine.sgd.momentum) << "\n"
        << "batch_size = " << c.engine.sgd.batch_size << "\n"
        << "pretrain_epochs = " << c.engine.pretrain_epochs << "\n";
    if (!c.initial_checkpoint.empty()) out << "checkpoint = " << c.initial_checkpoint.string() << "\n";
    out << "\n[strategy]\n"
        << "strategy = " << to_string(c.strategy.mode) << "\n";
    if (c.explicit_budget) out << "annotation_budget = " << c.strategy.annotation_budget << "\n";
    out << "budget_fraction = " << format_real(c.budget_fraction) << "\n";
    if (c.strategy.phase_switch) out << "phase_switch = " << *c.strategy.phase_switch << "\n";
    out << "batches_per_round = " << c.engine.batches_per_round << "\n"
        << "min_rounds = " << c.engine.min_rounds << "\n"
        << "max_rounds = " << c.engine.max_rounds << "\n"
        << "max_iterations = " << c.engine.max_iterations << "\n\n"
        << "[output]\n"
        << "dir = " << c.output_dir.string() << "\n\n"
        << "[service]\n"
        << "port = " << c.service.port << "\n"
        << "host = " << c.service.host << "\n"
        << "timeout_seconds = " << format_real(c.service.timeout_seconds) << "\n";
    if (!c.service.decision_log.empty()) out << "decision_log = " << c.service.decision_log.string() << "\n";
    if (!c.service.ui_dir.empty()) out << "ui_dir = " << c.service.ui_dir.string() << "\n";
    return out.str();
}

}  // namespace mining
