#include "mining/annotation_service.hpp"

#include <algorithm>
#include <charconv>

#include <httplib.h>
#include <json.hpp>

namespace mining {

namespace {

using nlohmann::json;

json decision_json(const AnnotationDecision& d) {
    if (d.is_rejection()) return "reject";
    return json{{"label", *d.label}};
}

/// nullopt for anything that is not {sample_id: int, decision: "reject" | {label: int}}.
std::optional<AnnotationDecision> parse_decision(const json& body) {
    if (!body.is_object() || !body.contains("sample_id") || !body.contains("decision")) return std::nullopt;
    const auto& id = body["sample_id"];
    if (!id.is_number_integer()) return std::nullopt;
    AnnotationDecision d;
    d.id = id.get<SampleId>();
    const auto& decision = body["decision"];
    if (decision.is_string()) {
        if (decision.get<std::string>() != "reject") return std::nullopt;
        return d;
    }
    if (!decision.is_object() || decision.size() != 1 || !decision.contains("label")) return std::nullopt;
    const auto& label = decision["label"];
    if (!label.is_number_integer()) return std::nullopt;
    d.label = label.get<Category>();
    return d;
}

constexpr const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>annotation service</title></head>"
    "<body><p>No UI bundle configured. The API is available under /api/.</p></body></html>\n";

}  // namespace

// ---------------------------------------------------------------------------
// Decision log
// ---------------------------------------------------------------------------

std::string to_json_line(const LoggedDecision& entry) {
    json j{{"round", entry.round}, {"sample_id", entry.decision.id}, {"decision", decision_json(entry.decision)}};
    return j.dump();
}

LoggedDecision logged_decision_from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("decision log: ") + e.what());
    }
    const auto d = parse_decision(j);
    if (!d || !j.contains("round") || !j["round"].is_number_integer())
        throw InvalidArgument("decision log: malformed entry: " + line);
    return {j["round"].get<int>(), *d};
}

std::vector<LoggedDecision> read_decision_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open decision log: " + path.string());
    std::vector<LoggedDecision> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(logged_decision_from_json(line));
    return out;
}

std::vector<AnnotationDecision> ReplayAnnotator::annotate(std::span<const QueueItem> queue) {
    std::vector<AnnotationDecision> out;
    for (const auto& item : queue) {
        for (const auto& entry : log_) {
            if (entry.round == round_ && entry.decision.id == item.id) {
                out.push_back(entry.decision);
                break;
            }
        }
    }
    ++round_;
    return out;
}

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

AnnotationService::AnnotationService(ServiceConfig config, int num_classes)
    : config_(std::move(config)), m_(num_classes), annotator_(*this) {
    if (m_ < 1) throw InvalidArgument("num_classes must be >= 1");
    if (!config_.decision_log.empty()) {
        log_.open(config_.decision_log, std::ios::out | std::ios::trunc);
        if (!log_) throw std::runtime_error("cannot open decision log: " + config_.decision_log.string());
    }
}

AnnotationService::~AnnotationService() { stop(); }

int AnnotationService::start() {
    if (server_) return port_;
    server_ = std::make_unique<httplib::Server>();
    install_routes();
    if (config_.port == 0) {
        port_ = server_->bind_to_any_port(config_.host);
        if (port_ < 0) throw std::runtime_error("cannot bind " + config_.host);
    } else {
        if (!server_->bind_to_port(config_.host, config_.port))
            throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
        port_ = config_.port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void AnnotationService::stop() {
    {
        std::lock_guard lock(mutex_);
        shutting_down_ = true;
    }
    changed_.notify_all();
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

void AnnotationService::update_status(const StatusSnapshot& snapshot) {
    std::lock_guard lock(mutex_);
    if (have_status_ && status_.state == EngineState::Done) return;
    status_ = snapshot;
    have_status_ = true;
}

std::string AnnotationService::status_json() const {
    std::lock_guard lock(mutex_);
    const StatusSnapshot s = have_status_ ? status_ : StatusSnapshot{};
    json j{{"iteration", s.iteration},
           {"annotated", s.annotated},
           {"rejected", s.rejected},
           {"pseudo", s.pseudo},
           {"budget_remaining", s.budget_remaining},
           {"test_accuracy", s.test_accuracy},
           {"state", to_string(s.state)}};
    return j.dump();
}

std::string AnnotationService::queue_json(std::optional<long> limit) const {
    std::lock_guard lock(mutex_);
    const auto n = std::min<std::size_t>(pending_.size(), limit ? static_cast<std::size_t>(*limit) : pending_.size());
    json items = json::array();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& item = pending_[k];
        items.push_back({{"sample_id", item.id},
                         {"features", item.features},
                         {"predictions", item.predictions},
                         {"total_loss", item.total_loss}});
    }
    return items.dump();
}

SubmitResult AnnotationService::submit(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error&) {
        return SubmitResult::Malformed;
    }
    const auto decision = parse_decision(j);
    if (!decision) return SubmitResult::Malformed;
    return submit(*decision);
}

SubmitResult AnnotationService::submit(const AnnotationDecision& decision) {
    if (decision.label && (*decision.label < 0 || *decision.label >= m_)) return SubmitResult::Malformed;
    {
        std::lock_guard lock(mutex_);
        if (auto it = decided_.find(decision.id); it != decided_.end())
            return it->second == decision ? SubmitResult::Repeat : SubmitResult::Conflict;
        auto item = std::find_if(pending_.begin(), pending_.end(),
                                 [&](const QueueItem& q) { return q.id == decision.id; });
        if (item == pending_.end()) return SubmitResult::Unknown;
        pending_.erase(item);
        decided_.emplace(decision.id, decision);
        round_decisions_.push_back(decision);
        if (log_.is_open()) log_ << to_json_line({round_, decision}) << '\n' << std::flush;
    }
    changed_.notify_all();
    return SubmitResult::Accepted;
}

std::vector<AnnotationDecision> AnnotationService::await_decisions(std::span<const QueueItem> queue) {
    std::unique_lock lock(mutex_);
    ++round_;
    pending_.assign(queue.begin(), queue.end());
    round_decisions_.clear();
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(config_.timeout_seconds));
    changed_.wait_until(lock, deadline, [this] { return pending_.empty() || shutting_down_; });
    // Unanswered items expire with the round.
    pending_.clear();
    return std::exchange(round_decisions_, {});
}

std::vector<AnnotationDecision> AnnotationService::ServiceAnnotator::annotate(
    std::span<const QueueItem> queue) {
    return owner_.await_decisions(queue);
}

void AnnotationService::install_routes() {
    auto& svr = *server_;
    svr.Get("/api/status", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(status_json(), "application/json");
    });

    svr.Get("/api/queue", [this](const httplib::Request& req, httplib::Response& res) {
        std::optional<long> limit;
        if (req.has_param("limit")) {
            const auto text = req.get_param_value("limit");
            long value = 0;
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
            if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || value < 1) {
                res.status = 400;
                res.set_content(json{{"error", "limit must be an integer >= 1"}}.dump(), "application/json");
                return;
            }
            limit = value;
        }
        res.set_content(queue_json(limit), "application/json");
    });

    svr.Post("/api/annotations", [this](const httplib::Request& req, httplib::Response& res) {
        switch (submit(req.body)) {
            case SubmitResult::Accepted:
            case SubmitResult::Repeat:
                res.status = 200;
                res.set_content(json{{"accepted", true}}.dump(), "application/json");
                return;
            case SubmitResult::Malformed:
                res.status = 400;
                res.set_content(json{{"error", "malformed decision"}}.dump(), "application/json");
                return;
            case SubmitResult::Unknown:
                res.status = 404;
                res.set_content(json{{"error", "sample is not in the current queue"}}.dump(), "application/json");
                return;
            case SubmitResult::Conflict:
                res.status = 409;
                res.set_content(json{{"error", "conflicts with an earlier decision"}}.dump(), "application/json");
                return;
        }
    });

    if (!config_.ui_dir.empty() && std::filesystem::is_directory(config_.ui_dir)) {
        svr.set_mount_point("/", config_.ui_dir.string());
    } else {
        svr.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(kPlaceholderPage, "text/html");
        });
    }
}

}  // namespace mining
