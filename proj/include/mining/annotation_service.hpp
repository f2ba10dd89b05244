#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mining/config.hpp"
#include "mining/mining_engine.hpp"

namespace httplib {
class Server;
}

namespace mining {

/// One line of the decision log.
struct LoggedDecision {
    /// Index of the AL round (annotate call) the decision answered.
    int round = 0;
    AnnotationDecision decision;
};

std::string to_json_line(const LoggedDecision& entry);
LoggedDecision logged_decision_from_json(const std::string& line);
std::vector<LoggedDecision> read_decision_log(const std::filesystem::path& path);

/// Result of submitting a decision over the API, mapped onto HTTP codes.
enum class SubmitResult {
    Accepted,   // 200
    Repeat,     // 200, same decision already recorded
    Malformed,  // 400
    Unknown,    // 404, not in the current queue
    Conflict,   // 409, differs from the recorded decision
};

/**
 * HTTP facade over a running engine.
 *
 * The engine thread calls annotator().annotate(queue), which publishes the
 * queue and blocks until every item is resolved, the timeout expires, or the
 * service shuts down. Request handlers only read snapshots and push accepted
 * decisions onto the round's commit list; the engine applies that list when
 * annotate returns.
 *
 * Routes: GET /api/status, GET /api/queue?limit=N, POST /api/annotations,
 * GET / (static UI bundle, or a placeholder page).
 */
class AnnotationService {
public:
    AnnotationService(ServiceConfig config, int num_classes);
    ~AnnotationService();

    AnnotationService(const AnnotationService&) = delete;
    AnnotationService& operator=(const AnnotationService&) = delete;

    /// Binds and starts serving on a background thread. Port 0 picks a free
    /// port. Returns the bound port; throws std::runtime_error if binding fails.
    int start();
    void stop();
    int port() const { return port_; }

    /// Engine-facing annotator; blocks inside annotate().
    Annotator& annotator() { return annotator_; }

    /// Status observer for MiningEngine::set_status_observer.
    void update_status(const StatusSnapshot& snapshot);

    // The route handlers, callable directly for in-process use.
    std::string status_json() const;
    std::string queue_json(std::optional<long> limit) const;
    SubmitResult submit(const std::string& body);
    SubmitResult submit(const AnnotationDecision& decision);

private:
    class ServiceAnnotator : public Annotator {
    public:
        explicit ServiceAnnotator(AnnotationService& owner) : owner_(owner) {}
        std::vector<AnnotationDecision> annotate(std::span<const QueueItem> queue) override;

    private:
        AnnotationService& owner_;
    };

    std::vector<AnnotationDecision> await_decisions(std::span<const QueueItem> queue);
    void install_routes();

    ServiceConfig config_;
    int m_;
    ServiceAnnotator annotator_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;

    mutable std::mutex mutex_;
    std::condition_variable changed_;
    StatusSnapshot status_;
    bool have_status_ = false;
    bool shutting_down_ = false;
    int round_ = -1;
    /// Items still awaiting a decision, in queue order.
    std::vector<QueueItem> pending_;
    /// Decisions accepted in the current round, in arrival order.
    std::vector<AnnotationDecision> round_decisions_;
    /// Every decision accepted during the run, for idempotency and conflicts.
    std::map<SampleId, AnnotationDecision> decided_;
    std::ofstream log_;
};

/// Answers each queue from a recorded log: decisions logged for the same round
/// and for ids in the queue, in queue order.
class ReplayAnnotator : public Annotator {
public:
    explicit ReplayAnnotator(std::vector<LoggedDecision> log) : log_(std::move(log)) {}
    std::vector<AnnotationDecision> annotate(std::span<const QueueItem> queue) override;

private:
    std::vector<LoggedDecision> log_;
    int round_ = 0;
};

}  // namespace mining
