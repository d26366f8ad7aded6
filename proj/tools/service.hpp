#pragma once

// HTTP/JSON face of a session. Mutations are serialized in arrival order
// through a ticket lock; reads are served from the last published snapshot
// and never wait for a running command.

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanotwin/error.hpp"
#include "nanotwin/session.hpp"

namespace httplib {
class Server;
}

namespace nanotwin {

/// Maps a mutation endpoint and its JSON body onto session command text.
/// Unknown endpoints raise not_found, unknown or mistyped keys validation.
std::string command_from_request(const std::string& path, const nlohmann::json& body);

/// HTTP status used for each error class.
int http_status(ErrorCode code);

/// First-come, first-served mutex: waiters are admitted in ticket order.
class TicketLock {
public:
    void lock();
    void unlock();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::uint64_t next_ = 0;
    std::uint64_t serving_ = 0;
};

class LabService {
public:
    explicit LabService(Session session);
    ~LabService();

    LabService(const LabService&) = delete;
    LabService& operator=(const LabService&) = delete;

    /// Runs one command under the writer lock and publishes a new snapshot.
    nlohmann::json submit(const std::string& command);

    nlohmann::json state() const;
    /// Log records with seq > since.
    nlohmann::json log_since(std::int64_t since) const;

    /// Binds and serves until stop(). Returns false if the address is not bindable.
    bool listen(const std::string& host, int port);
    /// Binds to a free port and returns it (or -1); serve with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();

    /// Called under the writer lock after every successful command.
    void on_commit(std::function<void(const Session&)> hook) { on_commit_ = std::move(hook); }

    /// Writer-side access for exports; holds the writer lock while `f` runs.
    template <typename F>
    auto with_session(F&& f) {
        std::lock_guard<TicketLock> guard(writer_);
        return f(static_cast<const Session&>(session_));
    }

private:
    struct Snapshot {
        nlohmann::json state;
        std::shared_ptr<const std::vector<nlohmann::json>> log;
    };

    void publish();
    std::shared_ptr<const Snapshot> snapshot() const;
    void install_routes();

    Session session_;
    TicketLock writer_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
    std::vector<nlohmann::json> log_json_;
    std::function<void(const Session&)> on_commit_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace nanotwin
