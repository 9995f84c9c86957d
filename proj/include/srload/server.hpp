#pragma once

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "srload/session.hpp"

namespace httplib {
class Server;
}

namespace srload {

//! A session plus the synchronization needed to share it between the pacer,
//! request handlers and stream writers.
struct SessionEntry
{
    SessionEntry(std::string id, Session s, bool realtime)
        : id(std::move(id)), session(std::move(s)), realtime(realtime) {}

    const std::string id;
    std::mutex mutex;
    std::condition_variable changed;
    Session session;
    const bool realtime;
    std::atomic<bool> stopping{false};
    std::jthread pacer;
};

/*!
 * Owns all sessions. Creation is idempotent per `request_id`: repeating a
 * request returns the original session.
 */
class SessionRegistry
{
  public:
    explicit SessionRegistry(SimConfig base);
    ~SessionRegistry();

    //! Request fields: config (partial, merged over the base), seed, clock
    //! ("manual" | "realtime"), request_id. Throws ValidationError.
    std::shared_ptr<SessionEntry> create(const nlohmann::json& request);
    std::shared_ptr<SessionEntry> find(const std::string& id) const;

    //! Resolve a partial configuration against the base.
    SimConfig resolve_config(const nlohmann::json& patch) const;

    void stop_all();

  private:
    SimConfig base_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;
    std::map<std::string, std::pair<std::string, std::string>> requests_;  // id -> (body, session)
    std::uint64_t counter_ = 0;
};

struct ServerOptions
{
    std::string host = "127.0.0.1";
    int stream_port = 0;  // 0 = pick a free port
    int http_port = 0;
};

/*!
 * Console service: newline-delimited JSON over TCP for the per-session
 * stream, plus an HTTP endpoint for session creation and config validation.
 */
class ConsoleServer
{
  public:
    ConsoleServer(SimConfig base, ServerOptions options);
    ~ConsoleServer();

    void start();
    void stop();
    //! Blocks until stop() is called from another thread or a signal handler.
    void wait();

    int stream_port() const { return stream_port_; }
    int http_port() const { return http_port_; }
    SessionRegistry& registry() { return registry_; }

  private:
    void accept_loop();
    void serve_connection(int fd);

    SessionRegistry registry_;
    ServerOptions options_;
    std::unique_ptr<httplib::Server> http_;
    std::jthread http_thread_;
    std::jthread accept_thread_;
    int listen_fd_ = -1;
    int stream_port_ = 0;
    int http_port_ = 0;
    std::atomic<bool> stopping_{false};
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::vector<std::jthread> conn_threads_;
    std::mutex wait_mutex_;
    std::condition_variable wait_cv_;
};

}  // namespace srload
