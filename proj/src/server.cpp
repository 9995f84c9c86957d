#include "srload/server.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <arpa/inet.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>

#include <cmath>
#include <set>

#include "srload/error.hpp"
#include "srload/protocol.hpp"

namespace srload {

using nlohmann::json;

namespace {

constexpr std::size_t max_batch = 4096;
constexpr double max_advance_s = 3600.0;
const std::set<std::string> known_types{"ping",    "create_session", "attach",        "command",
                                        "advance", "get_state",      "stream_events", "bye"};

void pace(SessionEntry& e, std::stop_token st)
{
    using clock = std::chrono::steady_clock;
    auto deadline = clock::now();
    while (!st.stop_requested() && !e.stopping) {
        double scale, period;
        {
            std::lock_guard lk(e.mutex);
            scale = e.session.state().time_scale;
            period = e.session.config().console.bin_period;
        }
        if (!(scale > 0)) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
            deadline = clock::now();
            continue;
        }
        deadline += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(period / scale));
        const auto now = clock::now();
        if (deadline < now - std::chrono::seconds(1))
            deadline = now;  // fell behind; do not try to catch up in a burst
        std::this_thread::sleep_until(deadline);
        {
            std::lock_guard lk(e.mutex);
            e.session.advance_to(e.session.sim_time() + period);
        }
        e.changed.notify_all();
    }
}

json error_json(const ValidationError& e)
{
    return {{"path", e.where()}, {"message", e.what()}};
}

//! One stream connection: a reader that handles requests and, for realtime
//! sessions, a writer that pushes new events.
class Connection
{
  public:
    Connection(int fd, SessionRegistry& reg) : fd_(fd), registry_(reg) {}

    void run(const std::atomic<bool>& stopping)
    {
        std::string buffer;
        char buf[65536];
        while (!stopping) {
            pollfd pfd{fd_, POLLIN, 0};
            const int r = ::poll(&pfd, 1, 200);
            if (r < 0)
                break;
            if (r == 0)
                continue;
            const auto n = ::recv(fd_, buf, sizeof buf, 0);
            if (n <= 0)
                break;
            buffer.append(buf, static_cast<std::size_t>(n));
            std::size_t nl;
            while ((nl = buffer.find('\n')) != std::string::npos) {
                const std::string line = buffer.substr(0, nl);
                buffer.erase(0, nl + 1);
                if (!line.empty() && !handle(line))
                    goto done;
            }
        }
    done:
        if (pusher_.joinable()) {
            pusher_.request_stop();
            if (entry_)
                entry_->changed.notify_all();
            pusher_.join();
        }
    }

  private:
    bool write(const json& msg)
    {
        const std::string line = proto::frame(msg);
        std::size_t off = 0;
        while (off < line.size()) {
            const auto n = ::send(fd_, line.data() + off, line.size() - off, MSG_NOSIGNAL);
            if (n <= 0)
                return false;
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    void reply(json msg, const json& req_id)
    {
        if (!req_id.is_null())
            msg["req_id"] = req_id;
        std::lock_guard lk(write_mutex_);
        write(msg);
    }

    //! Push every event past the connection cursor.
    void flush()
    {
        std::lock_guard wl(write_mutex_);
        while (true) {
            json msg;
            {
                std::lock_guard lk(entry_->mutex);
                const auto ev = entry_->session.events_from(cursor_);
                if (ev.empty())
                    return;
                const auto take = ev.first(std::min(ev.size(), max_batch));
                msg = proto::events_message(entry_->id, cursor_, take, cursor_ + take.size());
                cursor_ += take.size();
            }
            if (!write(msg))
                return;
        }
    }

    void attach(std::shared_ptr<SessionEntry> e, std::uint64_t from, const json& req_id)
    {
        entry_ = std::move(e);
        std::uint64_t next;
        double t;
        {
            std::lock_guard lk(entry_->mutex);
            next = entry_->session.next_cursor();
            t = entry_->session.sim_time();
        }
        // A cursor from the future (e.g. an earlier service instance) is stale.
        cursor_ = from > next ? 0 : from;
        reply({{"type", "attached"}, {"session", entry_->id}, {"sim_time", t},
               {"from_cursor", cursor_}, {"next_cursor", next},
               {"clock", entry_->realtime ? "realtime" : "manual"}},
              req_id);
        flush();
        if (entry_->realtime && !pusher_.joinable())
            pusher_ = std::jthread([this](std::stop_token st) {
                while (!st.stop_requested()) {
                    {
                        std::unique_lock lk(entry_->mutex);
                        entry_->changed.wait_for(lk, std::chrono::milliseconds(200));
                    }
                    flush();
                }
            });
    }

    json state_json()
    {
        std::lock_guard lk(entry_->mutex);
        return to_json(entry_->session.state(), entry_->session.config());
    }

    bool handle(const std::string& line)
    {
        json msg;
        try {
            msg = proto::parse_message(line);
        } catch (const ValidationError& e) {
            reply(proto::error_message(nullptr, "bad_message", e.what(), e.where()), nullptr);
            return true;
        }
        const json req_id = msg.value("req_id", json(nullptr));
        const auto type = msg["type"].get<std::string>();
        try {
            if (type == "ping") {
                reply({{"type", "pong"}}, req_id);
            } else if (type == "create_session") {
                if (entry_)
                    throw ValidationError("type", "connection already bound to a session");
                auto e = registry_.create(msg);
                reply({{"type", "session_created"}, {"session", e->id},
                       {"config_hash", config_hash(e->session.config())}}, req_id);
                attach(std::move(e), 0, req_id);
            } else if (type == "attach") {
                if (entry_)
                    throw ValidationError("type", "connection already bound to a session");
                const auto id = msg.value("session", std::string{});
                auto e = registry_.find(id);
                if (!e) {
                    reply(proto::error_message(req_id, "unknown_session", "no session '" + id + "'", "session"), req_id);
                    return true;
                }
                attach(std::move(e), msg.value("from_cursor", std::uint64_t{0}), req_id);
            } else if (!known_types.contains(type)) {
                reply(proto::error_message(req_id, "unknown_type", "unknown message type '" + type + "'", "type"), req_id);
            } else if (!entry_) {
                reply(proto::error_message(req_id, "not_attached", "attach or create a session first"), req_id);
            } else if (type == "command") {
                if (!msg.contains("command"))
                    throw ValidationError("command", "missing");
                const Command c = command_from_json(msg["command"]);
                CommandAck ack;
                {
                    std::lock_guard lk(entry_->mutex);
                    ack = entry_->session.submit(c);
                }
                entry_->changed.notify_all();
                if (!entry_->realtime)
                    flush();
                json r{{"type", "ack"}, {"accepted", ack.accepted}, {"state", state_json()}};
                if (ack.accepted)
                    r["index"] = ack.index;
                else
                    r["error"] = ack.error;
                reply(r, req_id);
            } else if (type == "advance") {
                if (entry_->realtime)
                    throw ValidationError("type", "advance is only available on manual-clock sessions");
                if (!msg.contains("until_sim_time") || !msg["until_sim_time"].is_number()
                    || !std::isfinite(msg["until_sim_time"].get<double>()))
                    throw ValidationError("until_sim_time", "expected a finite number");
                double t;
                {
                    std::lock_guard lk(entry_->mutex);
                    const double until = msg["until_sim_time"].get<double>();
                    if (until - entry_->session.sim_time() > max_advance_s)
                        throw ValidationError("until_sim_time", "at most 3600 s per advance");
                    entry_->session.advance_to(until);
                    t = entry_->session.sim_time();
                }
                flush();
                reply({{"type", "advanced"}, {"sim_time", t}, {"next_cursor", cursor_}}, req_id);
            } else if (type == "get_state") {
                reply({{"type", "state"}, {"state", state_json()}}, req_id);
            } else if (type == "stream_events") {
                std::uint64_t from = msg.value("from_cursor", std::uint64_t{0});
                json r;
                {
                    std::lock_guard lk(entry_->mutex);
                    if (from > entry_->session.next_cursor())
                        from = 0;
                    const auto ev = entry_->session.events_from(from);
                    const auto take = ev.first(std::min(ev.size(), max_batch));
                    r = proto::events_message(entry_->id, from, take, from + take.size());
                }
                reply(r, req_id);
            } else if (type == "bye") {
                return false;
            } else {
                reply(proto::error_message(req_id, "unknown_type", "unknown message type '" + type + "'", "type"), req_id);
            }
        } catch (const ValidationError& e) {
            reply(proto::error_message(req_id, "invalid", e.what(), e.where()), req_id);
        } catch (const std::exception& e) {
            reply(proto::error_message(req_id, "internal", e.what()), req_id);
        }
        return true;
    }

    int fd_;
    SessionRegistry& registry_;
    std::shared_ptr<SessionEntry> entry_;
    std::uint64_t cursor_ = 0;
    std::mutex write_mutex_;
    std::jthread pusher_;
};

}  // namespace

SessionRegistry::SessionRegistry(SimConfig base) : base_(std::move(base)) {}

SessionRegistry::~SessionRegistry() { stop_all(); }

SimConfig SessionRegistry::resolve_config(const json& patch) const
{
    json merged = config_to_json(base_);
    if (!patch.is_null()) {
        if (!patch.is_object())
            throw ValidationError("config", "expected an object");
        merged.merge_patch(patch);
    }
    return config_from_json(merged);
}

std::shared_ptr<SessionEntry> SessionRegistry::create(const json& request)
{
    if (!request.is_object())
        throw ValidationError("request", "expected an object");
    for (const auto& [k, v] : request.items())
        if (k != "config" && k != "seed" && k != "clock" && k != "request_id" && k != "type"
            && k != "proto_version" && k != "req_id")
            throw ValidationError(k, "unknown key");
    const std::string request_id = request.value("request_id", std::string{});
    json body = request;
    body.erase("req_id");
    body.erase("type");
    body.erase("proto_version");
    const std::string canonical = body.dump();
    if (!request_id.empty()) {
        std::lock_guard lk(mutex_);
        auto it = requests_.find(request_id);
        if (it != requests_.end()) {
            if (it->second.first != canonical)
                throw ValidationError("request_id", "reused with a different request body");
            return sessions_.at(it->second.second);
        }
    }

    const SimConfig cfg = resolve_config(request.value("config", json(nullptr)));
    std::uint64_t seed = cfg.master_seed;
    if (request.contains("seed")) {
        if (!request["seed"].is_number_unsigned())
            throw ValidationError("seed", "expected a non-negative integer");
        seed = request["seed"].get<std::uint64_t>();
    }
    const std::string clock = request.value("clock", std::string("manual"));
    if (clock != "manual" && clock != "realtime")
        throw ValidationError("clock", "expected \"manual\" or \"realtime\"");

    std::lock_guard lk(mutex_);
    if (!request_id.empty()) {
        auto it = requests_.find(request_id);
        if (it != requests_.end())
            return sessions_.at(it->second.second);
    }
    const std::string id = "s" + std::to_string(++counter_);
    auto entry = std::make_shared<SessionEntry>(id, Session(cfg, seed), clock == "realtime");
    if (entry->realtime)
        entry->pacer = std::jthread([e = entry.get()](std::stop_token st) { pace(*e, st); });
    sessions_[id] = entry;
    if (!request_id.empty())
        requests_[request_id] = {canonical, id};
    return entry;
}

std::shared_ptr<SessionEntry> SessionRegistry::find(const std::string& id) const
{
    std::lock_guard lk(mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

void SessionRegistry::stop_all()
{
    std::map<std::string, std::shared_ptr<SessionEntry>> all;
    {
        std::lock_guard lk(mutex_);
        all = sessions_;
    }
    for (auto& [id, e] : all) {
        e->stopping = true;
        if (e->pacer.joinable()) {
            e->pacer.request_stop();
            e->pacer.join();
        }
        e->changed.notify_all();
    }
}

ConsoleServer::ConsoleServer(SimConfig base, ServerOptions options)
    : registry_(std::move(base))
    , options_(std::move(options))
    , http_(std::make_unique<httplib::Server>())
{
    auto send_json = [](httplib::Response& res, int status, const json& body) {
        json b = body;
        b["proto_version"] = proto::version;
        res.status = status;
        res.set_content(b.dump(), "application/json");
    };
    auto parse_body = [](const httplib::Request& req) {
        if (req.body.empty())
            return json::object();
        try {
            return json::parse(req.body);
        } catch (const json::parse_error& e) {
            throw ValidationError("body", std::string("not valid JSON: ") + e.what());
        }
    };

    http_->Get("/v1/health", [send_json](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}, {"version", SRLOAD_VERSION}});
    });
    http_->Post("/v1/validate", [this, send_json, parse_body](const httplib::Request& req,
                                                             httplib::Response& res) {
        try {
            const json body = parse_body(req);
            const auto cfg = registry_.resolve_config(body.value("config", json(nullptr)));
            send_json(res, 200, {{"valid", true}, {"config_hash", config_hash(cfg)}});
        } catch (const ValidationError& e) {
            send_json(res, 200, {{"valid", false}, {"error", error_json(e)}});
        }
    });
    http_->Post("/v1/sessions", [this, send_json, parse_body](const httplib::Request& req,
                                                             httplib::Response& res) {
        try {
            const auto e = registry_.create(parse_body(req));
            std::lock_guard lk(e->mutex);
            send_json(res, 201,
                      {{"session", e->id},
                       {"sim_time", e->session.sim_time()},
                       {"clock", e->realtime ? "realtime" : "manual"},
                       {"seed", e->session.seed()},
                       {"config_hash", config_hash(e->session.config())},
                       {"stream", {{"host", options_.host}, {"port", stream_port_}}}});
        } catch (const ValidationError& e) {
            send_json(res, 400, {{"error", error_json(e)}});
        }
    });
    http_->Get(R"(/v1/sessions/([A-Za-z0-9]+))", [this, send_json](const httplib::Request& req,
                                                                   httplib::Response& res) {
        auto e = registry_.find(req.matches[1]);
        if (!e)
            return send_json(res, 404, {{"error", {{"path", "session"}, {"message", "unknown session"}}}});
        std::lock_guard lk(e->mutex);
        send_json(res, 200, {{"session", e->id}, {"state", to_json(e->session.state(), e->session.config())}});
    });
    http_->Get(R"(/v1/sessions/([A-Za-z0-9]+)/events)", [this, send_json](const httplib::Request& req,
                                                                          httplib::Response& res) {
        auto e = registry_.find(req.matches[1]);
        if (!e)
            return send_json(res, 404, {{"error", {{"path", "session"}, {"message", "unknown session"}}}});
        std::uint64_t from = 0;
        if (req.has_param("from_cursor")) {
            try {
                from = std::stoull(req.get_param_value("from_cursor"));
            } catch (const std::exception&) {
                return send_json(res, 400, {{"error", {{"path", "from_cursor"}, {"message", "expected an integer"}}}});
            }
        }
        std::lock_guard lk(e->mutex);
        if (from > e->session.next_cursor())
            from = 0;
        const auto ev = e->session.events_from(from);
        const auto take = ev.first(std::min(ev.size(), max_batch));
        send_json(res, 200, proto::events_message(e->id, from, take, from + take.size()));
    });
}

ConsoleServer::~ConsoleServer() { stop(); }

void ConsoleServer::start()
{
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
        throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(options_.stream_port));
    if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1)
        throw std::runtime_error("invalid host " + options_.host);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw std::runtime_error("cannot bind stream port " + std::to_string(options_.stream_port));
    if (::listen(listen_fd_, 16) != 0)
        throw std::runtime_error("listen() failed");
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    stream_port_ = ntohs(addr.sin_port);

    if (options_.http_port == 0)
        http_port_ = http_->bind_to_any_port(options_.host);
    else if (http_->bind_to_port(options_.host, options_.http_port))
        http_port_ = options_.http_port;
    if (http_port_ <= 0)
        throw std::runtime_error("cannot bind http port " + std::to_string(options_.http_port));
    http_thread_ = std::jthread([this] { http_->listen_after_bind(); });
    accept_thread_ = std::jthread([this] { accept_loop(); });
}

void ConsoleServer::accept_loop()
{
    while (!stopping_) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        if (::poll(&pfd, 1, 200) <= 0)
            continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0)
            continue;
        const int one = 1;  // small request/reply lines; Nagle would add ~40 ms each
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lk(conn_mutex_);
        conn_fds_.push_back(fd);
        conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void ConsoleServer::serve_connection(int fd)
{
    Connection c(fd, registry_);
    c.run(stopping_);
    ::shutdown(fd, SHUT_RDWR);
}

void ConsoleServer::stop()
{
    if (stopping_.exchange(true))
        return;
    if (http_)
        http_->stop();
    if (http_thread_.joinable())
        http_thread_.join();
    if (accept_thread_.joinable())
        accept_thread_.join();
    registry_.stop_all();
    std::vector<std::jthread> threads;
    {
        std::lock_guard lk(conn_mutex_);
        for (int fd : conn_fds_)
            ::shutdown(fd, SHUT_RDWR);
        threads = std::move(conn_threads_);
    }
    threads.clear();  // joins
    {
        std::lock_guard lk(conn_mutex_);
        for (int fd : conn_fds_)
            ::close(fd);
        conn_fds_.clear();
    }
    if (listen_fd_ >= 0)
        ::close(listen_fd_);
    listen_fd_ = -1;
    wait_cv_.notify_all();
}

void ConsoleServer::wait()
{
    std::unique_lock lk(wait_mutex_);
    wait_cv_.wait(lk, [this] { return stopping_.load(); });
}

}  // namespace srload
