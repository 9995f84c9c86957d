#include "srload/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

#include "srload/error.hpp"

namespace srload::proto {

using nlohmann::json;

json parse_message(std::string_view line)
{
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ValidationError("message", std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw ValidationError("message", "expected a JSON object");
    if (!j.contains("proto_version") || !j["proto_version"].is_number_integer())
        throw ValidationError("proto_version", "missing");
    if (j["proto_version"].get<int>() != version)
        throw ValidationError("proto_version", "unsupported version " + j["proto_version"].dump()
                                                   + " (server speaks " + std::to_string(version) + ")");
    if (!j.contains("type") || !j["type"].is_string())
        throw ValidationError("type", "missing message type");
    return j;
}

std::string frame(json msg)
{
    if (!msg.contains("proto_version"))
        msg["proto_version"] = version;
    return msg.dump() + "\n";
}

json error_message(const json& req_id, std::string_view code, std::string_view message,
                   std::string_view path)
{
    json j{{"type", "error"}, {"code", code}, {"message", message}};
    if (!path.empty())
        j["path"] = path;
    if (!req_id.is_null())
        j["req_id"] = req_id;
    return j;
}

json events_message(std::string_view session, std::uint64_t from_cursor,
                    std::span<const SimEvent> events, std::uint64_t next_cursor)
{
    json arr = json::array();
    for (const auto& e : events)
        arr.push_back(to_json(e));
    return {{"type", "events"},
            {"session", session},
            {"from_cursor", from_cursor},
            {"next_cursor", next_cursor},
            {"events", std::move(arr)}};
}

LineClient::LineClient(const std::string& host, int port)
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto service = std::to_string(port);
    if (getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0)
        throw std::runtime_error("cannot resolve " + host);
    for (auto* p = res; p; p = p->ai_next) {
        fd_ = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
        if (fd_ < 0)
            continue;
        if (::connect(fd_, p->ai_addr, p->ai_addrlen) == 0) {
            const int one = 1;
            ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            break;
        }
        ::close(fd_);
        fd_ = -1;
    }
    freeaddrinfo(res);
    if (fd_ < 0)
        throw std::runtime_error("cannot connect to " + host + ":" + service);
}

LineClient::~LineClient()
{
    if (fd_ >= 0)
        ::close(fd_);
}

void LineClient::send(const json& msg)
{
    const std::string line = frame(msg);
    std::size_t off = 0;
    while (off < line.size()) {
        const auto n = ::send(fd_, line.data() + off, line.size() - off, MSG_NOSIGNAL);
        if (n <= 0)
            throw std::runtime_error("connection closed while sending");
        off += static_cast<std::size_t>(n);
    }
}

std::optional<json> LineClient::receive(std::chrono::milliseconds timeout)
{
    while (true) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            const std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (line.empty())
                continue;
            return json::parse(line);
        }
        pollfd pfd{fd_, POLLIN, 0};
        const int r = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
        if (r <= 0)
            return std::nullopt;
        char buf[65536];
        const auto n = ::recv(fd_, buf, sizeof buf, 0);
        if (n <= 0)
            return std::nullopt;
        buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

}  // namespace srload::proto
