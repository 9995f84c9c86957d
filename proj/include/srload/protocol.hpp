#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "srload/session.hpp"

namespace srload::proto {

inline constexpr int version = 1;

/*!
 * Parse one newline-delimited message. Throws ValidationError with the
 * offending field when the line is not a JSON object, lacks a `type`, or
 * carries a different proto_version.
 */
nlohmann::json parse_message(std::string_view line);

//! Adds proto_version (unless already set) and serializes as a single line (with trailing '\n').
std::string frame(nlohmann::json msg);

nlohmann::json error_message(const nlohmann::json& req_id, std::string_view code,
                             std::string_view message, std::string_view path = {});

nlohmann::json events_message(std::string_view session, std::uint64_t from_cursor,
                              std::span<const SimEvent> events, std::uint64_t next_cursor);

//! Blocking line-oriented TCP client; used by tests, tools and bots.
class LineClient
{
  public:
    LineClient(const std::string& host, int port);
    ~LineClient();
    LineClient(const LineClient&) = delete;
    LineClient& operator=(const LineClient&) = delete;

    void send(const nlohmann::json& msg);
    //! Next message, or nullopt on timeout / closed connection.
    std::optional<nlohmann::json> receive(std::chrono::milliseconds timeout = std::chrono::seconds(30));
    //! Skip messages until one with the given type arrives; every skipped
    //! message is passed to `on_other`.
    template <class F>
    std::optional<nlohmann::json> receive_type(std::string_view type, F&& on_other,
                                               std::chrono::milliseconds timeout = std::chrono::seconds(30))
    {
        while (auto m = receive(timeout)) {
            if (m->value("type", "") == type)
                return m;
            on_other(*m);
        }
        return std::nullopt;
    }

  private:
    int fd_ = -1;
    std::string buffer_;
};

}  // namespace srload::proto
