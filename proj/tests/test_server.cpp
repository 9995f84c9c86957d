#include <doctest.h>

#include "srload/protocol.hpp"
#include "srload/server.hpp"

// after Eigen: <resolv.h> defines _res
#include <httplib.h>

using namespace srload;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

SimConfig base_config()
{
    auto cfg = default_config();
    cfg.console.rate_samples = 2048;
    return cfg;
}

struct Fixture
{
    ConsoleServer server{base_config(), ServerOptions{}};
    Fixture() { server.start(); }
    ~Fixture() { server.stop(); }

    httplib::Client http() { return httplib::Client("127.0.0.1", server.http_port()); }
    proto::LineClient stream() { return proto::LineClient("127.0.0.1", server.stream_port()); }

    json post(const std::string& path, const json& body, int expect)
    {
        auto cli = http();
        auto res = cli.Post(path, body.dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == expect);
        return json::parse(res->body);
    }
};

json ignore_events(proto::LineClient& c, const std::string& type, std::vector<json>* events = nullptr)
{
    auto m = c.receive_type(type, [&](const json& other) {
        if (events && other["type"] == "events")
            for (const auto& e : other["events"])
                events->push_back(e);
    }, 10s);
    REQUIRE(m.has_value());
    return *m;
}

}  // namespace

TEST_CASE_FIXTURE(Fixture, "health and validation")
{
    auto cli = http();
    auto res = cli.Get("/v1/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["proto_version"] == proto::version);

    auto ok = post("/v1/validate", {{"config", {{"oven", {{"power_w", 2.5}}}}}}, 200);
    CHECK(ok["valid"] == true);
    CHECK(ok["config_hash"].get<std::string>().size() == 16);

    auto bad = post("/v1/validate", {{"config", {{"oven", {{"power_w", -3}}}}}}, 200);
    CHECK(bad["valid"] == false);
    CHECK(bad["error"]["path"] == "oven.power_w");

    auto unknown = post("/v1/validate", {{"config", {{"lasers", {{"beam_461", {{"colour", "blue"}}}}}}}}, 200);
    CHECK(unknown["error"]["path"] == "lasers.beam_461.colour");

    res = cli.Post("/v1/validate", "{not json", "application/json");
    REQUIRE(res);
    CHECK(json::parse(res->body)["valid"] == false);
}

TEST_CASE_FIXTURE(Fixture, "session creation is idempotent per request id")
{
    const json req{{"seed", 5}, {"clock", "manual"}, {"request_id", "abc"}};
    const auto a = post("/v1/sessions", req, 201);
    const auto b = post("/v1/sessions", req, 201);
    CHECK(a["session"] == b["session"]);
    CHECK(a["stream"]["port"] == server.stream_port());

    json other = req;
    other["seed"] = 6;
    const auto c = post("/v1/sessions", other, 400);
    CHECK(c["error"]["path"] == "request_id");

    const auto d = post("/v1/sessions", {{"seed", 5}}, 201);
    CHECK(d["session"] != a["session"]);

    const auto e = post("/v1/sessions", {{"clock", "sundial"}}, 400);
    CHECK(e["error"]["path"] == "clock");
    const auto f = post("/v1/sessions", {{"config", {{"trap", {{"capacity", 0}}}}}}, 400);
    CHECK(f["error"]["path"].get<std::string>().starts_with("trap"));

    auto cli = http();
    auto res = cli.Get("/v1/sessions/nope");
    REQUIRE(res);
    CHECK(res->status == 404);
    res = cli.Get("/v1/sessions/" + a["session"].get<std::string>());
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["state"]["sim_time"] == 0);
}

TEST_CASE_FIXTURE(Fixture, "stream protocol basics")
{
    auto c = stream();
    c.send({{"type", "ping"}, {"req_id", 1}});
    auto m = c.receive(5s);
    REQUIRE(m);
    CHECK((*m)["type"] == "pong");
    CHECK((*m)["req_id"] == 1);
    CHECK((*m)["proto_version"] == proto::version);

    c.send({{"type", "ping"}, {"proto_version", 99}});
    m = c.receive(5s);
    REQUIRE(m);
    CHECK((*m)["type"] == "error");
    CHECK((*m)["code"] == "bad_message");
    CHECK((*m)["path"] == "proto_version");

    c.send({{"type", "get_state"}, {"req_id", 2}});
    m = c.receive(5s);
    REQUIRE(m);
    CHECK((*m)["code"] == "not_attached");

    c.send({{"type", "attach"}, {"session", "s999"}, {"req_id", 3}});
    m = c.receive(5s);
    REQUIRE(m);
    CHECK((*m)["code"] == "unknown_session");

    c.send({{"type", "teleport"}});
    m = c.receive(5s);
    REQUIRE(m);
    CHECK((*m)["code"] == "unknown_type");
}

TEST_CASE_FIXTURE(Fixture, "manual clock session over the stream")
{
    const auto created = post("/v1/sessions", {{"seed", 77}}, 201);
    const std::string id = created["session"];

    auto c = stream();
    c.send({{"type", "attach"}, {"session", id}, {"req_id", "a"}});
    auto att = ignore_events(c, "attached");
    CHECK(att["clock"] == "manual");
    CHECK(att["next_cursor"] == 0);

    c.send({{"type", "command"}, {"req_id", "c1"},
            {"command", {{"kind", "set_oven_power"}, {"power_w", 2.0}, {"at_sim_time", 0}}}});
    std::vector<json> events;
    auto ack = ignore_events(c, "ack", &events);
    CHECK(ack["accepted"] == true);
    CHECK(ack["state"]["oven_power_w"] == 2.0);

    c.send({{"type", "command"}, {"req_id", "c2"},
            {"command", {{"kind", "set_oven_power"}, {"power_w", 50.0}, {"at_sim_time", 0}}}});
    ack = ignore_events(c, "ack", &events);
    CHECK(ack["accepted"] == false);
    CHECK(ack["error"].get<std::string>().find("power_w") != std::string::npos);

    c.send({{"type", "command"}, {"command", {{"kind", "clear_trap"}}}});
    auto err = ignore_events(c, "error", &events);
    CHECK(err["path"] == "command.at_sim_time");

    c.send({{"type", "advance"}, {"until_sim_time", 1.0}, {"req_id", "adv"}});
    auto adv = ignore_events(c, "advanced", &events);
    CHECK(adv["sim_time"] == doctest::Approx(1.0));
    CHECK(adv["next_cursor"] == events.size());
    std::size_t bins = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        CHECK(events[i]["seq"] == i);
        bins += events[i]["kind"] == "fluorescence_bin" ? 1 : 0;
    }
    CHECK(bins == 20);

    c.send({{"type", "advance"}, {"until_sim_time", 1e6}});
    err = ignore_events(c, "error", &events);
    CHECK(err["path"] == "until_sim_time");

    // REST view of the same log
    auto cli = http();
    auto res = cli.Get("/v1/sessions/" + id + "/events?from_cursor=0");
    REQUIRE(res);
    const auto rest = json::parse(res->body);
    CHECK(rest["events"] == json(events));

    // replay from a cursor on a second connection; a stale cursor restarts at 0
    auto d = stream();
    d.send({{"type", "attach"}, {"session", id}, {"from_cursor", 5}});
    att = ignore_events(d, "attached");
    CHECK(att["from_cursor"] == 5);
    auto e = stream();
    e.send({{"type", "attach"}, {"session", id}, {"from_cursor", 1000000}});
    att = ignore_events(e, "attached");
    CHECK(att["from_cursor"] == 0);
    std::vector<json> replayed;
    e.send({{"type", "get_state"}});
    ignore_events(e, "state", &replayed);
    CHECK(json(replayed) == json(events));
}

TEST_CASE_FIXTURE(Fixture, "create over the stream and realtime push")
{
    auto c = stream();
    c.send({{"type", "create_session"}, {"clock", "realtime"}, {"seed", 1}, {"req_id", 9}});
    auto created = ignore_events(c, "session_created");
    CHECK(created["req_id"] == 9);
    ignore_events(c, "attached");

    c.send({{"type", "command"},
            {"command", {{"kind", "set_time_scale"}, {"time_scale", 50}, {"at_sim_time", 0}}}});
    std::vector<json> events;
    ignore_events(c, "ack", &events);
    const auto deadline = std::chrono::steady_clock::now() + 20s;
    while (events.size() < 20 && std::chrono::steady_clock::now() < deadline) {
        auto m = c.receive(2s);
        if (m && (*m)["type"] == "events")
            for (const auto& e : (*m)["events"])
                events.push_back(e);
    }
    CHECK(events.size() >= 20);

    c.send({{"type", "advance"}, {"until_sim_time", 5}});
    auto err = ignore_events(c, "error");
    CHECK(err["code"] == "invalid");
}
