// Acceptance run: one PASS/FAIL line per top-level requirement.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "srload/config.hpp"
#include "srload/constants.hpp"
#include "srload/experiments.hpp"
#include "srload/fluorescence.hpp"
#include "srload/ionization.hpp"
#include "srload/physics.hpp"
#include "srload/protocol.hpp"
#include "srload/server.hpp"
#include "srload/session.hpp"

// after Eigen: <resolv.h> defines _res
#include <httplib.h>

using namespace srload;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 4)
{
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

Outcome saturation()
{
    const TransitionSpec t{.wavelength = 460.862e-9, .gamma = units::angular(32e6)};
    const double isat = saturation_intensity(t);
    return {std::abs(isat / 428.0 - 1) < 0.005, "I_sat = " + fmt(isat) + " W/m^2"};
}

Outcome intensities()
{
    const double i461 = axial_intensity({.power = 5e-6, .waist = 70e-6, .wavelength = 461e-9});
    const double i405 = axial_intensity({.power = 1.5e-3, .waist = 35e-6, .wavelength = 405e-9});
    const bool ok = std::abs(i461 / 325.0 - 1) < 0.01 && std::abs(i405 / 3.9e5 - 1) < 0.01;
    return {ok, "461 nm " + fmt(i461) + " W/m^2, 405 nm " + fmt(i405) + " W/m^2"};
}

Outcome cross_section()
{
    const AutoIonizingProfile p;
    const double peak = ionization_cross_section(p, 405.2e-9);
    const double lo = ionization_cross_section(p, 404.7e-9);
    const double hi = ionization_cross_section(p, 405.7e-9);
    // relative resolution of a 0.5 nm offset taken near 405 nm
    const double bound = 4 * (std::nextafter(405.2e-9, 1.0) - 405.2e-9) / 0.5e-9;
    const bool ok = peak == 5600 * megabarn && std::abs(lo / (2800 * megabarn) - 1) <= bound
                    && std::abs(hi / (2800 * megabarn) - 1) <= bound;
    return {ok, "peak " + fmt(peak / megabarn, 10) + " Mb, +-0.5 nm " + fmt(lo / megabarn, 12) + " / "
                    + fmt(hi / megabarn, 12) + " Mb"};
}

Outcome transit_oracle()
{
    const auto cfg = default_config();
    const auto& m = cfg.beamline;
    double worst = 0;
    std::size_t n = 0;
    for (const auto& tc : oracle::transit_grid()) {
        SimConfig c2 = cfg;
        c2.lasers.beam_461.detuning = tc.detuning;
        const double ref = oracle::transit_probability(c2, tc);
        AtomSample a;
        a.isotope = tc.isotope;
        a.speed = tc.speed;
        a.direction = {0, std::sin(tc.tilt), std::cos(tc.tilt)};
        a.impact_parameter = tc.offset;
        const double got = transit_ionization_probability(a, m.isotopes[a.isotope], c2.lasers,
                                                          m.geometry, m.autoionizing, m.line_461)
                               .probability;
        worst = std::max(worst, std::abs(got - ref) / ref);
        ++n;
    }
    return {n == 20 && worst <= 1e-3, std::to_string(n) + " cases, worst relative error " + fmt(worst, 3)};
}

Outcome fig3_shape()
{
    const auto cfg = default_config();
    const auto pts = first_ion_vs_detuning(cfg, cfg.experiments.fig3_detunings);
    std::vector<double> x, t;
    bool edge_censored = true;
    for (const auto& p : pts) {
        x.push_back(units::ordinary(p.x));
        t.push_back(p.mean_time);
        if (std::abs(std::abs(units::ordinary(p.x)) - 5e9) < 1e6)
            edge_censored = edge_censored && p.n_censored > 0;
    }
    const auto line = analyze_line(x, t);
    const bool ok = std::abs(line.floor - 20) <= 5 && line.fwhm >= 0.5e9 && line.fwhm <= 2e9
                    && edge_censored;
    return {ok, "floor " + fmt(line.floor) + " s, FWHM " + fmt(line.fwhm / 1e9) + " GHz, +-5 GHz "
                    + (edge_censored ? "censored" : "NOT censored")};
}

Outcome fig2_shape()
{
    const auto cfg = default_config();
    const auto pts = first_ion_vs_power(cfg, cfg.experiments.fig2_powers);
    bool monotone = true;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto& a = pts[i - 1];
        const auto& b = pts[i];
        if (std::isinf(b.mean_time)) {
            monotone = monotone && std::isinf(a.mean_time);
        } else if (!std::isinf(a.mean_time)) {
            const double tol = 2 * std::hypot(a.std_error, b.std_error);
            monotone = monotone && b.mean_time <= a.mean_time + tol;
        }
    }
    const bool diverges = pts.front().n_censored > 0;
    std::string d;
    for (const auto& p : pts)
        d += fmt(p.x) + " W: " + (std::isinf(p.mean_time) ? "censored" : fmt(p.mean_time) + " s") + "; ";
    return {monotone && diverges && pts.size() == 5, d};
}

Outcome isotope_selectivity()
{
    auto cfg = default_config();
    const auto share = ionization_shares(cfg);
    const auto fitted = loaded_fraction_report(cfg.experiments.isotope_loads, cfg, share);
    const double f88 = fitted.isotopes[2].fraction;
    cfg.capture = {.p_cooled = 1, .p_uncooled = 1, .p_heated_alone = 1, .sympathetic_gain = 0};
    const auto flat = loaded_fraction_report(cfg.experiments.isotope_loads, cfg, share);
    const auto& u = flat.isotopes[2];
    const bool ok = cfg.experiments.isotope_loads >= 10000 && std::abs(f88 - 0.92) <= 0.03
                    && u.fraction >= 0.826 && share[2] >= u.ci.lo && share[2] <= u.ci.hi;
    return {ok, "88Sr fitted " + fmt(f88) + ", selectivity-free " + fmt(u.fraction) + " [" + fmt(u.ci.lo)
                    + ", " + fmt(u.ci.hi) + "], ionization share " + fmt(share[2])};
}

Outcome shelving()
{
    const auto cfg = default_config();
    const auto r = run_shelve(20000, cfg);
    const bool ok = r.dark.n >= 1000 && std::abs(r.dark.mean / 0.395 - 1) <= 0.05 && r.ks_p_dark > 0.01;
    return {ok, std::to_string(r.dark.n) + " dark periods, mean " + fmt(r.dark.mean * 1e3) + " ms, KS p "
                    + fmt(r.ks_p_dark, 3)};
}

Outcome two_level()
{
    const double gamma = 1.0 / 7.39e-9;
    double worst = 0;
    for (double s : {0.05, 0.5, 1.0, 4.0, 20.0})
        for (double d : {0.0, 0.3, -1.0, 2.5}) {
            IonLevelSystem sys;
            sys.branch_p12_d32 = 0;
            sys.r_422 = rate_equation_pump(s, d * gamma, gamma);
            const auto out = evolve_populations(sys, 2e-6);
            worst = std::max(worst, std::abs(out.populations[P12] - excited_fraction(s, d * gamma, gamma)));
        }
    return {worst < 1e-6, "worst deviation " + fmt(worst, 3)};
}

std::string file_hash(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return fnv1a_hex(os.str());
}

std::string session_script_hash(const SimConfig& cfg, std::uint64_t seed, bool check_replay, bool& replay_ok)
{
    Session s(cfg, seed);
    auto cmd = [&](std::string kind, json args, double t) {
        s.submit({.kind = std::move(kind), .args = std::move(args), .at_sim_time = t});
    };
    cmd("set_oven_power", {{"power_w", 2.2}}, 0);
    cmd("set_shutter", {{"shutter", "cooling"}, {"open", true}}, 0);
    cmd("set_shutter", {{"shutter", "461"}, {"open", true}}, 5.01);
    cmd("set_shutter", {{"shutter", "405"}, {"open", true}}, 5.01);
    s.advance_to(30);
    cmd("set_detuning", {{"laser", "461"}, {"detuning_mhz", 100}}, 30.013);
    cmd("clear_trap", json::object(), 40);
    s.advance_to(60);
    if (check_replay)
        replay_ok = replay_events(cfg, s.events()) == s.state();
    return s.log_hash();
}

Outcome determinism()
{
    auto cfg = default_config();
    const auto root = fs::temp_directory_path() / "srload_acceptance_det";
    const std::vector<std::pair<std::string, std::string>> commands{
        {"fig2", "fig2.csv"}, {"fig3", "fig3.csv"}, {"isotopes", "isotopes.csv"},
        {"shelve", "shelve_trace.csv"}, {"rate", "rate.csv"}};
    bool ok = true;
    std::string bad;
    for (const auto& [cmd, file] : commands) {
        std::vector<std::string> hashes;
        int run = 0;
        for (int workers : {1, 1, 4, 4}) {
            cfg.workers = workers;
            const auto dir = root / (cmd + std::to_string(run++));
            fs::remove_all(dir);
            run_command(cmd, cfg, dir);
            hashes.push_back(file_hash(dir / file) + file_hash(dir / (cmd + "_summary.json")));
            fs::remove_all(dir);
        }
        if (std::count(hashes.begin(), hashes.end(), hashes.front()) != 4) {
            ok = false;
            bad += " " + cmd;
        }
    }
    bool replay_ok = false, dummy = false;
    cfg = default_config();
    const auto a = session_script_hash(cfg, 42, true, replay_ok);
    const auto b = session_script_hash(cfg, 42, false, dummy);
    ok = ok && replay_ok && a == b;
    return {ok, "CLI outputs identical over 2 runs x workers {1,4}" + (bad.empty() ? "" : " except" + bad)
                    + "; session log " + a + (a == b ? " reproduced" : " differs")
                    + (replay_ok ? ", replay matches" : ", replay MISMATCH")};
}

Outcome loading_rate_anchor()
{
    const auto r = operating_point_rates(default_config());
    return {r.captured_rate >= 0.5 && r.captured_rate <= 5,
            fmt(r.captured_rate) + " +- " + fmt(r.captured_rate_error, 2) + " captured ions/s"};
}

//! Operator bot: watches the event stream and closes both ionization
//! shutters at the end of the bin in which the Nth ion was trapped.
struct TargetBot
{
    proto::LineClient& c;
    double bin = 0.05;
    double now = 0;
    std::size_t size = 0;
    int req = 0;

    void absorb(const json& m)
    {
        if (m["type"] != "events")
            return;
        for (const auto& e : m["events"]) {
            if (e["kind"] == "captured" || e["kind"] == "fluorescence_bin")
                size = e.value("crystal_size", e.value("n_ions", size));
            if (e["kind"] == "cleared")
                size = 0;
        }
    }

    json expect(const std::string& type)
    {
        auto m = c.receive_type(type, [this](const json& o) { absorb(o); });
        if (!m)
            throw std::runtime_error("no " + type + " from service");
        return *m;
    }

    void command(json cmd)
    {
        cmd["at_sim_time"] = now;
        c.send({{"type", "command"}, {"req_id", ++req}, {"command", cmd}});
        auto ack = expect("ack");
        if (ack["accepted"] != true)
            throw std::runtime_error("command refused: " + ack.value("error", std::string{}));
    }

    void advance(double t)
    {
        c.send({{"type", "advance"}, {"until_sim_time", t}, {"req_id", ++req}});
        now = expect("advanced")["sim_time"].get<double>();
    }

    void shutters(bool open)
    {
        command({{"kind", "set_shutter"}, {"shutter", "461"}, {"open", open}});
        command({{"kind", "set_shutter"}, {"shutter", "405"}, {"open", open}});
    }

    bool attempt(std::size_t n)
    {
        command({{"kind", "clear_trap"}});
        shutters(true);
        const double deadline = now + 60;
        while (size < n && now < deadline)
            advance(now + bin);
        shutters(false);
        advance(now + 0.5);
        return size == n;
    }
};

Outcome target_n()
{
    const auto cfg = default_config();
    ConsoleServer server(cfg, ServerOptions{});
    server.start();
    std::string d;
    bool ok = true;
    for (std::size_t n : {1u, 3u}) {
        httplib::Client http("127.0.0.1", server.http_port());
        auto res = http.Post("/v1/sessions", json{{"seed", 1000 + n}, {"clock", "manual"}}.dump(),
                             "application/json");
        if (!res || res->status != 201)
            return {false, "session creation failed"};
        const auto created = json::parse(res->body);
        proto::LineClient c(created["stream"]["host"].get<std::string>(), created["stream"]["port"].get<int>());
        c.send({{"type", "attach"}, {"session", created["session"]}});
        TargetBot bot{.c = c, .bin = cfg.console.bin_period};
        bot.expect("attached");
        bot.command({{"kind", "set_oven_power"}, {"power_w", cfg.beamline.oven.dissipated_power}});
        bot.command({{"kind", "set_shutter"}, {"shutter", "cooling"}, {"open", true}});
        bot.advance(60);
        int success = 0;
        for (int i = 0; i < 100; ++i)
            success += bot.attempt(n) ? 1 : 0;
        c.send({{"type", "bye"}});
        ok = ok && success >= 90;
        d += "N=" + std::to_string(n) + ": " + std::to_string(success) + "/100; ";
    }
    server.stop();
    return {ok, d};
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"saturation intensity", saturation},
        {"intensity arithmetic", intensities},
        {"cross-section profile", cross_section},
        {"transit-probability oracle", transit_oracle},
        {"first-ion vs detuning shape", fig3_shape},
        {"first-ion vs oven power shape", fig2_shape},
        {"isotope selectivity", isotope_selectivity},
        {"shelving statistics", shelving},
        {"two-level reduction", two_level},
        {"determinism", determinism},
        {"loading-rate anchor", loading_rate_anchor},
        {"target-N protocol", target_n},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << " — " << o.detail << " (" << fmt(secs, 3)
                  << " s)" << std::endl;
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
