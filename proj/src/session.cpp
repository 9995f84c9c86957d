#include "srload/session.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "srload/error.hpp"

namespace srload {

using nlohmann::json;

namespace {

constexpr const char* kind_names[] = {"ionized",     "captured", "rejected",  "fluorescence_bin",
                                      "shelved",     "deshelved", "oven_update", "command",
                                      "cleared"};

// Largest 461 nm detuning a console may request.
constexpr double max_detuning_mhz = 20000.0;
constexpr double max_time_scale = 1.0e4;

std::optional<CoolingClass> cooling_from_string(const std::string& s)
{
    for (auto c : {CoolingClass::cooled, CoolingClass::heated, CoolingClass::uncoupled})
        if (s == to_string(c))
            return c;
    return std::nullopt;
}

double mhz_to_angular(double v) { return units::angular(v * units::MHz); }

}  // namespace

const char* to_string(EventKind k) { return kind_names[static_cast<int>(k)]; }

std::optional<EventKind> event_kind_from_string(std::string_view s)
{
    for (int i = 0; i < static_cast<int>(std::size(kind_names)); ++i)
        if (s == kind_names[i])
            return static_cast<EventKind>(i);
    return std::nullopt;
}

json to_json(const SimEvent& e)
{
    json j = e.payload;
    j["seq"] = e.seq;
    j["sim_time"] = e.sim_time;
    j["kind"] = to_string(e.kind);
    return j;
}

SimEvent event_from_json(const json& j)
{
    SimEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.sim_time = j.at("sim_time").get<double>();
    const auto kind = event_kind_from_string(j.at("kind").get<std::string>());
    if (!kind)
        throw std::invalid_argument("unknown event kind");
    e.kind = *kind;
    e.payload = j;
    e.payload.erase("seq");
    e.payload.erase("sim_time");
    e.payload.erase("kind");
    return e;
}

json to_json(const Command& c)
{
    json j = c.args;
    j["kind"] = c.kind;
    j["at_sim_time"] = c.at_sim_time;
    return j;
}

Command command_from_json(const json& j)
{
    if (!j.is_object())
        throw ValidationError("command", "expected an object");
    Command c;
    if (!j.contains("kind") || !j["kind"].is_string())
        throw ValidationError("command.kind", "expected a string");
    c.kind = j["kind"].get<std::string>();
    if (!j.contains("at_sim_time") || !j["at_sim_time"].is_number())
        throw ValidationError("command.at_sim_time", "expected a number");
    c.at_sim_time = j["at_sim_time"].get<double>();
    c.args = j;
    c.args.erase("kind");
    c.args.erase("at_sim_time");
    return c;
}

json to_json(const SessionState& s, const SimConfig& cfg)
{
    json ions = json::array();
    for (std::size_t i = 0; i < s.crystal.size(); ++i) {
        const auto& ion = s.crystal.ions()[i];
        ions.push_back({{"id", ion.id},
                        {"isotope", cfg.beamline.isotopes[ion.isotope].name()},
                        {"cooling", to_string(ion.cooling)},
                        {"capture_time", ion.capture_time},
                        {"bright", static_cast<bool>(s.bright[i])}});
    }
    json created = json::object(), captured = json::object();
    for (std::size_t i = 0; i < cfg.beamline.isotopes.size(); ++i) {
        created[cfg.beamline.isotopes[i].name()] = s.crystal.created_total()[i];
        captured[cfg.beamline.isotopes[i].name()] = s.crystal.captured_total()[i];
    }
    return {{"sim_time", s.sim_time},
            {"step", s.step},
            {"time_scale", s.time_scale},
            {"oven_power_w", s.oven_power},
            {"oven_temperature_k", s.oven_temperature},
            {"shutters", {{"461", s.shutter_461}, {"405", s.shutter_405}, {"cooling", s.shutter_cooling}}},
            {"detuning_461_mhz", units::ordinary(s.detuning_461) / units::MHz},
            {"detuning_422_mhz", units::ordinary(s.detuning_422) / units::MHz},
            {"crystal", ions},
            {"crystal_size", s.crystal.size()},
            {"created_total", created},
            {"captured_total", captured}};
}

SessionState initial_session_state(const SimConfig& cfg)
{
    SessionState s;
    s.time_scale = cfg.console.time_scale;
    s.oven_temperature = cfg.beamline.oven.ambient_temperature;
    s.detuning_461 = cfg.lasers.beam_461.detuning;
    s.detuning_422 = cfg.cooling.detuning_88;
    s.crystal = IonCrystal(cfg.beamline.isotopes.size(), cfg.trap.capacity);
    return s;
}

std::optional<std::string> check_command(const Command& c, const SessionState& s,
                                         const SimConfig& cfg)
{
    if (!std::isfinite(c.at_sim_time))
        return "at_sim_time must be finite";
    if (c.at_sim_time < s.sim_time)
        return "at_sim_time lies in the past (sim_time " + std::to_string(s.sim_time) + ")";
    const auto& a = c.args;
    auto number = [&](const char* key) -> std::optional<double> {
        if (!a.contains(key) || !a[key].is_number())
            return std::nullopt;
        const double v = a[key].get<double>();
        return std::isfinite(v) ? std::optional(v) : std::nullopt;
    };
    if (c.kind == "set_oven_power") {
        const auto p = number("power_w");
        if (!p)
            return "power_w must be a number";
        if (*p < 0 || *p > cfg.console.max_oven_power)
            return "power_w must lie in [0, " + std::to_string(cfg.console.max_oven_power) + "] W";
        return std::nullopt;
    }
    if (c.kind == "set_shutter") {
        if (!a.contains("shutter") || !a["shutter"].is_string())
            return "shutter must be one of \"461\", \"405\", \"cooling\"";
        const auto name = a["shutter"].get<std::string>();
        if (name != "461" && name != "405" && name != "cooling")
            return "shutter must be one of \"461\", \"405\", \"cooling\"";
        if (!a.contains("open") || !a["open"].is_boolean())
            return "open must be true or false";
        return std::nullopt;
    }
    if (c.kind == "set_detuning") {
        if (!a.contains("laser") || !a["laser"].is_string()
            || (a["laser"] != "461" && a["laser"] != "422"))
            return "laser must be \"461\" or \"422\"";
        const auto d = number("detuning_mhz");
        if (!d)
            return "detuning_mhz must be a number";
        if (std::abs(*d) > max_detuning_mhz)
            return "detuning_mhz out of range";
        return std::nullopt;
    }
    if (c.kind == "set_time_scale") {
        const auto v = number("time_scale");
        if (!v || *v < 0 || *v > max_time_scale)
            return "time_scale must lie in [0, 10000]";
        return std::nullopt;
    }
    if (c.kind == "clear_trap")
        return std::nullopt;
    return "unknown command kind '" + c.kind + "'";
}

Session::Session(SimConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg))
    , seed_(seed)
{
    cfg_.validate();
    state_ = initial_session_state(cfg_);
}

CommandAck Session::submit(const Command& c)
{
    if (auto err = check_command(c, state_, cfg_))
        return {.accepted = false, .error = *err, .index = 0};
    const std::uint64_t index = submitted_++;
    auto pos = std::upper_bound(pending_.begin(), pending_.end(), c.at_sim_time,
                                [](double t, const auto& p) { return t < p.first.at_sim_time; });
    pending_.insert(pos, {c, index});
    history_.push_back(c);
    // A command stamped "now" takes effect immediately.
    advance_to(state_.sim_time);
    return {.accepted = true, .error = {}, .index = index};
}

void Session::emit(double t, EventKind k, json payload)
{
    log_.push_back({.seq = log_.size(), .sim_time = t, .kind = k, .payload = std::move(payload)});
}

double Session::bin_end() const
{
    return static_cast<double>(state_.step + 1) * cfg_.console.bin_period;
}

void Session::apply(const Command& c)
{
    const auto& a = c.args;
    if (c.kind == "set_oven_power") {
        state_.oven_power = a["power_w"].get<double>();
    } else if (c.kind == "set_shutter") {
        const auto name = a["shutter"].get<std::string>();
        const bool open = a["open"].get<bool>();
        (name == "461" ? state_.shutter_461 : name == "405" ? state_.shutter_405 : state_.shutter_cooling) = open;
    } else if (c.kind == "set_detuning") {
        const double d = mhz_to_angular(a["detuning_mhz"].get<double>());
        (a["laser"] == "461" ? state_.detuning_461 : state_.detuning_422) = d;
    } else if (c.kind == "set_time_scale") {
        state_.time_scale = a["time_scale"].get<double>();
    }
    emit(state_.sim_time, EventKind::command, {{"command", to_json(c)}});
    if (c.kind == "clear_trap") {
        const auto n = state_.crystal.size();
        state_.crystal.clear();
        state_.bright.clear();
        emit(state_.sim_time, EventKind::cleared, {{"removed", n}});
    }
}

const ProbabilityTable& Session::table() const
{
    const auto key = std::bit_cast<std::uint64_t>(state_.detuning_461);
    auto it = tables_.find(key);
    if (it != tables_.end())
        return it->second;
    const auto& oven = cfg_.beamline.oven;
    const double t_hot = oven.steady_state_temperature(cfg_.console.max_oven_power);
    const std::uint64_t seed = Rng::stream(seed_, {streams::session_rates, key}).next();
    IonizationSampleSet samples(cfg_.beamline, cfg_.resolved_lasers(state_.detuning_461), t_hot,
                                cfg_.console.rate_samples, seed, cfg_.workers);
    return tables_
        .emplace(key, ProbabilityTable(samples, cfg_.beamline.isotopes.size(),
                                       oven.ambient_temperature, t_hot))
        .first->second;
}

std::vector<double> Session::rates_at(double temperature) const
{
    std::vector<double> r(cfg_.beamline.isotopes.size(), 0.0);
    if (!state_.shutter_461 || !state_.shutter_405)
        return r;
    const auto& tab = table();
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = beam_flux(temperature, cfg_.beamline.oven, cfg_.beamline.isotopes[i]) * tab.at(i, temperature);
    return r;
}

std::vector<double> Session::ionization_rates() const { return rates_at(state_.oven_temperature); }

std::vector<CoolingClass> Session::classes() const
{
    std::vector<CoolingClass> out;
    for (const auto& iso : cfg_.beamline.isotopes)
        out.push_back(state_.shutter_cooling
                          ? classify_cooling(iso, state_.detuning_422, cfg_.cooling.far_threshold)
                          : CoolingClass::uncoupled);
    return out;
}

double Session::expected_capture_rate() const
{
    const auto r = ionization_rates();
    const auto cls = classes();
    const std::size_t n_cooled = state_.crystal.cooled_count();
    double total = 0;
    for (std::size_t i = 0; i < r.size(); ++i)
        total += r[i] * cfg_.capture.probability(cls[i], n_cooled);
    return state_.crystal.full() ? 0.0 : total;
}

void Session::simulate_segment(double t1)
{
    const double t0 = state_.sim_time;
    const double dt = t1 - t0;
    const auto& oven = cfg_.beamline.oven;
    const double temp0 = state_.oven_temperature;
    const double temp1 = oven_temperature_step(oven, temp0, state_.oven_power, dt);

    std::vector<SimEvent> pending;
    auto local = [&](double t, EventKind k, json payload) {
        pending.push_back({.seq = 0, .sim_time = t, .kind = k, .payload = std::move(payload)});
    };

    // Ionization and capture.
    const std::size_t seg = segment_++;
    std::vector<std::pair<double, std::size_t>> births;
    if (state_.shutter_461 && state_.shutter_405) {
        const auto r0 = rates_at(temp0);
        const auto r1 = rates_at(temp1);
        Rng rng = Rng::stream(seed_, {streams::session_ionize, state_.step, seg});
        for (std::size_t i = 0; i < r0.size(); ++i) {
            const auto n = rng.poisson(0.5 * (r0[i] + r1[i]) * dt);
            for (std::uint64_t k = 0; k < n; ++k)
                births.emplace_back(t0 + dt * rng.uniform(), i);
        }
        std::sort(births.begin(), births.end());
    }
    const auto cls = classes();
    Rng cap_rng = Rng::stream(seed_, {streams::session_capture, state_.step, seg});
    std::vector<double> start(state_.crystal.size(), t0);  // telegraph start per ion
    for (const auto& [t, iso] : births) {
        const std::uint64_t id = state_.next_ion_id++;
        const auto& name = cfg_.beamline.isotopes[iso].name();
        state_.crystal.record_created(iso);
        local(t, EventKind::ionized, {{"ion_id", id}, {"isotope", name}});
        const auto outcome = capture_with_draw({.id = id, .isotope = iso, .time = t}, cls[iso],
                                               state_.crystal, cfg_.capture, cap_rng.uniform());
        if (outcome == CaptureOutcome::captured) {
            state_.bright.push_back(true);
            start.push_back(t);
            local(t, EventKind::captured,
                  {{"ion_id", id}, {"isotope", name}, {"cooling", to_string(cls[iso])},
                   {"crystal_size", state_.crystal.size()}});
        } else {
            local(t, EventKind::rejected,
                  {{"ion_id", id}, {"isotope", name}, {"cooling", to_string(cls[iso])},
                   {"reason", to_string(outcome)}});
        }
    }

    // Shelving telegraph and expected photon counts.
    const auto& fl = cfg_.fluorescence;
    const bool cooling_on = state_.shutter_cooling;
    const double k_shelve = (cooling_on && state_.shutter_405)
                                ? fl.shelving_rate_per_watt * cfg_.lasers.beam_405.power : 0.0;
    const double k_deshelve = 1.0 / fl.levels.tau_d52;
    const auto ions = state_.crystal.ions();
    for (std::size_t j = 0; j < ions.size(); ++j) {
        Rng rng = Rng::stream(seed_, {streams::telegraph, state_.step, seg, ions[j].id});
        double t = start[j];
        bool bright = state_.bright[j];
        double bright_time = 0;
        while (true) {
            const double rate = bright ? k_shelve : k_deshelve;
            const double next = rate > 0 ? t + rng.exponential(rate) : t1;
            if (next >= t1) {
                if (bright)
                    bright_time += t1 - t;
                break;
            }
            if (bright)
                bright_time += next - t;
            bright = !bright;
            local(next, bright ? EventKind::deshelved : EventKind::shelved, {{"ion_id", ions[j].id}});
            t = next;
        }
        state_.bright[j] = bright;
        if (!cooling_on)
            continue;
        if (ions[j].cooling == CoolingClass::cooled)
            bin_expected_counts_ += fl.collection_efficiency * fl.bright_scatter_rate * bright_time;
        else
            bin_expected_counts_ += fl.collection_efficiency * fl.nonfluorescing_rate * (t1 - start[j]);
    }

    std::stable_sort(pending.begin(), pending.end(),
                     [](const SimEvent& a, const SimEvent& b) { return a.sim_time < b.sim_time; });
    for (auto& e : pending)
        emit(e.sim_time, e.kind, std::move(e.payload));
    state_.oven_temperature = temp1;
    state_.sim_time = t1;
}

void Session::finish_bin()
{
    const auto& fl = cfg_.fluorescence;
    Rng rng = Rng::stream(seed_, {streams::counts, state_.step});
    const double mean = bin_expected_counts_ + fl.dark_count_rate * cfg_.console.bin_period;
    const auto counts = rng.poisson(mean);
    std::size_t n_bright = 0;
    if (state_.shutter_cooling) {
        const auto ions = state_.crystal.ions();
        for (std::size_t j = 0; j < ions.size(); ++j)
            n_bright += (ions[j].cooling == CoolingClass::cooled && state_.bright[j]) ? 1 : 0;
    }
    ++state_.step;
    bin_expected_counts_ = 0;
    segment_ = 0;
    emit(state_.sim_time, EventKind::fluorescence_bin,
         {{"counts", counts}, {"n_bright", n_bright}, {"n_ions", state_.crystal.size()},
          {"bin_s", cfg_.console.bin_period}});
    emit(state_.sim_time, EventKind::oven_update,
         {{"power_w", state_.oven_power}, {"temperature_k", state_.oven_temperature}});
}

void Session::advance_to(double t)
{
    if (!std::isfinite(t))
        throw std::invalid_argument("advance target must be finite");
    // Only whole bins are simulated, so the log cannot depend on how finely
    // the caller advances; commands are the only thing that split a bin.
    const double whole = std::floor(t / cfg_.console.bin_period + 1e-9);
    const std::uint64_t target =
        whole > static_cast<double>(state_.step) ? static_cast<std::uint64_t>(whole) : state_.step;
    while (true) {
        while (!pending_.empty() && pending_.front().first.at_sim_time <= state_.sim_time) {
            const Command c = pending_.front().first;
            pending_.pop_front();
            apply(c);
        }
        if (state_.step >= target)
            break;
        const double end = bin_end();
        double seg_end = end;
        if (!pending_.empty())
            seg_end = std::min(seg_end, pending_.front().first.at_sim_time);
        simulate_segment(seg_end);
        if (seg_end == end)
            finish_bin();
    }
}

std::span<const SimEvent> Session::events_from(std::uint64_t cursor) const
{
    if (cursor >= log_.size())
        return {};
    return std::span<const SimEvent>(log_).subspan(cursor);
}

std::string Session::log_hash() const
{
    std::string buf;
    for (const auto& e : log_) {
        buf += to_json(e).dump();
        buf += '\n';
    }
    return fnv1a_hex(buf);
}

SessionState replay_events(const SimConfig& cfg, std::span<const SimEvent> events)
{
    SessionState s = initial_session_state(cfg);
    auto isotope_index = [&](const json& p) {
        const auto name = p.at("isotope").get<std::string>();
        for (std::size_t i = 0; i < cfg.beamline.isotopes.size(); ++i)
            if (cfg.beamline.isotopes[i].name() == name)
                return i;
        throw std::invalid_argument("unknown isotope " + name);
    };
    auto ion_index = [&](std::uint64_t id) {
        const auto ions = s.crystal.ions();
        for (std::size_t j = 0; j < ions.size(); ++j)
            if (ions[j].id == id)
                return j;
        throw std::invalid_argument("event refers to an ion not in the crystal");
    };
    for (const auto& e : events) {
        const auto& p = e.payload;
        s.sim_time = std::max(s.sim_time, e.sim_time);
        switch (e.kind) {
        case EventKind::command: {
            const Command c = command_from_json(p.at("command"));
            const auto& a = c.args;
            if (c.kind == "set_oven_power")
                s.oven_power = a.at("power_w").get<double>();
            else if (c.kind == "set_shutter") {
                const auto name = a.at("shutter").get<std::string>();
                (name == "461" ? s.shutter_461 : name == "405" ? s.shutter_405 : s.shutter_cooling) =
                    a.at("open").get<bool>();
            } else if (c.kind == "set_detuning")
                (a.at("laser") == "461" ? s.detuning_461 : s.detuning_422) =
                    mhz_to_angular(a.at("detuning_mhz").get<double>());
            else if (c.kind == "set_time_scale")
                s.time_scale = a.at("time_scale").get<double>();
            break;
        }
        case EventKind::cleared:
            s.crystal.clear();
            s.bright.clear();
            break;
        case EventKind::ionized:
            s.crystal.record_created(isotope_index(p));
            s.next_ion_id = p.at("ion_id").get<std::uint64_t>() + 1;
            break;
        case EventKind::captured: {
            const auto cooling = cooling_from_string(p.at("cooling").get<std::string>());
            if (!cooling)
                throw std::invalid_argument("bad cooling class");
            s.crystal.add({.id = p.at("ion_id").get<std::uint64_t>(),
                           .isotope = isotope_index(p),
                           .cooling = *cooling,
                           .capture_time = e.sim_time});
            s.bright.push_back(true);
            break;
        }
        case EventKind::shelved:
            s.bright[ion_index(p.at("ion_id").get<std::uint64_t>())] = false;
            break;
        case EventKind::deshelved:
            s.bright[ion_index(p.at("ion_id").get<std::uint64_t>())] = true;
            break;
        case EventKind::fluorescence_bin:
            ++s.step;
            break;
        case EventKind::oven_update:
            s.oven_temperature = p.at("temperature_k").get<double>();
            break;
        case EventKind::rejected:
            break;
        }
    }
    return s;
}

}  // namespace srload
