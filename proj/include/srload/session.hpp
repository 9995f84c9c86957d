#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "srload/config.hpp"

namespace srload {

enum class EventKind {
    ionized,
    captured,
    rejected,
    fluorescence_bin,
    shelved,
    deshelved,
    oven_update,
    command,  // a control command took effect
    cleared,  // trap emptied by clear_trap
};

const char* to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

//! One entry of the append-only session log. `payload` holds the kind-specific
//! fields (isotope, counts, temperature, ...).
struct SimEvent
{
    std::uint64_t seq = 0;
    double sim_time = 0;
    EventKind kind = EventKind::oven_update;
    nlohmann::json payload = nlohmann::json::object();

    bool operator==(const SimEvent&) const = default;
};

nlohmann::json to_json(const SimEvent& e);
SimEvent event_from_json(const nlohmann::json& j);

//! Control command. `args` holds the kind-specific fields, e.g.
//! {"power_w": 2} for set_oven_power.
struct Command
{
    std::string kind;
    nlohmann::json args = nlohmann::json::object();
    double at_sim_time = 0;
};

nlohmann::json to_json(const Command& c);
Command command_from_json(const nlohmann::json& j);

struct CommandAck
{
    bool accepted = false;
    std::string error;
    std::uint64_t index = 0;  // submission index when accepted
};

//! Observable session state; everything here can be rebuilt from the log.
struct SessionState
{
    double sim_time = 0;
    std::uint64_t step = 0;  // completed fluorescence bins
    double time_scale = 1;
    double oven_power = 0;
    double oven_temperature = 0;
    bool shutter_461 = false;
    bool shutter_405 = false;
    bool shutter_cooling = false;
    double detuning_461 = 0;  // rad/s, relative to the configured reference
    double detuning_422 = 0;  // rad/s, relative to the 88Sr+ resonance
    IonCrystal crystal;
    std::vector<bool> bright;  // parallel to crystal.ions()
    std::uint64_t next_ion_id = 0;

    bool operator==(const SessionState&) const = default;
};

nlohmann::json to_json(const SessionState& s, const SimConfig& cfg);

/*!
 * Event-sourced simulation session.
 *
 * Time advances in fixed fluorescence bins; a bin is split at command times.
 * All random draws are keyed to (seed, bin index, segment index[, ion id]), so
 * the log is a pure function of the configuration, the seed and the
 * timestamped command script. Not thread-safe; callers serialize access.
 */
class Session
{
  public:
    Session(SimConfig cfg, std::uint64_t seed);

    const SimConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }
    const SessionState& state() const { return state_; }
    double sim_time() const { return state_.sim_time; }

    //! Validate and queue a command. Rejected commands leave the state unchanged.
    CommandAck submit(const Command& c);

    //! Simulate every whole bin ending at or before `t`; sim_time() always
    //! stays on a bin boundary.
    void advance_to(double t);

    const std::vector<SimEvent>& events() const { return log_; }
    //! Events with seq >= cursor; a cursor beyond the log yields nothing.
    std::span<const SimEvent> events_from(std::uint64_t cursor) const;
    std::uint64_t next_cursor() const { return log_.size(); }

    //! Commands accepted so far, in submission order.
    const std::vector<Command>& command_history() const { return history_; }

    //! Instantaneous expected capture rate, 1/s.
    double expected_capture_rate() const;
    //! Per-isotope ionization rates at the current state, 1/s.
    std::vector<double> ionization_rates() const;

    //! FNV-1a over the serialized log.
    std::string log_hash() const;

  private:
    void apply(const Command& c);
    void simulate_segment(double t1);
    void finish_bin();
    double bin_end() const;
    const ProbabilityTable& table() const;
    std::vector<double> rates_at(double temperature) const;
    std::vector<CoolingClass> classes() const;
    void emit(double t, EventKind k, nlohmann::json payload);

    SimConfig cfg_;
    std::uint64_t seed_;
    SessionState state_;
    std::vector<SimEvent> log_;
    std::vector<Command> history_;
    std::deque<std::pair<Command, std::uint64_t>> pending_;  // sorted by (time, index)
    std::uint64_t submitted_ = 0;
    std::uint64_t segment_ = 0;
    double bin_expected_counts_ = 0;
    mutable std::map<std::uint64_t, ProbabilityTable> tables_;
};

//! Initial state of a new session.
SessionState initial_session_state(const SimConfig& cfg);

//! Rebuild the observable state by folding a complete event log.
SessionState replay_events(const SimConfig& cfg, std::span<const SimEvent> events);

//! Validate a command against a state without applying it; returns the error.
std::optional<std::string> check_command(const Command& c, const SessionState& s,
                                         const SimConfig& cfg);

}  // namespace srload
