#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "srload/capture.hpp"
#include "srload/fluorescence.hpp"
#include "srload/ionization.hpp"

namespace srload {

enum class DetuningReference {
    doppler_center,  // zero = 88Sr loading line at the nominal oven temperature
    rest_frame,      // zero = 88Sr resonance for an atom at rest
};

struct CoolingConfig
{
    double detuning_88 = 0;    // rad/s, 422 nm laser relative to 88Sr+
    double far_threshold = 0;  // rad/s
};

struct FluorescenceConfig
{
    IonLevelSystem levels;             // decay constants; pumps unused by the telegraph
    double bright_scatter_rate = 0;    // photons/s for a cooled, bright ion
    double collection_efficiency = 0;
    double dark_count_rate = 0;        // counts/s
    double shelving_rate_per_watt = 0; // 1/s per W of 405 nm power (ASE at 408 nm)
    double nonfluorescing_rate = 0;    // photons/s from heated/uncoupled ions

    //! Telegraph parameters with the 405 nm beam at `power_405` (0 if closed).
    TelegraphParams telegraph(double power_405) const;
};

struct ExperimentConfig
{
    std::vector<double> fig2_powers;     // W
    std::vector<double> fig3_detunings;  // rad/s, relative to the 461 reference
    double fig3_zero_frequency = 0;      // Hz, absolute frequency of detuning zero
    std::size_t runs_per_point = 0;
    std::size_t isotope_loads = 0;
    std::size_t ions_per_load = 0;
    double shelve_duration = 0;  // s
    double bin = 0;              // s
};

struct ConsoleConfig
{
    double bin_period = 0.05;  // s of sim time
    double time_scale = 1.0;
    double max_oven_power = 4.0;  // W
    std::size_t rate_samples = 0;
};

//! Complete simulation configuration.
struct SimConfig
{
    BeamlineModel beamline;
    LaserSetup lasers;  // beam_461.detuning relative to reference_461
    DetuningReference reference_461 = DetuningReference::doppler_center;
    CoolingConfig cooling;
    TrapConfig trap;
    CaptureModel capture;
    FluorescenceConfig fluorescence;
    ExperimentConfig experiments;
    ConsoleConfig console;

    std::uint64_t master_seed = 0;
    std::size_t mc_samples = 0;
    int workers = 1;
    double horizon = 300.0;  // s

    //! Rest-frame angular detuning corresponding to configured zero.
    double reference_detuning_461() const;
    //! Lasers with beam_461 detuning converted to rest frame; `detuning` is
    //! relative to the configured reference.
    LaserSetup resolved_lasers(double detuning) const;
    LaserSetup resolved_lasers() const { return resolved_lasers(lasers.beam_461.detuning); }

    //! Per-isotope cooling classification under the configured 422 nm laser.
    std::vector<CoolingClass> cooling_classes() const;
    //! Capture probability of each isotope into an empty trap.
    std::vector<double> empty_trap_capture() const;

    void validate() const;
};

SimConfig default_config();

//! Parse a configuration; missing keys take defaults, unknown keys are errors.
SimConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SimConfig& c);
SimConfig load_config(const std::filesystem::path& path);

//! 64-bit FNV-1a of the canonical JSON form without `workers`, as 16 hex digits.
std::string config_hash(const SimConfig& c);
std::string fnv1a_hex(std::string_view bytes);

}  // namespace srload
