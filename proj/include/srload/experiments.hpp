#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "srload/config.hpp"
#include "srload/stats.hpp"

namespace srload {

/*!
 * Time at which the expected number of captured ions, integrated over the
 * oven ramp from ambient at `oven_power`, first reaches one. nullopt means no
 * ion within the configured horizon. `detuning_461` is relative to the
 * configured reference.
 */
std::optional<double> expected_time_to_first_ion(double oven_power, double detuning_461,
                                                 const SimConfig& cfg);

//! One point of a first-ion sweep.
struct FirstIonPoint
{
    double x = 0;               // oven power (W) or detuning (rad/s)
    double mean_time = 0;       // s; +inf when any run is censored
    double std_error = 0;       // s; +inf when any run is censored
    std::size_t n_runs = 0;
    std::size_t n_censored = 0;
    std::optional<double> expected_time;  // deterministic integral-reaches-one time
};

/*!
 * Monte Carlo first-ion times. Each run draws E ~ Exp(1) and records the time
 * at which the cumulative expected capture count reaches E, i.e. the first
 * arrival of the inhomogeneous Poisson capture process.
 */
std::vector<FirstIonPoint> first_ion_vs_power(const SimConfig& cfg, std::span<const double> powers);
std::vector<FirstIonPoint> first_ion_vs_detuning(const SimConfig& cfg,
                                                 std::span<const double> detunings);

//! Floor, centre and full width at half maximum of 1/mean_time(x).
struct LineShape
{
    double floor = std::numeric_limits<double>::infinity();
    double center = std::numeric_limits<double>::quiet_NaN();
    double fwhm = std::numeric_limits<double>::quiet_NaN();  // NaN if a side never drops to half
};

LineShape analyze_line(std::span<const double> x, std::span<const double> mean_time);

struct IsotopeFraction
{
    int mass_number = 0;
    std::uint64_t captured = 0;
    double fraction = 0;
    Interval ci;
    double ionization_share = 0;  // share of ionization events
};

struct LoadedFractionReport
{
    std::size_t n_loads = 0;
    std::uint64_t created = 0;
    std::uint64_t captured = 0;
    std::vector<IsotopeFraction> isotopes;
};

/*!
 * Full-pipeline loads at the nominal operating point: ions are created with
 * the isotope mix of the ionization rates and offered to the trap one by one
 * until it holds ions_per_load ions.
 */
LoadedFractionReport loaded_fraction_report(std::size_t n_loads, const SimConfig& cfg);

//! Same, with externally supplied ionization shares.
LoadedFractionReport loaded_fraction_report(std::size_t n_loads, const SimConfig& cfg,
                                            std::span<const double> ionization_share);

//! Per-isotope ionization shares at the nominal operating point.
std::vector<double> ionization_shares(const SimConfig& cfg);

struct ShelveResult
{
    TelegraphParams params;
    TelegraphTrace trace;
    SampleSummary dark;
    SampleSummary bright;
    double ks_p_dark = 1;     // KS p-value of dark dwells vs exponential(deshelving)
    double ks_p_bright = 1;
    double dark_fraction = 0;
    double expected_dark_fraction = 0;
};

ShelveResult run_shelve(double duration, const SimConfig& cfg);

struct RateReport
{
    double temperature = 0;  // K
    double detuning_461 = 0; // rad/s, rest frame
    std::vector<RateEstimate> ionization;
    std::vector<double> capture_probability;
    double captured_rate = 0;
    double captured_rate_error = 0;
};

//! Steady-state rates at the nominal oven power and laser settings.
RateReport operating_point_rates(const SimConfig& cfg);

struct RunManifest
{
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version;
    std::string command;
    std::vector<std::string> arguments;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;
};

nlohmann::json to_json(const RunManifest& m);

//! Commands understood by run_command.
inline constexpr const char* command_names[] = {"fig2", "fig3", "isotopes", "shelve", "rate"};

/*!
 * Run one experiment command and write its CSV, JSON summary and manifest
 * into `out_dir`. Returns the manifest.
 */
RunManifest run_command(const std::string& command, const SimConfig& cfg,
                        const std::filesystem::path& out_dir,
                        const std::vector<std::string>& arguments = {});

//! Format doubles for CSV: shortest round-trip representation, "inf" for infinity.
std::string format_number(double v);

}  // namespace srload
