#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "srload/physics.hpp"
#include "srload/source_beam.hpp"

namespace srload {

//! Photoionization lasers. beam_461 detuning is angular, relative to the
//! rest-frame 88Sr 1S0-1P1 resonance.
struct LaserSetup
{
    GaussianBeam beam_461;
    GaussianBeam beam_405;
    bool shutter_461 = true;  // true = open
    bool shutter_405 = true;

    void validate(std::string_view where) const;
};

struct IonizationResult
{
    double probability = 0;
    double transit_time = 0;  // s, time inside the larger beam's 1/e^2 radius
    bool missed = false;      // trajectory passes outside both beams
};

//! Everything about the neutral beam and the ionization pathway that does
//! not change while an experiment runs.
struct BeamlineModel
{
    OvenConfig oven;
    BeamGeometry geometry;
    std::vector<IsotopeSpec> isotopes;
    TransitionSpec line_461;
    AutoIonizingProfile autoionizing;

    void validate(std::string_view where) const;
};

//! Beam radius, in units of the larger waist, beyond which a trajectory is
//! flagged as missing the lasers.
inline constexpr double miss_radius_in_waists = 4.5;

/*!
 * Two-step ionization probability for one straight-line transit.
 *
 * The 1P1 population is the local steady state rho_ee(s(r), delta_eff) and the
 * ionization exponent is the integral of rho_ee * R_ion(r) along the path,
 * evaluated by adaptive Simpson quadrature on panels no longer than
 * w0 / (20 v_perp).
 */
IonizationResult transit_ionization_probability(const AtomSample& a, const IsotopeSpec& iso,
                                                const LaserSetup& lasers,
                                                const BeamGeometry& geom,
                                                const AutoIonizingProfile& profile,
                                                const TransitionSpec& line_461);

//! Effective 461 nm detuning seen by the atom: laser + Doppler - isotope shift.
double effective_detuning_461(const AtomSample& a, const IsotopeSpec& iso,
                              const LaserSetup& lasers, const BeamGeometry& geom,
                              const TransitionSpec& line_461);

/*!
 * Rest-frame 461 nm laser detuning that is resonant with the most probable
 * atoms of the ionization-weighted ensemble of one isotope (speed
 * sqrt(2kT/m) projected onto the lasers, averaged over the collimation cone).
 */
double doppler_line_center(const BeamlineModel& model, std::size_t isotope, double temperature);

struct RateEstimate
{
    double rate = 0;       // 1/s
    double std_error = 0;  // 1/s
    std::size_t samples = 0;
};

struct MeanEstimate
{
    double mean = 0;
    double std_error = 0;
    std::size_t samples = 0;
};

/*!
 * Monte Carlo transit probabilities drawn at a reference oven temperature.
 *
 * Means at other temperatures are obtained by reweighting each sample by the
 * ratio of beam speed densities, so one set of trajectory integrals serves a
 * whole oven ramp. Samples are drawn in fixed chunks with per-chunk RNG
 * streams; the result is independent of the worker count.
 */
class IonizationSampleSet
{
  public:
    static constexpr std::size_t chunk_size = 512;

    IonizationSampleSet() = default;
    IonizationSampleSet(const BeamlineModel& model, const LaserSetup& lasers,
                        double reference_temperature, std::size_t n_samples,
                        std::uint64_t seed, int workers);

    double reference_temperature() const { return reference_temperature_; }
    std::size_t size() const { return total_; }
    std::size_t count(std::size_t isotope) const { return speeds_[isotope].size(); }
    std::size_t missed() const { return missed_; }

    MeanEstimate mean_probability(std::size_t isotope, double temperature) const;

  private:
    double reference_temperature_ = 0;
    std::size_t total_ = 0;
    std::size_t missed_ = 0;
    std::vector<double> masses_;
    std::vector<std::vector<double>> speeds_;
    std::vector<std::vector<double>> probabilities_;
};

//! Per-isotope ionization rates flux(T) x <P> with standard errors.
std::vector<RateEstimate> loading_rate(double temperature, const LaserSetup& lasers,
                                       const BeamlineModel& model, std::size_t n_mc,
                                       std::uint64_t seed, int workers = 1);

//! Ionization rates from an existing sample set, reweighted to `temperature`.
std::vector<RateEstimate> loading_rate(double temperature, const BeamlineModel& model,
                                       const IonizationSampleSet& samples);

/*!
 * Cumulative expected number of captured ions during an oven ramp from
 * ambient at constant power, sampled every `dt` up to `horizon`.
 */
class ArrivalCurve
{
  public:
    ArrivalCurve(const BeamlineModel& model, const IonizationSampleSet& samples,
                 std::span<const double> capture_weight, double oven_power, double horizon,
                 double dt = 0.01);

    //! Smallest t with cumulative(t) = target, or nullopt beyond the horizon.
    std::optional<double> time_to_reach(double target) const;
    double cumulative_at(double t) const;
    double horizon() const { return horizon_; }
    //! Capture rate at the end of the horizon.
    double final_rate() const { return final_rate_; }

  private:
    double dt_;
    double horizon_;
    double final_rate_ = 0;
    std::vector<double> cumulative_;
};

//! Mean transit probability per isotope on a temperature grid, with linear
//! interpolation between grid points.
class ProbabilityTable
{
  public:
    ProbabilityTable() = default;
    ProbabilityTable(const IonizationSampleSet& samples, std::size_t n_isotopes,
                     double t_min, double t_max, std::size_t n_points = 97);

    double at(std::size_t isotope, double temperature) const;

  private:
    double t_min_ = 0, t_max_ = 0;
    std::vector<std::vector<double>> table_;
};

}  // namespace srload
