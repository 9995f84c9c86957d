#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "srload/rng.hpp"

namespace srload {

/*!
 * Resistively heated oven.
 *
 * Temperature follows a first-order lag towards
 * ambient + gain * power. The vapour pressure follows
 * log10(p / Pa) = vapor_a - vapor_b / T.
 */
struct OvenConfig
{
    double dissipated_power = 2.0;              // W
    double thermal_time_constant = 12.0;        // s
    double ambient_temperature = 300.0;         // K
    double power_to_temperature_gain = 700.0;   // K/W
    double flux_area_solid_angle_factor = 0;    // m^2 sr, lumped geometry
    double vapor_a = 10.26;                     // log10 Pa
    double vapor_b = 8164.0;                    // K

    double steady_state_temperature() const { return steady_state_temperature(dissipated_power); }
    double steady_state_temperature(double power) const
    {
        return ambient_temperature + power_to_temperature_gain * power;
    }

    void validate(std::string_view where) const;
};

//! Atomic beam and laser crossing geometry. The atomic beam runs along +z.
struct BeamGeometry
{
    double laser_beam_angle = 0;       // rad, laser propagation vs. atom beam axis
    double collimation_half_angle = 0; // rad
    double interaction_length = 0;     // m, atom-beam width sampled for impact parameters

    //! Unit propagation vector of the (coaxial) photoionization beams.
    Eigen::Vector3d laser_direction() const;

    void validate(std::string_view where) const;
};

struct IsotopeSpec
{
    int mass_number = 0;
    double mass = 0;          // kg
    double abundance = 0;     // fraction
    double shift_461 = 0;     // rad/s, neutral 461 nm line relative to 88Sr
    double shift_422_ion = 0; // rad/s, ionic 422 nm line relative to 88Sr+

    std::string name() const { return std::to_string(mass_number) + "Sr"; }
};

//! Validates each isotope and the abundance sum.
void validate_isotopes(std::span<const IsotopeSpec> isotopes, std::string_view where);

//! Index of the isotope with the given mass number, or isotopes.size().
std::size_t find_isotope(std::span<const IsotopeSpec> isotopes, int mass_number);

struct AtomSample
{
    std::size_t isotope = 0;  // index into the isotope table
    double speed = 0;         // m/s
    Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
    double impact_parameter = 0;  // m, closest approach to the laser axis
    double birth_time = 0;        // s
};

double oven_temperature(const OvenConfig& cfg, double t);

//! Exact lag update from temperature `from` over `dt` at constant `power`.
double oven_temperature_step(const OvenConfig& cfg, double from, double power, double dt);

double vapor_pressure(const OvenConfig& cfg, double temperature);

//! Mean speed of the Maxwellian gas, sqrt(8kT/(pi m)).
double mean_thermal_speed(double temperature, double mass);

//! sqrt(2kT/m).
double thermal_speed_scale(double temperature, double mass);

//! Atoms per second of one isotope through the interaction region.
double beam_flux(double temperature, const OvenConfig& cfg, const IsotopeSpec& iso);

/*!
 * Draw one atom from the effusive beam.
 *
 * Isotope in proportion to abundance, speed from v^3 exp(-m v^2 / 2kT),
 * direction uniform in solid angle inside the collimation cone, impact
 * parameter uniform across the interaction length.
 */
AtomSample sample_atom(double temperature, const BeamGeometry& geom,
                       std::span<const IsotopeSpec> isotopes, Rng& rng);

//! Speed of one isotope drawn from the beam distribution.
double sample_beam_speed(double temperature, double mass, Rng& rng);

/*!
 * Doppler shift 2 pi v cos(theta)/lambda, where theta is measured from the
 * direction pointing back at the laser source; positive is a blue shift.
 */
double doppler_shift(double speed, double cos_theta_toward_laser, double wavelength);

double doppler_detuning(const AtomSample& a, const BeamGeometry& geom, double wavelength);

//! Mean cosine of the polar angle for directions uniform in a cone.
double mean_cone_cosine(double half_angle);

}  // namespace srload
