#include "srload/source_beam.hpp"

#include <cmath>
#include <string>

#include "srload/constants.hpp"
#include "srload/error.hpp"

namespace srload {

namespace {
std::string key(std::string_view where, const std::string& k)
{
    return where.empty() ? k : std::string(where) + "." + k;
}
}  // namespace

void OvenConfig::validate(std::string_view where) const
{
    auto positive = [&](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v))
            throw ValidationError(key(where, name), "must be positive");
    };
    if (!(dissipated_power >= 0) || !std::isfinite(dissipated_power))
        throw ValidationError(key(where, "power_w"), "must be non-negative");
    positive(thermal_time_constant, "time_constant_s");
    positive(ambient_temperature, "ambient_k");
    positive(power_to_temperature_gain, "gain_k_per_w");
    positive(flux_area_solid_angle_factor, "flux_factor_m2sr");
    positive(vapor_b, "vapor_b_k");
    if (!std::isfinite(vapor_a))
        throw ValidationError(key(where, "vapor_a_log10_pa"), "must be finite");
}

Eigen::Vector3d BeamGeometry::laser_direction() const
{
    return {std::sin(laser_beam_angle), 0.0, std::cos(laser_beam_angle)};
}

void BeamGeometry::validate(std::string_view where) const
{
    if (!(laser_beam_angle > 0 && laser_beam_angle < pi))
        throw ValidationError(key(where, "laser_angle_deg"), "must lie in (0, 180) degrees");
    if (!(collimation_half_angle > 0 && collimation_half_angle < 0.5 * pi))
        throw ValidationError(key(where, "collimation_half_angle_deg"), "must lie in (0, 90) degrees");
    if (!(interaction_length > 0))
        throw ValidationError(key(where, "interaction_length_um"), "must be positive");
}

void validate_isotopes(std::span<const IsotopeSpec> isotopes, std::string_view where)
{
    if (isotopes.empty())
        throw ValidationError(std::string(where), "at least one isotope required");
    double sum = 0;
    for (std::size_t i = 0; i < isotopes.size(); ++i) {
        const auto& iso = isotopes[i];
        const auto at = key(where, "[" + std::to_string(i) + "]");
        if (iso.mass_number <= 0)
            throw ValidationError(key(at, "mass_number"), "must be positive");
        if (!(iso.mass > 0))
            throw ValidationError(key(at, "mass_u"), "must be positive");
        if (!(iso.abundance >= 0 && iso.abundance <= 1))
            throw ValidationError(key(at, "abundance"), "must lie in [0, 1]");
        if (!std::isfinite(iso.shift_461) || !std::isfinite(iso.shift_422_ion))
            throw ValidationError(at, "isotope shifts must be finite");
        for (std::size_t j = 0; j < i; ++j)
            if (isotopes[j].mass_number == iso.mass_number)
                throw ValidationError(key(at, "mass_number"), "duplicate isotope");
        sum += iso.abundance;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError(std::string(where),
                              "abundances sum to " + std::to_string(sum) + ", expected 1");
}

std::size_t find_isotope(std::span<const IsotopeSpec> isotopes, int mass_number)
{
    for (std::size_t i = 0; i < isotopes.size(); ++i)
        if (isotopes[i].mass_number == mass_number)
            return i;
    return isotopes.size();
}

double oven_temperature(const OvenConfig& cfg, double t)
{
    return oven_temperature_step(cfg, cfg.ambient_temperature, cfg.dissipated_power, t);
}

double oven_temperature_step(const OvenConfig& cfg, double from, double power, double dt)
{
    const double target = cfg.steady_state_temperature(power);
    return target + (from - target) * std::exp(-dt / cfg.thermal_time_constant);
}

double vapor_pressure(const OvenConfig& cfg, double temperature)
{
    return std::pow(10.0, cfg.vapor_a - cfg.vapor_b / temperature);
}

double mean_thermal_speed(double temperature, double mass)
{
    return std::sqrt(8.0 * constants.boltzmann_k * temperature / (pi * mass));
}

double thermal_speed_scale(double temperature, double mass)
{
    return std::sqrt(2.0 * constants.boltzmann_k * temperature / mass);
}

double beam_flux(double temperature, const OvenConfig& cfg, const IsotopeSpec& iso)
{
    const double p = vapor_pressure(cfg, temperature);
    if (!(p > 0) || !std::isfinite(p))
        return 0.0;
    const double density = p / (constants.boltzmann_k * temperature);
    return iso.abundance * cfg.flux_area_solid_angle_factor * density
           * mean_thermal_speed(temperature, iso.mass);
}

double sample_beam_speed(double temperature, double mass, Rng& rng)
{
    // v^2 / alpha^2 is Gamma(2, 1) distributed for the v^3 beam distribution.
    const double y = -std::log(rng.uniform_pos() * rng.uniform_pos());
    return thermal_speed_scale(temperature, mass) * std::sqrt(y);
}

AtomSample sample_atom(double temperature, const BeamGeometry& geom,
                       std::span<const IsotopeSpec> isotopes, Rng& rng)
{
    AtomSample a;
    double u = rng.uniform();
    a.isotope = isotopes.size() - 1;
    for (std::size_t i = 0; i < isotopes.size(); ++i) {
        if (u < isotopes[i].abundance) {
            a.isotope = i;
            break;
        }
        u -= isotopes[i].abundance;
    }
    a.speed = sample_beam_speed(temperature, isotopes[a.isotope].mass, rng);

    const double cos_max = std::cos(geom.collimation_half_angle);
    const double cos_b = 1.0 - rng.uniform() * (1.0 - cos_max);
    const double sin_b = std::sqrt(std::max(0.0, 1.0 - cos_b * cos_b));
    const double phi = two_pi * rng.uniform();
    a.direction = {sin_b * std::cos(phi), sin_b * std::sin(phi), cos_b};
    a.impact_parameter = geom.interaction_length * (rng.uniform() - 0.5);
    return a;
}

double doppler_shift(double speed, double cos_theta_toward_laser, double wavelength)
{
    return two_pi * speed * cos_theta_toward_laser / wavelength;
}

double doppler_detuning(const AtomSample& a, const BeamGeometry& geom, double wavelength)
{
    const double cos_toward = -a.direction.dot(geom.laser_direction());
    return doppler_shift(a.speed, cos_toward, wavelength);
}

double mean_cone_cosine(double half_angle)
{
    return 0.5 * (1.0 + std::cos(half_angle));
}

}  // namespace srload
