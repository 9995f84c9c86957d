#include "srload/physics.hpp"

#include <cmath>

#include "srload/error.hpp"

namespace srload {

namespace {
std::string join(std::string_view where, const char* key)
{
    std::string out(where);
    if (!out.empty())
        out += '.';
    return out + key;
}
}  // namespace

void TransitionSpec::validate(std::string_view where) const
{
    if (!(wavelength > 0))
        throw ValidationError(join(where, "wavelength_nm"), "must be positive");
    if (!(gamma > 0))
        throw ValidationError(join(where, "linewidth_mhz"), "must be positive");
}

void AutoIonizingProfile::validate(std::string_view where) const
{
    if (!(center_wavelength > 0))
        throw ValidationError(join(where, "center_nm"), "must be positive");
    if (!(fwhm > 0))
        throw ValidationError(join(where, "fwhm_nm"), "must be positive");
    if (!(peak_cross_section > 0))
        throw ValidationError(join(where, "peak_cross_section_mb"), "must be positive");
}

void GaussianBeam::validate(std::string_view where) const
{
    if (!(power >= 0) || !std::isfinite(power))
        throw ValidationError(join(where, "power_w"), "must be non-negative");
    if (!(waist > 0) || !std::isfinite(waist))
        throw ValidationError(join(where, "waist_um"), "must be positive");
    if (!(wavelength > 0))
        throw ValidationError(join(where, "wavelength_nm"), "must be positive");
    if (!std::isfinite(detuning))
        throw ValidationError(join(where, "detuning_mhz"), "must be finite");
}

double saturation_intensity(const TransitionSpec& t)
{
    const auto& k = constants;
    return (pi / 3.0) * k.planck_h * k.light_speed_c * t.gamma
           / (t.wavelength * t.wavelength * t.wavelength);
}

double axial_intensity(const GaussianBeam& b)
{
    return b.power / (pi * b.waist * b.waist);
}

double intensity_at(const GaussianBeam& b, double r)
{
    return axial_intensity(b) * std::exp(-2.0 * r * r / (b.waist * b.waist));
}

double excited_fraction(double s, double delta, double gamma)
{
    const double x = 2.0 * delta / gamma;
    return 0.5 * s / (1.0 + s + x * x);
}

double scattering_rate(double s, double delta, double gamma)
{
    return gamma * excited_fraction(s, delta, gamma);
}

double rate_equation_pump(double s, double delta, double gamma)
{
    const double x = 2.0 * delta / gamma;
    return 0.5 * gamma * s / (1.0 + x * x);
}

double ionization_cross_section(const AutoIonizingProfile& p, double wavelength)
{
    const double hwhm = 0.5 * p.fwhm;
    const double d = wavelength - p.center_wavelength;
    return p.peak_cross_section * (hwhm * hwhm) / (d * d + hwhm * hwhm);
}

double photon_energy(double wavelength)
{
    return constants.planck_h * constants.light_speed_c / wavelength;
}

double photoionization_rate(double sigma, double intensity, double wavelength)
{
    return sigma * intensity * wavelength
           / (constants.planck_h * constants.light_speed_c);
}

}  // namespace srload
