#pragma once

#include <string>
#include <string_view>

#include "srload/constants.hpp"

namespace srload {

//! Electric-dipole transition. Gamma is the angular natural linewidth.
struct TransitionSpec
{
    double wavelength = 0;  // m, vacuum
    double gamma = 0;       // rad/s
    std::string label;

    void validate(std::string_view where) const;
};

//! Lorentzian model of the auto-ionizing resonance reached by the second photon.
struct AutoIonizingProfile
{
    double center_wavelength = 405.2 * units::nm;
    double fwhm = 1.0 * units::nm;
    double peak_cross_section = 5600 * megabarn;

    void validate(std::string_view where) const;
};

//! Gaussian beam at its focus. Detuning is angular and relative to the
//! reference resonance of whichever transition the beam drives.
struct GaussianBeam
{
    double power = 0;       // W
    double waist = 0;       // m, 1/e^2 intensity radius
    double wavelength = 0;  // m
    double detuning = 0;    // rad/s

    void validate(std::string_view where) const;
};

double saturation_intensity(const TransitionSpec& t);

/*!
 * On-axis intensity of a beam, I = P / (pi w0^2).
 *
 * This is half the Gaussian peak value 2P/(pi w0^2). It is the convention
 * that gives 325 W/m^2 for 5 uW in a 140 um diameter spot, and it is used
 * consistently for every beam in the simulator.
 */
double axial_intensity(const GaussianBeam& b);

//! Intensity at radial distance r from the beam axis.
double intensity_at(const GaussianBeam& b, double r);

//! Steady-state two-level excited population (s/2)/(1 + s + (2 delta/gamma)^2).
double excited_fraction(double s, double delta, double gamma);

//! Steady-state photon scattering rate gamma * excited_fraction.
double scattering_rate(double s, double delta, double gamma);

/*!
 * Stimulated rate R for a two-level rate equation whose steady state
 * R/(2R + gamma) reproduces excited_fraction.
 */
double rate_equation_pump(double s, double delta, double gamma);

double ionization_cross_section(const AutoIonizingProfile& p, double wavelength);

//! Ionization rate sigma I / E_photon for an atom already in the excited state.
double photoionization_rate(double sigma, double intensity, double wavelength);

double photon_energy(double wavelength);

}  // namespace srload
