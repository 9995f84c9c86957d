#pragma once

#include <numbers>

namespace srload {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

//! Fixed SI constants (2019 exact values where defined).
struct PhysicalConstants
{
    double planck_h = 6.62607015e-34;          // J s
    double light_speed_c = 299792458.0;        // m/s
    double boltzmann_k = 1.380649e-23;         // J/K
    double atomic_mass_unit = 1.66053906660e-27;  // kg
};

inline constexpr PhysicalConstants constants{};

inline constexpr double megabarn = 1.0e-22;  // m^2

namespace units {
inline constexpr double nm = 1.0e-9;
inline constexpr double um = 1.0e-6;
inline constexpr double mW = 1.0e-3;
inline constexpr double uW = 1.0e-6;
inline constexpr double MHz = 1.0e6;
inline constexpr double GHz = 1.0e9;
inline constexpr double kHz = 1.0e3;

//! Ordinary frequency (Hz) to angular (rad/s).
constexpr double angular(double hz) { return two_pi * hz; }
//! Angular (rad/s) to ordinary frequency (Hz).
constexpr double ordinary(double rad_per_s) { return rad_per_s / two_pi; }
constexpr double deg(double degrees) { return degrees * pi / 180.0; }
}  // namespace units

}  // namespace srload
