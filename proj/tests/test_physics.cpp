#include <doctest.h>

#include <cmath>

#include "srload/error.hpp"
#include "srload/physics.hpp"

using namespace srload;

namespace {

// Independent literal constants, not the library's.
constexpr double h = 6.62607015e-34;
constexpr double c = 299792458.0;
constexpr double PI = 3.14159265358979323846;

TransitionSpec line461() { return {.wavelength = 461e-9, .gamma = 2 * PI * 32e6, .label = ""}; }

}  // namespace

TEST_CASE("saturation intensity matches pi h c gamma / (3 lambda^3)")
{
    const auto t = line461();
    const double oracle = PI * h * c * t.gamma / (3 * std::pow(t.wavelength, 3));
    CHECK(saturation_intensity(t) == doctest::Approx(oracle).epsilon(1e-12));
    // published value for the 461 nm line
    CHECK(std::abs(saturation_intensity(t) / 428.0 - 1.0) < 0.005);
}

TEST_CASE("axial intensity of the photoionization beams")
{
    GaussianBeam blue{.power = 5e-6, .waist = 70e-6, .wavelength = 461e-9, .detuning = 0};
    GaussianBeam violet{.power = 1.5e-3, .waist = 35e-6, .wavelength = 405e-9, .detuning = 0};
    CHECK(axial_intensity(blue) == doctest::Approx(5e-6 / (PI * 70e-6 * 70e-6)).epsilon(1e-12));
    CHECK(std::abs(axial_intensity(blue) / 325.0 - 1) < 0.01);
    CHECK(std::abs(axial_intensity(violet) / 3.9e5 - 1) < 0.01);
    // Gaussian profile: 1/e^2 at the waist
    CHECK(intensity_at(blue, 70e-6) == doctest::Approx(axial_intensity(blue) * std::exp(-2.0)));
}

TEST_CASE("autoionizing cross section is a Lorentzian with the given peak and FWHM")
{
    AutoIonizingProfile p;
    CHECK(ionization_cross_section(p, 405.2e-9) == 5600e-22);
    const double lo = ionization_cross_section(p, 404.7e-9);
    const double hi = ionization_cross_section(p, 405.7e-9);
    // 404.7 nm - 405.2 nm cancels ~3 digits, so the bound is the wavelength
    // spacing of doubles relative to the half width, not epsilon itself.
    const double bound = 4 * std::nextafter(405.2e-9, 1.0) - 4 * 405.2e-9;
    CHECK(std::abs(lo / 2800e-22 - 1) <= bound / 0.5e-9);
    CHECK(std::abs(hi / 2800e-22 - 1) <= bound / 0.5e-9);
    // wings fall as 1/x^2
    const double far = ionization_cross_section(p, 405.2e-9 + 5e-9);
    CHECK(far == doctest::Approx(5600e-22 / (1 + 100.0)).epsilon(1e-9));
}

TEST_CASE("two-level steady state")
{
    const double g = 2 * PI * 32e6;
    CHECK(excited_fraction(0, 0, g) == 0);
    CHECK(excited_fraction(1e12, 0, g) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(excited_fraction(1, 0, g) == doctest::Approx(0.25));
    CHECK(excited_fraction(1, g / 2, g) == doctest::Approx(0.5 / 3));
    CHECK(scattering_rate(2, g, g) == doctest::Approx(g * 1.0 / 7.0));
    for (double s : {0.01, 0.759, 3.0, 100.0})
        for (double d : {0.0, 0.3 * g, -2 * g, 40 * g}) {
            const double r = rate_equation_pump(s, d, g);
            CHECK(r / (2 * r + g) == doctest::Approx(excited_fraction(s, d, g)).epsilon(1e-12));
        }
}

TEST_CASE("photoionization rate")
{
    const double sigma = 5600e-22, intensity = 3.9e5, lambda = 405.2e-9;
    CHECK(photoionization_rate(sigma, intensity, lambda)
          == doctest::Approx(sigma * intensity * lambda / (h * c)).epsilon(1e-12));
    CHECK(photon_energy(lambda) == doctest::Approx(h * c / lambda).epsilon(1e-12));
}

TEST_CASE("beam validation names the offending field")
{
    GaussianBeam b{.power = 1e-3, .waist = 0, .wavelength = 405e-9, .detuning = 0};
    try {
        b.validate("lasers.beam_405");
        FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.where() == "lasers.beam_405.waist_um");
    }
    b.waist = 1e-5;
    b.power = -1;
    CHECK_THROWS_AS(b.validate("x"), ValidationError);
}
