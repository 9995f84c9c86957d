#include "srload/capture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "srload/error.hpp"

namespace srload {

void TrapConfig::validate(std::string_view where) const
{
    const std::string w(where);
    if (!(omega_radial > 0))
        throw ValidationError(w + ".radial_frequency_mhz", "must be positive");
    if (!(omega_axial > 0))
        throw ValidationError(w + ".axial_frequency_khz", "must be positive");
    if (capacity < 1)
        throw ValidationError(w + ".capacity", "must be at least 1");
}

const char* to_string(CoolingClass c)
{
    switch (c) {
    case CoolingClass::cooled: return "cooled";
    case CoolingClass::heated: return "heated";
    case CoolingClass::uncoupled: return "uncoupled";
    }
    return "?";
}

const char* to_string(CaptureOutcome c)
{
    switch (c) {
    case CaptureOutcome::captured: return "captured";
    case CaptureOutcome::rejected: return "rejected";
    case CaptureOutcome::full: return "full";
    }
    return "?";
}

CoolingClass classify_cooling(const IsotopeSpec& iso, double cooling_detuning_88,
                              double far_threshold)
{
    const double detuning = cooling_detuning_88 - iso.shift_422_ion;
    if (std::abs(detuning) > far_threshold)
        return CoolingClass::uncoupled;
    return detuning < 0 ? CoolingClass::cooled : CoolingClass::heated;
}

double CaptureModel::probability(CoolingClass c, std::size_t n_cooled_trapped) const
{
    double base = 0;
    switch (c) {
    case CoolingClass::cooled: return p_cooled;
    case CoolingClass::uncoupled: base = p_uncooled; break;
    case CoolingClass::heated: base = p_heated_alone; break;
    }
    return std::min(1.0, base + sympathetic_gain * static_cast<double>(n_cooled_trapped));
}

void CaptureModel::validate(std::string_view where) const
{
    const std::string w(where);
    auto prob = [&](double p, const char* k) {
        if (!(p >= 0 && p <= 1))
            throw ValidationError(w + "." + k, "must lie in [0, 1]");
    };
    prob(p_cooled, "p_cooled");
    prob(p_uncooled, "p_uncooled");
    prob(p_heated_alone, "p_heated_alone");
    if (!(sympathetic_gain >= 0) || !std::isfinite(sympathetic_gain))
        throw ValidationError(w + ".sympathetic_gain", "must be non-negative");
    if (!(p_heated_alone <= p_uncooled && p_uncooled <= p_cooled))
        throw ValidationError(w, "requires p_heated_alone <= p_uncooled <= p_cooled");
}

IonCrystal::IonCrystal(std::size_t n_isotopes, std::size_t capacity)
    : capacity_(capacity)
    , created_(n_isotopes, 0)
    , captured_(n_isotopes, 0)
{
}

std::size_t IonCrystal::cooled_count() const
{
    return static_cast<std::size_t>(std::count_if(ions_.begin(), ions_.end(), [](const auto& ion) {
        return ion.cooling == CoolingClass::cooled;
    }));
}

void IonCrystal::add(const TrappedIon& ion)
{
    ions_.push_back(ion);
    ++captured_.at(ion.isotope);
}

CaptureOutcome capture_with_draw(const IonizationEvent& event, CoolingClass cooling,
                                 IonCrystal& crystal, const CaptureModel& model, double u)
{
    const double p = model.probability(cooling, crystal.cooled_count());
    if (!(u < p))
        return CaptureOutcome::rejected;
    if (crystal.full())
        return CaptureOutcome::full;
    crystal.add({.id = event.id, .isotope = event.isotope, .cooling = cooling,
                 .capture_time = event.time});
    return CaptureOutcome::captured;
}

CaptureOutcome capture(const IonizationEvent& event, CoolingClass cooling, IonCrystal& crystal,
                       const CaptureModel& model, Rng& rng)
{
    return capture_with_draw(event, cooling, crystal, model, rng.uniform());
}

}  // namespace srload
