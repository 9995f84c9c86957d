#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "srload/rng.hpp"
#include "srload/source_beam.hpp"

namespace srload {

struct TrapConfig
{
    double omega_radial = 0;  // rad/s
    double omega_axial = 0;   // rad/s
    std::size_t capacity = 1;

    void validate(std::string_view where) const;
};

enum class CoolingClass { cooled, heated, uncoupled };

const char* to_string(CoolingClass c);

/*!
 * Effect of the 422 nm cooling laser on a freshly created ion.
 *
 * cooling_detuning_88 is the laser detuning from the 88Sr+ resonance. The
 * laser cools when red of the isotope's own resonance and heats when blue;
 * beyond far_threshold it does not couple at all.
 */
CoolingClass classify_cooling(const IsotopeSpec& iso, double cooling_detuning_88,
                              double far_threshold);

//! Phenomenological capture probabilities; see docs/capture_model.md for the fit.
struct CaptureModel
{
    double p_cooled = 1.0;
    double p_uncooled = 1.0;
    double p_heated_alone = 1.0;
    double sympathetic_gain = 0.0;  // per already-trapped cooled ion

    double probability(CoolingClass c, std::size_t n_cooled_trapped) const;
    void validate(std::string_view where) const;
};

struct TrappedIon
{
    std::uint64_t id = 0;  // ionization event id
    std::size_t isotope = 0;
    CoolingClass cooling = CoolingClass::cooled;
    double capture_time = 0;

    bool operator==(const TrappedIon&) const = default;
};

//! Ordered ion chain plus per-isotope bookkeeping that survives clearing.
class IonCrystal
{
  public:
    IonCrystal() = default;
    IonCrystal(std::size_t n_isotopes, std::size_t capacity);

    std::span<const TrappedIon> ions() const { return ions_; }
    std::size_t size() const { return ions_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool full() const { return ions_.size() >= capacity_; }
    std::size_t cooled_count() const;

    std::span<const std::uint64_t> created_total() const { return created_; }
    std::span<const std::uint64_t> captured_total() const { return captured_; }

    void record_created(std::size_t isotope) { ++created_.at(isotope); }
    //! Appends an ion; the caller guarantees !full().
    void add(const TrappedIon& ion);
    void clear() { ions_.clear(); }

    bool operator==(const IonCrystal&) const = default;

  private:
    std::size_t capacity_ = 1;
    std::vector<TrappedIon> ions_;
    std::vector<std::uint64_t> created_;
    std::vector<std::uint64_t> captured_;
};

struct IonizationEvent
{
    std::uint64_t id = 0;
    std::size_t isotope = 0;
    double time = 0;
};

enum class CaptureOutcome { captured, rejected, full };

const char* to_string(CaptureOutcome c);

/*!
 * Decide whether a freshly created ion is trapped and update the crystal.
 *
 * Capture probability is min(1, base + gain * n_cooled) for ions that are not
 * directly cooled, and p_cooled otherwise. One uniform draw per event.
 */
CaptureOutcome capture(const IonizationEvent& event, CoolingClass cooling, IonCrystal& crystal,
                       const CaptureModel& model, Rng& rng);

//! Same decision with an externally supplied uniform draw u in [0, 1).
CaptureOutcome capture_with_draw(const IonizationEvent& event, CoolingClass cooling,
                                 IonCrystal& crystal, const CaptureModel& model, double u);

}  // namespace srload
