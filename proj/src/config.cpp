#include "srload/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "srload/error.hpp"

namespace srload {

using nlohmann::json;

namespace {

//! Walks one JSON object, remembering which keys were read so that leftovers
//! can be reported as unknown.
class Reader
{
  public:
    Reader(const json& j, std::string path) : j_(&j), path_(std::move(path))
    {
        if (!j.is_object())
            throw ValidationError(path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const char* key) const { return j_->contains(key); }

    double number(const char* key, double fallback)
    {
        used_.insert(key);
        if (!j_->contains(key))
            return fallback;
        const auto& v = (*j_)[key];
        if (!v.is_number())
            throw ValidationError(at(key), "expected a number");
        return v.get<double>();
    }

    std::uint64_t integer(const char* key, std::uint64_t fallback)
    {
        used_.insert(key);
        if (!j_->contains(key))
            return fallback;
        const auto& v = (*j_)[key];
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0
                                       && !v.is_number_unsigned()))
            throw ValidationError(at(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const char* key, bool fallback)
    {
        used_.insert(key);
        if (!j_->contains(key))
            return fallback;
        const auto& v = (*j_)[key];
        if (!v.is_boolean())
            throw ValidationError(at(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const char* key, const std::string& fallback)
    {
        used_.insert(key);
        if (!j_->contains(key))
            return fallback;
        const auto& v = (*j_)[key];
        if (!v.is_string())
            throw ValidationError(at(key), "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const char* key, const std::vector<double>& fallback)
    {
        used_.insert(key);
        if (!j_->contains(key))
            return fallback;
        const auto& v = (*j_)[key];
        if (!v.is_array())
            throw ValidationError(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number())
                throw ValidationError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    const json* child(const char* key)
    {
        used_.insert(key);
        return j_->contains(key) ? &(*j_)[key] : nullptr;
    }

    Reader object(const char* key)
    {
        static const json empty = json::object();
        const json* c = child(key);
        return Reader(c ? *c : empty, at(key));
    }

    void finish() const
    {
        for (const auto& [k, v] : j_->items())
            if (!used_.count(k))
                throw ValidationError(at(k), "unknown key");
    }

  private:
    const json* j_;
    std::string path_;
    std::set<std::string> used_;
};

double mhz(double v) { return units::angular(v * units::MHz); }
double to_mhz(double w) { return units::ordinary(w) / units::MHz; }
double to_deg(double r) { return r * 180.0 / pi; }

std::vector<IsotopeSpec> default_isotopes()
{
    const double u = constants.atomic_mass_unit;
    return {
        {.mass_number = 86, .mass = 85.9092607 * u, .abundance = 0.099497487437,
         .shift_461 = mhz(-124.8), .shift_422_ion = mhz(-570.0)},
        {.mass_number = 87, .mass = 86.9088775 * u, .abundance = 0.070351758794,
         .shift_461 = mhz(-46.5), .shift_422_ion = mhz(2500.0)},
        {.mass_number = 88, .mass = 87.9056122 * u, .abundance = 0.830150753769,
         .shift_461 = 0.0, .shift_422_ion = 0.0},
    };
}

}  // namespace

TelegraphParams FluorescenceConfig::telegraph(double power_405) const
{
    return {.shelving_rate = shelving_rate_per_watt * power_405,
            .deshelving_rate = 1.0 / levels.tau_d52,
            .bright_scatter_rate = bright_scatter_rate,
            .collection_efficiency = collection_efficiency,
            .dark_count_rate = dark_count_rate};
}

SimConfig default_config()
{
    SimConfig c;
    auto& b = c.beamline;
    b.oven = {.dissipated_power = 2.0,
              .thermal_time_constant = 12.0,
              .ambient_temperature = 300.0,
              .power_to_temperature_gain = 700.0,
              .flux_area_solid_angle_factor = 3.2e-24,
              .vapor_a = 10.26,
              .vapor_b = 8164.0};
    b.geometry = {.laser_beam_angle = units::deg(68.0),
                  .collimation_half_angle = units::deg(1.0),
                  .interaction_length = 420 * units::um};
    b.isotopes = default_isotopes();
    b.line_461 = {.wavelength = 460.862 * units::nm, .gamma = mhz(32.0), .label = "5s2 1S0 - 5s5p 1P1"};
    b.autoionizing = {};

    // 5e-6 rather than 5 * uW: the product is one ulp off what "5e-06" parses to
    c.lasers.beam_461 = {.power = 5e-6, .waist = 70 * units::um,
                         .wavelength = 460.862 * units::nm, .detuning = 0.0};
    c.lasers.beam_405 = {.power = 1.5 * units::mW, .waist = 35 * units::um,
                         .wavelength = 405.2 * units::nm, .detuning = 0.0};
    c.reference_461 = DetuningReference::doppler_center;

    c.cooling = {.detuning_88 = mhz(-200.0), .far_threshold = mhz(1500.0)};
    c.trap = {.omega_radial = units::angular(2.0 * units::MHz),
              .omega_axial = units::angular(400.0 * units::kHz),
              .capacity = 20};
    c.capture = {.p_cooled = 1.0, .p_uncooled = 0.7, .p_heated_alone = 0.05,
                 .sympathetic_gain = 0.05};

    auto& f = c.fluorescence;
    f.levels = IonLevelSystem{};
    f.bright_scatter_rate = 1.5e7;
    f.collection_efficiency = 1.0e-3;
    f.dark_count_rate = 400.0;
    f.shelving_rate_per_watt = 1.0 / (1.5 * units::mW);
    f.nonfluorescing_rate = 0.0;

    auto& e = c.experiments;
    e.fig2_powers = {0.6, 1.4, 2.0, 2.6, 3.2};
    for (double d : {-5000.0, -2000.0, -1500.0, -1200.0, -1000.0, -800.0, -600.0, -400.0,
                     -250.0, -100.0, 0.0, 100.0, 250.0, 400.0, 600.0, 800.0, 1000.0, 1200.0,
                     1500.0, 2000.0, 5000.0})
        e.fig3_detunings.push_back(mhz(d));
    e.fig3_zero_frequency = 650503.7 * units::GHz;
    e.runs_per_point = 400;
    e.isotope_loads = 10000;
    e.ions_per_load = 5;
    e.shelve_duration = 100.0;
    e.bin = 0.05;

    c.console = {.bin_period = 0.05, .time_scale = 1.0, .max_oven_power = 4.0,
                 .rate_samples = 8192};

    c.master_seed = 20070601;
    c.mc_samples = 20000;
    c.workers = 1;
    c.horizon = 300.0;
    return c;
}

double SimConfig::reference_detuning_461() const
{
    if (reference_461 == DetuningReference::rest_frame)
        return 0.0;
    std::size_t idx = find_isotope(beamline.isotopes, 88);
    if (idx == beamline.isotopes.size()) {
        idx = 0;
        for (std::size_t i = 1; i < beamline.isotopes.size(); ++i)
            if (beamline.isotopes[i].abundance > beamline.isotopes[idx].abundance)
                idx = i;
    }
    return doppler_line_center(beamline, idx, beamline.oven.steady_state_temperature());
}

LaserSetup SimConfig::resolved_lasers(double detuning) const
{
    LaserSetup out = lasers;
    out.beam_461.detuning = reference_detuning_461() + detuning;
    return out;
}

std::vector<CoolingClass> SimConfig::cooling_classes() const
{
    std::vector<CoolingClass> out;
    for (const auto& iso : beamline.isotopes)
        out.push_back(classify_cooling(iso, cooling.detuning_88, cooling.far_threshold));
    return out;
}

std::vector<double> SimConfig::empty_trap_capture() const
{
    std::vector<double> out;
    for (auto c : cooling_classes())
        out.push_back(capture.probability(c, 0));
    return out;
}

void SimConfig::validate() const
{
    beamline.validate("");
    lasers.validate("lasers");
    trap.validate("trap");
    capture.validate("capture");
    fluorescence.levels.validate("fluorescence.ion_levels");
    fluorescence.telegraph(lasers.beam_405.power).validate("fluorescence");
    if (!(fluorescence.shelving_rate_per_watt >= 0) || !(fluorescence.nonfluorescing_rate >= 0))
        throw ValidationError("fluorescence", "rates must be non-negative");

    const std::size_t i86 = find_isotope(beamline.isotopes, 86);
    const std::size_t i88 = find_isotope(beamline.isotopes, 88);
    if (i86 < beamline.isotopes.size() && i88 < beamline.isotopes.size()) {
        const double rel = beamline.isotopes[i86].shift_422_ion - beamline.isotopes[i88].shift_422_ion;
        if (!(rel < -mhz(200.0)))
            throw ValidationError("isotopes[" + std::to_string(i86) + "].shift_422_mhz",
                                  "86Sr+ resonance must lie more than 200 MHz red of 88Sr+");
    }

    // Adiabatic elimination of 1P1 assumes ionization does not deplete it.
    const double r_ion = photoionization_rate(
        ionization_cross_section(beamline.autoionizing, lasers.beam_405.wavelength),
        axial_intensity(lasers.beam_405), lasers.beam_405.wavelength);
    if (!(r_ion < 0.01 * beamline.line_461.gamma))
        throw ValidationError("lasers.beam_405.power_w",
                              "ionization rate from 1P1 must stay below 1% of the 461 nm linewidth");

    if (!(cooling.far_threshold > 0))
        throw ValidationError("cooling.far_threshold_mhz", "must be positive");
    if (mc_samples < 1)
        throw ValidationError("mc_samples", "must be at least 1");
    if (workers < 1)
        throw ValidationError("workers", "must be at least 1");
    if (!(horizon > 0))
        throw ValidationError("horizon_s", "must be positive");
    const auto& e = experiments;
    if (e.runs_per_point < 1)
        throw ValidationError("experiments.runs_per_point", "must be at least 1");
    if (e.ions_per_load < 1 || e.ions_per_load > trap.capacity)
        throw ValidationError("experiments.ions_per_load", "must lie in [1, trap.capacity]");
    if (!(e.bin > 0) || !(e.shelve_duration > e.bin))
        throw ValidationError("experiments.bin_s", "requires shelve_duration_s > bin_s > 0");
    for (std::size_t i = 0; i < e.fig2_powers.size(); ++i)
        if (!(e.fig2_powers[i] >= 0))
            throw ValidationError("experiments.fig2_powers_w[" + std::to_string(i) + "]",
                                  "must be non-negative");
    if (!(console.bin_period > 0))
        throw ValidationError("console.bin_period_s", "must be positive");
    if (!(console.time_scale >= 0))
        throw ValidationError("console.time_scale", "must be non-negative");
    if (!(console.max_oven_power > 0))
        throw ValidationError("console.max_oven_power_w", "must be positive");
    if (console.rate_samples < 1)
        throw ValidationError("console.rate_samples", "must be at least 1");
}

SimConfig config_from_json(const json& j)
{
    SimConfig c = default_config();
    Reader root(j, "");
    c.master_seed = root.integer("seed", c.master_seed);
    c.mc_samples = root.integer("mc_samples", c.mc_samples);
    c.workers = static_cast<int>(root.integer("workers", static_cast<std::uint64_t>(c.workers)));
    c.horizon = root.number("horizon_s", c.horizon);

    {
        auto r = root.object("oven");
        auto& o = c.beamline.oven;
        o.dissipated_power = r.number("power_w", o.dissipated_power);
        o.thermal_time_constant = r.number("time_constant_s", o.thermal_time_constant);
        o.ambient_temperature = r.number("ambient_k", o.ambient_temperature);
        o.power_to_temperature_gain = r.number("gain_k_per_w", o.power_to_temperature_gain);
        o.flux_area_solid_angle_factor = r.number("flux_factor_m2sr", o.flux_area_solid_angle_factor);
        o.vapor_a = r.number("vapor_a_log10_pa", o.vapor_a);
        o.vapor_b = r.number("vapor_b_k", o.vapor_b);
        r.finish();
    }
    {
        auto r = root.object("geometry");
        auto& g = c.beamline.geometry;
        g.laser_beam_angle = units::deg(r.number("laser_angle_deg", to_deg(g.laser_beam_angle)));
        g.collimation_half_angle =
            units::deg(r.number("collimation_half_angle_deg", to_deg(g.collimation_half_angle)));
        g.interaction_length =
            r.number("interaction_length_um", g.interaction_length / units::um) * units::um;
        r.finish();
    }
    if (const json* list = root.child("isotopes")) {
        if (!list->is_array())
            throw ValidationError("isotopes", "expected an array");
        c.beamline.isotopes.clear();
        for (std::size_t i = 0; i < list->size(); ++i) {
            Reader r((*list)[i], "isotopes[" + std::to_string(i) + "]");
            IsotopeSpec iso;
            iso.mass_number = static_cast<int>(r.integer("mass_number", 0));
            iso.mass = r.number("mass_u", 0.0) * constants.atomic_mass_unit;
            iso.abundance = r.number("abundance", -1.0);
            iso.shift_461 = mhz(r.number("shift_461_mhz", 0.0));
            iso.shift_422_ion = mhz(r.number("shift_422_mhz", 0.0));
            r.finish();
            c.beamline.isotopes.push_back(iso);
        }
    }
    {
        auto r = root.object("transition_461");
        auto& t = c.beamline.line_461;
        t.wavelength = r.number("wavelength_nm", t.wavelength / units::nm) * units::nm;
        t.gamma = mhz(r.number("linewidth_mhz", to_mhz(t.gamma)));
        r.finish();
    }
    {
        auto r = root.object("autoionizing");
        auto& a = c.beamline.autoionizing;
        a.center_wavelength = r.number("center_nm", a.center_wavelength / units::nm) * units::nm;
        a.fwhm = r.number("fwhm_nm", a.fwhm / units::nm) * units::nm;
        a.peak_cross_section =
            r.number("peak_cross_section_mb", a.peak_cross_section / megabarn) * megabarn;
        r.finish();
    }
    {
        auto r = root.object("lasers");
        auto beam = [&](const char* name, GaussianBeam& b, bool with_detuning) {
            auto rb = r.object(name);
            b.power = rb.number("power_w", b.power);
            b.waist = rb.number("waist_um", b.waist / units::um) * units::um;
            b.wavelength = rb.number("wavelength_nm", b.wavelength / units::nm) * units::nm;
            if (with_detuning) {
                b.detuning = mhz(rb.number("detuning_mhz", to_mhz(b.detuning)));
                const auto ref = rb.string("detuning_reference", c.reference_461 == DetuningReference::rest_frame
                                                                     ? "rest_frame" : "doppler_center");
                if (ref == "rest_frame")
                    c.reference_461 = DetuningReference::rest_frame;
                else if (ref == "doppler_center")
                    c.reference_461 = DetuningReference::doppler_center;
                else
                    throw ValidationError(rb.at("detuning_reference"),
                                          "expected \"doppler_center\" or \"rest_frame\"");
            }
            rb.finish();
        };
        beam("beam_461", c.lasers.beam_461, true);
        beam("beam_405", c.lasers.beam_405, false);
        c.lasers.shutter_461 = r.boolean("shutter_461_open", c.lasers.shutter_461);
        c.lasers.shutter_405 = r.boolean("shutter_405_open", c.lasers.shutter_405);
        r.finish();
    }
    {
        auto r = root.object("cooling");
        c.cooling.detuning_88 = mhz(r.number("detuning_mhz", to_mhz(c.cooling.detuning_88)));
        c.cooling.far_threshold = mhz(r.number("far_threshold_mhz", to_mhz(c.cooling.far_threshold)));
        r.finish();
    }
    {
        auto r = root.object("trap");
        c.trap.omega_radial = units::angular(
            r.number("radial_frequency_mhz", units::ordinary(c.trap.omega_radial) / units::MHz) * units::MHz);
        c.trap.omega_axial = units::angular(
            r.number("axial_frequency_khz", units::ordinary(c.trap.omega_axial) / units::kHz) * units::kHz);
        c.trap.capacity = r.integer("capacity", c.trap.capacity);
        r.finish();
    }
    {
        auto r = root.object("capture");
        auto& m = c.capture;
        m.p_cooled = r.number("p_cooled", m.p_cooled);
        m.p_uncooled = r.number("p_uncooled", m.p_uncooled);
        m.p_heated_alone = r.number("p_heated_alone", m.p_heated_alone);
        m.sympathetic_gain = r.number("sympathetic_gain", m.sympathetic_gain);
        r.finish();
    }
    {
        auto r = root.object("fluorescence");
        auto& f = c.fluorescence;
        f.bright_scatter_rate = r.number("bright_scatter_rate_per_s", f.bright_scatter_rate);
        f.collection_efficiency = r.number("collection_efficiency", f.collection_efficiency);
        f.dark_count_rate = r.number("dark_count_rate_per_s", f.dark_count_rate);
        f.shelving_rate_per_watt = r.number("shelving_rate_per_w", f.shelving_rate_per_watt);
        f.nonfluorescing_rate = r.number("nonfluorescing_rate_per_s", f.nonfluorescing_rate);
        auto rl = r.object("ion_levels");
        auto& l = f.levels;
        l.gamma_p12 = 1.0 / (rl.number("p12_lifetime_ns", 1e9 / l.gamma_p12) * 1e-9);
        l.gamma_p32 = 1.0 / (rl.number("p32_lifetime_ns", 1e9 / l.gamma_p32) * 1e-9);
        l.branch_p12_d32 = rl.number("branch_p12_d32", l.branch_p12_d32);
        l.branch_p32_d32 = rl.number("branch_p32_d32", l.branch_p32_d32);
        l.branch_p32_d52 = rl.number("branch_p32_d52", l.branch_p32_d52);
        l.tau_d32 = rl.number("d32_lifetime_s", l.tau_d32);
        l.tau_d52 = rl.number("d52_lifetime_s", l.tau_d52);
        rl.finish();
        r.finish();
    }
    {
        auto r = root.object("experiments");
        auto& e = c.experiments;
        e.fig2_powers = r.numbers("fig2_powers_w", e.fig2_powers);
        std::vector<double> det_mhz;
        for (double d : e.fig3_detunings)
            det_mhz.push_back(to_mhz(d));
        det_mhz = r.numbers("fig3_detunings_mhz", det_mhz);
        e.fig3_detunings.clear();
        for (double d : det_mhz)
            e.fig3_detunings.push_back(mhz(d));
        e.fig3_zero_frequency = r.number("fig3_zero_ghz", e.fig3_zero_frequency / units::GHz) * units::GHz;
        e.runs_per_point = r.integer("runs_per_point", e.runs_per_point);
        e.isotope_loads = r.integer("isotope_loads", e.isotope_loads);
        e.ions_per_load = r.integer("ions_per_load", e.ions_per_load);
        e.shelve_duration = r.number("shelve_duration_s", e.shelve_duration);
        e.bin = r.number("bin_s", e.bin);
        r.finish();
    }
    {
        auto r = root.object("console");
        auto& k = c.console;
        k.bin_period = r.number("bin_period_s", k.bin_period);
        k.time_scale = r.number("time_scale", k.time_scale);
        k.max_oven_power = r.number("max_oven_power_w", k.max_oven_power);
        k.rate_samples = r.integer("rate_samples", k.rate_samples);
        r.finish();
    }
    root.finish();
    c.validate();
    return c;
}

namespace {

//! Strip unit-conversion noise (-199.99999999999997 MHz) from emitted floats.
void tidy_numbers(json& j)
{
    if (j.is_structured()) {
        for (auto& v : j)
            tidy_numbers(v);
    } else if (j.is_number_float()) {
        const double v = j.get<double>();
        if (std::isfinite(v)) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.12g", v);
            const double short_form = std::strtod(buf, nullptr);
            // only a few ulps away: the long form was conversion noise
            if (std::abs(short_form - v) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(v))
                j = short_form;
        }
    }
}

}  // namespace

json config_to_json(const SimConfig& c)
{
    json j;
    j["seed"] = c.master_seed;
    j["mc_samples"] = c.mc_samples;
    j["workers"] = c.workers;
    j["horizon_s"] = c.horizon;
    const auto& o = c.beamline.oven;
    j["oven"] = {{"power_w", o.dissipated_power},
                 {"time_constant_s", o.thermal_time_constant},
                 {"ambient_k", o.ambient_temperature},
                 {"gain_k_per_w", o.power_to_temperature_gain},
                 {"flux_factor_m2sr", o.flux_area_solid_angle_factor},
                 {"vapor_a_log10_pa", o.vapor_a},
                 {"vapor_b_k", o.vapor_b}};
    const auto& g = c.beamline.geometry;
    j["geometry"] = {{"laser_angle_deg", to_deg(g.laser_beam_angle)},
                     {"collimation_half_angle_deg", to_deg(g.collimation_half_angle)},
                     {"interaction_length_um", g.interaction_length / units::um}};
    j["isotopes"] = json::array();
    for (const auto& iso : c.beamline.isotopes)
        j["isotopes"].push_back({{"mass_number", iso.mass_number},
                                 {"mass_u", iso.mass / constants.atomic_mass_unit},
                                 {"abundance", iso.abundance},
                                 {"shift_461_mhz", to_mhz(iso.shift_461)},
                                 {"shift_422_mhz", to_mhz(iso.shift_422_ion)}});
    j["transition_461"] = {{"wavelength_nm", c.beamline.line_461.wavelength / units::nm},
                           {"linewidth_mhz", to_mhz(c.beamline.line_461.gamma)}};
    const auto& a = c.beamline.autoionizing;
    j["autoionizing"] = {{"center_nm", a.center_wavelength / units::nm},
                         {"fwhm_nm", a.fwhm / units::nm},
                         {"peak_cross_section_mb", a.peak_cross_section / megabarn}};
    const auto& l = c.lasers;
    j["lasers"] = {
        {"beam_461", {{"power_w", l.beam_461.power},
                      {"waist_um", l.beam_461.waist / units::um},
                      {"wavelength_nm", l.beam_461.wavelength / units::nm},
                      {"detuning_mhz", to_mhz(l.beam_461.detuning)},
                      {"detuning_reference", c.reference_461 == DetuningReference::rest_frame
                                                 ? "rest_frame" : "doppler_center"}}},
        {"beam_405", {{"power_w", l.beam_405.power},
                      {"waist_um", l.beam_405.waist / units::um},
                      {"wavelength_nm", l.beam_405.wavelength / units::nm}}},
        {"shutter_461_open", l.shutter_461},
        {"shutter_405_open", l.shutter_405}};
    j["cooling"] = {{"detuning_mhz", to_mhz(c.cooling.detuning_88)},
                    {"far_threshold_mhz", to_mhz(c.cooling.far_threshold)}};
    j["trap"] = {{"radial_frequency_mhz", units::ordinary(c.trap.omega_radial) / units::MHz},
                 {"axial_frequency_khz", units::ordinary(c.trap.omega_axial) / units::kHz},
                 {"capacity", c.trap.capacity}};
    j["capture"] = {{"p_cooled", c.capture.p_cooled},
                    {"p_uncooled", c.capture.p_uncooled},
                    {"p_heated_alone", c.capture.p_heated_alone},
                    {"sympathetic_gain", c.capture.sympathetic_gain}};
    const auto& f = c.fluorescence;
    j["fluorescence"] = {
        {"bright_scatter_rate_per_s", f.bright_scatter_rate},
        {"collection_efficiency", f.collection_efficiency},
        {"dark_count_rate_per_s", f.dark_count_rate},
        {"shelving_rate_per_w", f.shelving_rate_per_watt},
        {"nonfluorescing_rate_per_s", f.nonfluorescing_rate},
        {"ion_levels", {{"p12_lifetime_ns", 1e9 / f.levels.gamma_p12},
                        {"p32_lifetime_ns", 1e9 / f.levels.gamma_p32},
                        {"branch_p12_d32", f.levels.branch_p12_d32},
                        {"branch_p32_d32", f.levels.branch_p32_d32},
                        {"branch_p32_d52", f.levels.branch_p32_d52},
                        {"d32_lifetime_s", f.levels.tau_d32},
                        {"d52_lifetime_s", f.levels.tau_d52}}}};
    const auto& e = c.experiments;
    std::vector<double> det_mhz;
    for (double d : e.fig3_detunings)
        det_mhz.push_back(to_mhz(d));
    j["experiments"] = {{"fig2_powers_w", e.fig2_powers},
                        {"fig3_detunings_mhz", det_mhz},
                        {"fig3_zero_ghz", e.fig3_zero_frequency / units::GHz},
                        {"runs_per_point", e.runs_per_point},
                        {"isotope_loads", e.isotope_loads},
                        {"ions_per_load", e.ions_per_load},
                        {"shelve_duration_s", e.shelve_duration},
                        {"bin_s", e.bin}};
    j["console"] = {{"bin_period_s", c.console.bin_period},
                    {"time_scale", c.console.time_scale},
                    {"max_oven_power_w", c.console.max_oven_power},
                    {"rate_samples", c.console.rate_samples}};
    tidy_numbers(j);
    return j;
}

SimConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError(path.string(), "cannot open configuration file");
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string(), std::string("parse error: ") + e.what());
    }
    return config_from_json(j);
}

std::string fnv1a_hex(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const SimConfig& c)
{
    auto j = config_to_json(c);
    j.erase("workers");  // results do not depend on it
    return fnv1a_hex(j.dump());
}

}  // namespace srload
