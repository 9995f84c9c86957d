#include "srload/experiments.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "srload/error.hpp"

namespace srload {

using nlohmann::json;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Detunings are configured in MHz; undo the round trip through rad/s.
double hz_of(double angular) { return std::round(units::ordinary(angular) * 1e3) / 1e3; }

FirstIonPoint first_ion_point(const SimConfig& cfg, double power, double detuning)
{
    const auto& oven = cfg.beamline.oven;
    const double t_ref = std::max(oven.steady_state_temperature(power), oven.ambient_temperature);
    // Common random numbers across grid points: same atoms, same arrival draws.
    IonizationSampleSet samples(cfg.beamline, cfg.resolved_lasers(detuning), t_ref,
                                cfg.mc_samples, cfg.master_seed, cfg.workers);
    const auto weight = cfg.empty_trap_capture();
    ArrivalCurve curve(cfg.beamline, samples, weight, power, cfg.horizon);

    FirstIonPoint pt;
    pt.expected_time = curve.time_to_reach(1.0);
    pt.n_runs = cfg.experiments.runs_per_point;
    Rng rng = Rng::stream(cfg.master_seed, {streams::first_ion});
    std::vector<double> times;
    times.reserve(pt.n_runs);
    for (std::size_t r = 0; r < pt.n_runs; ++r) {
        const double e = rng.exponential(1.0);
        if (auto t = curve.time_to_reach(e))
            times.push_back(*t);
        else
            ++pt.n_censored;
    }
    if (pt.n_censored > 0) {
        pt.mean_time = inf;
        pt.std_error = inf;
    } else {
        const auto s = summarize(times);
        pt.mean_time = s.mean;
        pt.std_error = s.std_error;
    }
    return pt;
}

std::string utc_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

void write_text(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << text;
}

}  // namespace

std::string format_number(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::optional<double> expected_time_to_first_ion(double oven_power, double detuning_461,
                                                 const SimConfig& cfg)
{
    SimConfig c = cfg;
    c.experiments.runs_per_point = 0;
    return first_ion_point(c, oven_power, detuning_461).expected_time;
}

std::vector<FirstIonPoint> first_ion_vs_power(const SimConfig& cfg, std::span<const double> powers)
{
    if (powers.empty())
        throw ValidationError("experiments.fig2_powers_w", "grid must not be empty");
    std::vector<FirstIonPoint> out;
    for (double p : powers) {
        if (!(p >= 0) || !std::isfinite(p))
            throw ValidationError("experiments.fig2_powers_w", "powers must be finite and non-negative");
        auto pt = first_ion_point(cfg, p, cfg.lasers.beam_461.detuning);
        pt.x = p;
        out.push_back(pt);
    }
    return out;
}

std::vector<FirstIonPoint> first_ion_vs_detuning(const SimConfig& cfg,
                                                 std::span<const double> detunings)
{
    if (detunings.empty())
        throw ValidationError("experiments.fig3_detunings_mhz", "grid must not be empty");
    std::vector<FirstIonPoint> out;
    for (double d : detunings) {
        if (!std::isfinite(d))
            throw ValidationError("experiments.fig3_detunings_mhz", "detunings must be finite");
        auto pt = first_ion_point(cfg, cfg.beamline.oven.dissipated_power, d);
        pt.x = d;
        out.push_back(pt);
    }
    return out;
}

std::vector<double> ionization_shares(const SimConfig& cfg)
{
    const double T = cfg.beamline.oven.steady_state_temperature();
    const auto rates = loading_rate(T, cfg.resolved_lasers(), cfg.beamline, cfg.mc_samples,
                                    cfg.master_seed, cfg.workers);
    double total = 0;
    for (const auto& r : rates)
        total += r.rate;
    std::vector<double> share;
    for (const auto& r : rates)
        share.push_back(total > 0 ? r.rate / total : 0.0);
    return share;
}

LoadedFractionReport loaded_fraction_report(std::size_t n_loads, const SimConfig& cfg)
{
    const auto share = ionization_shares(cfg);
    return loaded_fraction_report(n_loads, cfg, share);
}

LoadedFractionReport loaded_fraction_report(std::size_t n_loads, const SimConfig& cfg,
                                            std::span<const double> share)
{
    const std::size_t n_iso = cfg.beamline.isotopes.size();
    if (n_loads < 1)
        throw ValidationError("experiments.isotope_loads", "must be at least 1");
    if (share.size() != n_iso)
        throw std::invalid_argument("ionization share size mismatch");
    std::vector<double> cumulative(n_iso);
    double acc = 0;
    for (std::size_t i = 0; i < n_iso; ++i)
        cumulative[i] = (acc += share[i]);
    if (!(acc > 0))
        throw std::runtime_error("no ionization at the operating point; cannot load");

    const auto classes = cfg.cooling_classes();
    const std::size_t target = cfg.experiments.ions_per_load;
    // A load that needs this many offers is a configuration that cannot load.
    const std::size_t max_offers = 100000 * target;

    LoadedFractionReport rep;
    rep.n_loads = n_loads;
    std::vector<std::uint64_t> captured(n_iso, 0);
    for (std::size_t l = 0; l < n_loads; ++l) {
        Rng rng = Rng::stream(cfg.master_seed, {streams::loads, l});
        IonCrystal crystal(n_iso, cfg.trap.capacity);
        std::size_t offers = 0;
        while (crystal.size() < target) {
            if (++offers > max_offers)
                throw std::runtime_error("capture probabilities too small to complete a load");
            const double u = rng.uniform() * acc;
            const auto iso = static_cast<std::size_t>(
                std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
            const std::size_t i = std::min(iso, n_iso - 1);
            crystal.record_created(i);
            capture_with_draw({.id = offers, .isotope = i, .time = 0.0}, classes[i], crystal,
                              cfg.capture, rng.uniform());
        }
        for (const auto& ion : crystal.ions())
            ++captured[ion.isotope];
        for (auto c : crystal.created_total())
            rep.created += c;
    }
    for (auto c : captured)
        rep.captured += c;
    for (std::size_t i = 0; i < n_iso; ++i) {
        IsotopeFraction f;
        f.mass_number = cfg.beamline.isotopes[i].mass_number;
        f.captured = captured[i];
        f.fraction = static_cast<double>(captured[i]) / static_cast<double>(rep.captured);
        f.ci = wilson_interval(captured[i], rep.captured);
        f.ionization_share = share[i] / acc;
        rep.isotopes.push_back(f);
    }
    return rep;
}

ShelveResult run_shelve(double duration, const SimConfig& cfg)
{
    if (!(duration > 0) || !std::isfinite(duration))
        throw ValidationError("experiments.shelve_duration_s", "must be positive");
    ShelveResult r;
    const double p405 = cfg.lasers.shutter_405 ? cfg.lasers.beam_405.power : 0.0;
    r.params = cfg.fluorescence.telegraph(p405);
    Rng rng = Rng::stream(cfg.master_seed, {streams::telegraph});
    r.trace = telegraph_trace(r.params, duration, cfg.experiments.bin, rng);
    r.dark = summarize(r.trace.dark_dwells);
    r.bright = summarize(r.trace.bright_dwells);
    const double kd = r.params.deshelving_rate;
    const double ks = r.params.shelving_rate;
    if (!r.trace.dark_dwells.empty())
        r.ks_p_dark = ks_p_value(
            ks_statistic(r.trace.dark_dwells, [kd](double t) { return -std::expm1(-kd * t); }),
            r.trace.dark_dwells.size());
    if (!r.trace.bright_dwells.empty() && ks > 0)
        r.ks_p_bright = ks_p_value(
            ks_statistic(r.trace.bright_dwells, [ks](double t) { return -std::expm1(-ks * t); }),
            r.trace.bright_dwells.size());
    r.dark_fraction = r.trace.dark_time / duration;
    r.expected_dark_fraction = ks / (ks + kd);
    return r;
}

RateReport operating_point_rates(const SimConfig& cfg)
{
    RateReport r;
    r.temperature = cfg.beamline.oven.steady_state_temperature();
    const auto lasers = cfg.resolved_lasers();
    r.detuning_461 = lasers.beam_461.detuning;
    r.ionization = loading_rate(r.temperature, lasers, cfg.beamline, cfg.mc_samples,
                                cfg.master_seed, cfg.workers);
    r.capture_probability = cfg.empty_trap_capture();
    double var = 0;
    for (std::size_t i = 0; i < r.ionization.size(); ++i) {
        const double p = r.capture_probability[i];
        r.captured_rate += p * r.ionization[i].rate;
        var += p * p * r.ionization[i].std_error * r.ionization[i].std_error;
    }
    r.captured_rate_error = std::sqrt(var);
    return r;
}

json to_json(const RunManifest& m)
{
    return {{"config_hash", m.config_hash}, {"seed", m.seed},       {"version", m.version},
            {"command", m.command},         {"arguments", m.arguments}, {"started", m.started},
            {"finished", m.finished},       {"outputs", m.outputs}};
}

namespace {

std::string first_ion_csv(const std::vector<FirstIonPoint>& pts, bool detuning, double zero)
{
    std::ostringstream os;
    if (detuning)
        os << "detuning_Hz,absolute_frequency_Hz,mean_time_s,stderr_s,n_runs,n_censored,expected_time_s\n";
    else
        os << "power_W,mean_time_s,stderr_s,n_runs,n_censored,expected_time_s\n";
    for (const auto& p : pts) {
        if (detuning) {
            const double hz = hz_of(p.x);
            os << format_number(hz) << ',' << format_number(zero + hz) << ',';
        } else {
            os << format_number(p.x) << ',';
        }
        os << format_number(p.mean_time) << ',' << format_number(p.std_error) << ',' << p.n_runs
           << ',' << p.n_censored << ',' << format_number(p.expected_time.value_or(inf)) << '\n';
    }
    return os.str();
}

json first_ion_json(const std::vector<FirstIonPoint>& pts)
{
    json arr = json::array();
    for (const auto& p : pts)
        arr.push_back({{"x", p.x},
                       {"mean_time_s", number_or_null(p.mean_time)},
                       {"stderr_s", number_or_null(p.std_error)},
                       {"n_runs", p.n_runs},
                       {"n_censored", p.n_censored},
                       {"expected_time_s", number_or_null(p.expected_time.value_or(inf))}});
    return arr;
}

}  // namespace

LineShape analyze_line(std::span<const double> x, std::span<const double> mean_time)
{
    LineShape s;
    std::size_t best = x.size();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::isfinite(mean_time[i]) && (best == x.size() || mean_time[i] < mean_time[best]))
            best = i;
    if (best == x.size())
        return s;
    s.floor = mean_time[best];
    s.center = x[best];
    const double half = 0.5 / s.floor;
    auto y = [&](std::size_t i) { return std::isfinite(mean_time[i]) ? 1.0 / mean_time[i] : 0.0; };
    auto crossing = [&](std::size_t a, std::size_t b) {
        const double ya = y(a), yb = y(b);
        const double f = (ya - half) / (ya - yb);
        return x[a] + f * (x[b] - x[a]);
    };
    std::optional<double> lo, hi;
    for (std::size_t i = best; i > 0; --i)
        if (y(i - 1) < half) {
            lo = crossing(i, i - 1);
            break;
        }
    for (std::size_t i = best; i + 1 < x.size(); ++i)
        if (y(i + 1) < half) {
            hi = crossing(i, i + 1);
            break;
        }
    if (lo && hi)
        s.fwhm = *hi - *lo;
    return s;
}

RunManifest run_command(const std::string& command, const SimConfig& cfg,
                        const std::filesystem::path& out_dir,
                        const std::vector<std::string>& arguments)
{
    RunManifest m;
    m.config_hash = config_hash(cfg);
    m.seed = cfg.master_seed;
    m.version = SRLOAD_VERSION;
    m.command = command;
    m.arguments = arguments;
    m.started = utc_now();

    std::filesystem::create_directories(out_dir);
    auto emit = [&](const std::string& name, const std::string& text) {
        write_text(out_dir / name, text);
        m.outputs.push_back(name);
    };
    json summary{{"command", command}, {"config_hash", m.config_hash}, {"seed", m.seed}};

    if (command == "fig2") {
        const auto pts = first_ion_vs_power(cfg, cfg.experiments.fig2_powers);
        emit("fig2.csv", first_ion_csv(pts, false, 0));
        summary["points"] = first_ion_json(pts);
    } else if (command == "fig3") {
        const auto pts = first_ion_vs_detuning(cfg, cfg.experiments.fig3_detunings);
        emit("fig3.csv", first_ion_csv(pts, true, cfg.experiments.fig3_zero_frequency));
        std::vector<double> x, t;
        for (const auto& p : pts) {
            x.push_back(hz_of(p.x));
            t.push_back(p.mean_time);
        }
        const auto line = analyze_line(x, t);
        summary["points"] = first_ion_json(pts);
        summary["oven_power_w"] = cfg.beamline.oven.dissipated_power;
        summary["reference_detuning_hz"] = units::ordinary(cfg.reference_detuning_461());
        summary["zero_frequency_hz"] = cfg.experiments.fig3_zero_frequency;
        summary["floor_s"] = number_or_null(line.floor);
        summary["center_hz"] = number_or_null(line.center);
        summary["fwhm_hz"] = number_or_null(line.fwhm);
    } else if (command == "isotopes") {
        if (cfg.experiments.isotope_loads < 100)
            throw ValidationError("experiments.isotope_loads", "at least 100 loads required");
        const auto rep = loaded_fraction_report(cfg.experiments.isotope_loads, cfg);
        std::ostringstream os;
        os << "isotope,captured,fraction,ci_low,ci_high,ionization_share\n";
        json rows = json::array();
        for (const auto& f : rep.isotopes) {
            os << f.mass_number << "Sr," << f.captured << ',' << format_number(f.fraction) << ','
               << format_number(f.ci.lo) << ',' << format_number(f.ci.hi) << ','
               << format_number(f.ionization_share) << '\n';
            rows.push_back({{"isotope", std::to_string(f.mass_number) + "Sr"},
                            {"captured", f.captured},
                            {"fraction", f.fraction},
                            {"ci_95", {f.ci.lo, f.ci.hi}},
                            {"ionization_share", f.ionization_share}});
        }
        emit("isotopes.csv", os.str());
        summary["n_loads"] = rep.n_loads;
        summary["ions_per_load"] = cfg.experiments.ions_per_load;
        summary["created"] = rep.created;
        summary["captured"] = rep.captured;
        summary["isotopes"] = rows;
    } else if (command == "shelve") {
        const auto r = run_shelve(cfg.experiments.shelve_duration, cfg);
        std::ostringstream os;
        os << "t_bin_start_s,counts,n_bright_ions\n";
        for (const auto& b : r.trace.bins)
            os << format_number(b.t_start) << ',' << b.counts << ',' << (b.bright ? 1 : 0) << '\n';
        emit("shelve_trace.csv", os.str());
        summary["duration_s"] = cfg.experiments.shelve_duration;
        summary["bin_s"] = cfg.experiments.bin;
        summary["shelving_rate_per_s"] = r.params.shelving_rate;
        summary["deshelving_rate_per_s"] = r.params.deshelving_rate;
        summary["dark_periods"] = r.dark.n;
        summary["mean_dark_s"] = r.dark.mean;
        summary["mean_dark_stderr_s"] = r.dark.std_error;
        summary["bright_periods"] = r.bright.n;
        summary["mean_bright_s"] = r.bright.mean;
        summary["ks_p_dark"] = r.ks_p_dark;
        summary["ks_p_bright"] = r.ks_p_bright;
        summary["dark_fraction"] = r.dark_fraction;
        summary["expected_dark_fraction"] = r.expected_dark_fraction;
    } else if (command == "rate") {
        const auto r = operating_point_rates(cfg);
        std::ostringstream os;
        os << "isotope,ionization_rate_per_s,stderr_per_s,capture_probability,captured_rate_per_s\n";
        json rows = json::array();
        for (std::size_t i = 0; i < r.ionization.size(); ++i) {
            const auto& iso = cfg.beamline.isotopes[i];
            const double cap = r.capture_probability[i] * r.ionization[i].rate;
            os << iso.name() << ',' << format_number(r.ionization[i].rate) << ','
               << format_number(r.ionization[i].std_error) << ','
               << format_number(r.capture_probability[i]) << ',' << format_number(cap) << '\n';
            rows.push_back({{"isotope", iso.name()},
                            {"ionization_rate_per_s", r.ionization[i].rate},
                            {"stderr_per_s", r.ionization[i].std_error},
                            {"capture_probability", r.capture_probability[i]},
                            {"captured_rate_per_s", cap}});
        }
        emit("rate.csv", os.str());
        summary["temperature_k"] = r.temperature;
        summary["detuning_461_rest_frame_hz"] = units::ordinary(r.detuning_461);
        summary["captured_rate_per_s"] = r.captured_rate;
        summary["captured_rate_stderr_per_s"] = r.captured_rate_error;
        summary["isotopes"] = rows;
    } else {
        throw ValidationError("command", "unknown command '" + command + "'");
    }

    emit(command + "_summary.json", summary.dump(2) + "\n");
    m.finished = utc_now();
    write_text(out_dir / "manifest.json", to_json(m).dump(2) + "\n");
    return m;
}

}  // namespace srload
