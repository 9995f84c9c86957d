#include "srload/ionization.hpp"

#include <algorithm>
#include <cmath>

#include "srload/error.hpp"
#include "srload/parallel.hpp"

namespace srload {

void LaserSetup::validate(std::string_view where) const
{
    const std::string w(where);
    beam_461.validate(w.empty() ? "beam_461" : w + ".beam_461");
    beam_405.validate(w.empty() ? "beam_405" : w + ".beam_405");
}

void BeamlineModel::validate(std::string_view where) const
{
    const std::string w(where);
    auto at = [&](const char* k) { return w.empty() ? std::string(k) : w + "." + k; };
    oven.validate(at("oven"));
    geometry.validate(at("geometry"));
    validate_isotopes(isotopes, at("isotopes"));
    line_461.validate(at("transition_461"));
    autoionizing.validate(at("autoionizing"));
}

namespace {

struct TransitIntegrand
{
    double b2;        // impact parameter squared
    double v_perp;
    double s0;        // on-axis saturation parameter
    double delta;     // effective detuning
    double gamma;
    double r0;        // on-axis ionization rate from 1P1
    double inv_w1sq;  // 2 / w461^2
    double inv_w2sq;  // 2 / w405^2

    double operator()(double t) const
    {
        const double x = v_perp * t;
        const double r2 = b2 + x * x;
        const double s = s0 * std::exp(-r2 * inv_w1sq);
        return excited_fraction(s, delta, gamma) * r0 * std::exp(-r2 * inv_w2sq);
    }
};

template<class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol)
        return left + right + diff / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
           + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double effective_detuning_461(const AtomSample& a, const IsotopeSpec& iso,
                              const LaserSetup& lasers, const BeamGeometry& geom,
                              const TransitionSpec& line_461)
{
    return lasers.beam_461.detuning + doppler_detuning(a, geom, line_461.wavelength)
           - iso.shift_461;
}

IonizationResult transit_ionization_probability(const AtomSample& a, const IsotopeSpec& iso,
                                                const LaserSetup& lasers,
                                                const BeamGeometry& geom,
                                                const AutoIonizingProfile& profile,
                                                const TransitionSpec& line_461)
{
    IonizationResult out;
    const Eigen::Vector3d k = geom.laser_direction();
    const double cos_k = a.direction.dot(k);
    const double v_perp = a.speed * std::sqrt(std::max(0.0, 1.0 - cos_k * cos_k));
    const double w1 = lasers.beam_461.waist;
    const double w2 = lasers.beam_405.waist;
    const double w_big = std::max(w1, w2);
    const double b = std::abs(a.impact_parameter);

    if (b >= miss_radius_in_waists * w_big || !(v_perp > 0)) {
        out.missed = true;
        return out;
    }
    out.transit_time = 2.0 * std::sqrt(w_big * w_big - std::min(b * b, w_big * w_big)) / v_perp;
    if (!lasers.shutter_461 || !lasers.shutter_405)
        return out;

    // The integrand carries exp(-2 r^2 / w405^2); beyond this radius it is
    // below 1e-17 of its axis value.
    const double r_cut = miss_radius_in_waists * w2;
    if (b >= r_cut)
        return out;

    TransitIntegrand f{
        .b2 = b * b,
        .v_perp = v_perp,
        .s0 = axial_intensity(lasers.beam_461) / saturation_intensity(line_461),
        .delta = effective_detuning_461(a, iso, lasers, geom, line_461),
        .gamma = line_461.gamma,
        .r0 = photoionization_rate(
            ionization_cross_section(profile, lasers.beam_405.wavelength),
            axial_intensity(lasers.beam_405), lasers.beam_405.wavelength),
        .inv_w1sq = 2.0 / (w1 * w1),
        .inv_w2sq = 2.0 / (w2 * w2),
    };
    if (!(f.r0 > 0) || !(f.s0 > 0))
        return out;

    // Integrate r_cut of path on each side of closest approach: the factor
    // exp(-2 x^2 / w405^2) along the path then falls below 1e-17 relative to
    // the local peak, whatever b is.
    const double t_max = r_cut / v_perp;
    const double h_cap = std::min(w1, w2) / (20.0 * v_perp);
    const auto n_panels = static_cast<std::size_t>(std::ceil(t_max / h_cap));
    const double h = t_max / static_cast<double>(n_panels);
    const double tol = 1e-10 * f.r0 * h;

    double exponent = 0;
    double fa = f(0.0);
    for (std::size_t i = 0; i < n_panels; ++i) {
        const double lo = h * static_cast<double>(i);
        const double hi = lo + h;
        const double fm = f(0.5 * (lo + hi));
        const double fb = f(hi);
        const double whole = h / 6.0 * (fa + 4.0 * fm + fb);
        exponent += adaptive_simpson(f, lo, hi, fa, fm, fb, whole, tol, 24);
        fa = fb;
    }
    exponent *= 2.0;  // symmetric about closest approach
    out.probability = -std::expm1(-exponent);
    return out;
}

double doppler_line_center(const BeamlineModel& model, std::size_t isotope, double temperature)
{
    const auto& iso = model.isotopes.at(isotope);
    const double v_mode = thermal_speed_scale(temperature, iso.mass);
    const double cos_toward = -std::cos(model.geometry.laser_beam_angle)
                              * mean_cone_cosine(model.geometry.collimation_half_angle);
    // resonance: detuning + doppler - shift = 0
    return iso.shift_461 - doppler_shift(v_mode, cos_toward, model.line_461.wavelength);
}

IonizationSampleSet::IonizationSampleSet(const BeamlineModel& model, const LaserSetup& lasers,
                                         double reference_temperature, std::size_t n_samples,
                                         std::uint64_t seed, int workers)
    : reference_temperature_(reference_temperature)
    , total_(n_samples)
{
    const std::size_t n_iso = model.isotopes.size();
    const std::size_t n_chunks = (n_samples + chunk_size - 1) / chunk_size;
    struct Chunk
    {
        std::vector<std::size_t> isotope;
        std::vector<double> speed, probability;
        std::size_t missed = 0;
    };
    std::vector<Chunk> chunks(n_chunks);

    for_each_chunk(n_chunks, workers, [&](std::size_t c) {
        Rng rng = Rng::stream(seed, {streams::atoms, c});
        const std::size_t begin = c * chunk_size;
        const std::size_t end = std::min(n_samples, begin + chunk_size);
        auto& out = chunks[c];
        for (std::size_t i = begin; i < end; ++i) {
            const AtomSample a = sample_atom(reference_temperature, model.geometry,
                                             model.isotopes, rng);
            const auto r = transit_ionization_probability(
                a, model.isotopes[a.isotope], lasers, model.geometry, model.autoionizing,
                model.line_461);
            out.isotope.push_back(a.isotope);
            out.speed.push_back(a.speed);
            out.probability.push_back(r.probability);
            out.missed += r.missed ? 1 : 0;
        }
    });

    masses_.resize(n_iso);
    for (std::size_t i = 0; i < n_iso; ++i)
        masses_[i] = model.isotopes[i].mass;
    speeds_.assign(n_iso, {});
    probabilities_.assign(n_iso, {});
    for (const auto& ch : chunks) {
        for (std::size_t j = 0; j < ch.isotope.size(); ++j) {
            speeds_[ch.isotope[j]].push_back(ch.speed[j]);
            probabilities_[ch.isotope[j]].push_back(ch.probability[j]);
        }
        missed_ += ch.missed;
    }
}

MeanEstimate IonizationSampleSet::mean_probability(std::size_t isotope, double temperature) const
{
    MeanEstimate out;
    const auto& v = speeds_.at(isotope);
    const auto& p = probabilities_.at(isotope);
    out.samples = v.size();
    if (v.empty())
        return out;

    const double a_ref = thermal_speed_scale(reference_temperature_, masses_[isotope]);
    const double a = thermal_speed_scale(temperature, masses_[isotope]);
    const double pre = std::pow(a_ref / a, 4);
    const double c = 1.0 / (a * a) - 1.0 / (a_ref * a_ref);
    const bool same = temperature == reference_temperature_;

    double sum = 0, sum2 = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double w = same ? 1.0 : pre * std::exp(-v[i] * v[i] * c);
        const double x = w * p[i];
        sum += x;
        sum2 += x * x;
    }
    const double n = static_cast<double>(v.size());
    out.mean = sum / n;
    if (v.size() > 1) {
        const double var = std::max(0.0, (sum2 - sum * sum / n) / (n - 1));
        out.std_error = std::sqrt(var / n);
    }
    return out;
}

std::vector<RateEstimate> loading_rate(double temperature, const BeamlineModel& model,
                                       const IonizationSampleSet& samples)
{
    std::vector<RateEstimate> out(model.isotopes.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double flux = beam_flux(temperature, model.oven, model.isotopes[i]);
        const auto m = samples.mean_probability(i, temperature);
        out[i].rate = flux * m.mean;
        out[i].std_error = flux * m.std_error;
        out[i].samples = m.samples;
    }
    return out;
}

std::vector<RateEstimate> loading_rate(double temperature, const LaserSetup& lasers,
                                       const BeamlineModel& model, std::size_t n_mc,
                                       std::uint64_t seed, int workers)
{
    if (n_mc < 1)
        throw ValidationError("mc_samples", "must be at least 1");
    IonizationSampleSet samples(model, lasers, temperature, n_mc, seed, workers);
    return loading_rate(temperature, model, samples);
}

ProbabilityTable::ProbabilityTable(const IonizationSampleSet& samples, std::size_t n_isotopes,
                                   double t_min, double t_max, std::size_t n_points)
    : t_min_(t_min)
    , t_max_(std::max(t_max, t_min + 1e-9))
    , table_(n_isotopes, std::vector<double>(std::max<std::size_t>(n_points, 2)))
{
    const std::size_t n = table_.empty() ? 0 : table_[0].size();
    for (std::size_t i = 0; i < n_isotopes; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double T = t_min_ + (t_max_ - t_min_) * static_cast<double>(j)
                                          / static_cast<double>(n - 1);
            table_[i][j] = samples.mean_probability(i, T).mean;
        }
}

double ProbabilityTable::at(std::size_t isotope, double temperature) const
{
    const auto& row = table_.at(isotope);
    const double x = (temperature - t_min_) / (t_max_ - t_min_)
                     * static_cast<double>(row.size() - 1);
    if (x <= 0)
        return row.front();
    if (x >= static_cast<double>(row.size() - 1))
        return row.back();
    const auto j = static_cast<std::size_t>(x);
    const double f = x - static_cast<double>(j);
    return row[j] * (1.0 - f) + row[j + 1] * f;
}

ArrivalCurve::ArrivalCurve(const BeamlineModel& model, const IonizationSampleSet& samples,
                           std::span<const double> capture_weight, double oven_power,
                           double horizon, double dt)
    : dt_(dt)
    , horizon_(horizon)
{
    const auto& oven = model.oven;
    const double t_hot = std::max(oven.steady_state_temperature(oven_power),
                                  oven.ambient_temperature);
    ProbabilityTable table(samples, model.isotopes.size(), oven.ambient_temperature, t_hot);

    auto rate_at = [&](double t) {
        const double T = oven_temperature_step(oven, oven.ambient_temperature, oven_power, t);
        double total = 0;
        for (std::size_t i = 0; i < model.isotopes.size(); ++i) {
            const double w = i < capture_weight.size() ? capture_weight[i] : 1.0;
            if (w <= 0)
                continue;
            total += w * beam_flux(T, oven, model.isotopes[i]) * table.at(i, T);
        }
        return total;
    };

    const auto n = static_cast<std::size_t>(std::ceil(horizon / dt));
    cumulative_.resize(n + 1);
    cumulative_[0] = 0;
    double prev = rate_at(0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        const double r = rate_at(dt * static_cast<double>(k));
        cumulative_[k] = cumulative_[k - 1] + 0.5 * dt * (prev + r);
        prev = r;
    }
    final_rate_ = prev;
}

double ArrivalCurve::cumulative_at(double t) const
{
    const double x = std::clamp(t / dt_, 0.0, static_cast<double>(cumulative_.size() - 1));
    const auto j = std::min(static_cast<std::size_t>(x), cumulative_.size() - 2);
    const double f = x - static_cast<double>(j);
    return cumulative_[j] * (1.0 - f) + cumulative_[j + 1] * f;
}

std::optional<double> ArrivalCurve::time_to_reach(double target) const
{
    if (target <= 0)
        return 0.0;
    auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end())
        return std::nullopt;
    const auto k = static_cast<std::size_t>(it - cumulative_.begin());
    const double c1 = cumulative_[k];
    const double c0 = cumulative_[k - 1];
    const double f = c1 > c0 ? (target - c0) / (c1 - c0) : 1.0;
    const double t = dt_ * (static_cast<double>(k - 1) + f);
    if (t > horizon_)
        return std::nullopt;
    return t;
}

}  // namespace srload
