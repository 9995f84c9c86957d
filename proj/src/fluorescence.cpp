#include "srload/fluorescence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "srload/error.hpp"

namespace srload {

IonLevelSystem::Generator IonLevelSystem::generator() const
{
    Generator g = Generator::Zero();
    // pumped transition a <-> b at rate r
    auto pump = [&](std::size_t a, std::size_t b, double r) {
        g(b, a) += r;
        g(a, a) -= r;
        g(a, b) += r;
        g(b, b) -= r;
    };
    auto decay = [&](std::size_t from, std::size_t to, double rate) {
        g(to, from) += rate;
        g(from, from) -= rate;
    };
    pump(S12, P12, r_422);
    pump(D32, P12, r_1092);
    pump(S12, P32, r_408);
    decay(P12, S12, gamma_p12 * (1.0 - branch_p12_d32));
    decay(P12, D32, gamma_p12 * branch_p12_d32);
    decay(P32, S12, gamma_p32 * (1.0 - branch_p32_d32 - branch_p32_d52));
    decay(P32, D32, gamma_p32 * branch_p32_d32);
    decay(P32, D52, gamma_p32 * branch_p32_d52);
    decay(D32, S12, 1.0 / tau_d32);
    decay(D52, S12, 1.0 / tau_d52);
    return g;
}

void IonLevelSystem::validate(std::string_view where) const
{
    const std::string w(where);
    double sum = 0;
    for (double p : populations) {
        if (!(p >= 0))
            throw ValidationError(w + ".populations", "must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError(w + ".populations", "must sum to 1");
    for (double r : {r_422, r_1092, r_408})
        if (!(r >= 0))
            throw ValidationError(w, "pump rates must be non-negative");
    if (!(gamma_p12 > 0) || !(gamma_p32 > 0) || !(tau_d32 > 0) || !(tau_d52 > 0))
        throw ValidationError(w, "decay rates and lifetimes must be positive");
    if (!(branch_p12_d32 >= 0 && branch_p12_d32 <= 1))
        throw ValidationError(w + ".branch_p12_d32", "must lie in [0, 1]");
    if (!(branch_p32_d32 >= 0 && branch_p32_d52 >= 0 && branch_p32_d32 + branch_p32_d52 <= 1))
        throw ValidationError(w + ".branch_p32", "P3/2 branching fractions must sum to at most 1");
}

IonLevelSystem evolve_populations(const IonLevelSystem& sys, double dt)
{
    if (!(dt > 0))
        throw ValidationError("dt", "must be positive");
    const IonLevelSystem::Generator prop = (sys.generator() * dt).exp();
    Eigen::Matrix<double, n_ion_levels, 1> p;
    for (std::size_t i = 0; i < n_ion_levels; ++i)
        p(i) = sys.populations[i];
    p = prop * p;

    // The propagator of a rate generator is column-stochastic; only rounding
    // can leave the simplex.
    double sum = 0;
    for (std::size_t i = 0; i < n_ion_levels; ++i) {
        if (p(i) < 0) {
            if (p(i) < -1e-12)
                throw std::runtime_error("population left the simplex");
            p(i) = 0;
        }
        sum += p(i);
    }
    IonLevelSystem out = sys;
    for (std::size_t i = 0; i < n_ion_levels; ++i)
        out.populations[i] = p(i) / sum;
    return out;
}

void TelegraphParams::validate(std::string_view where) const
{
    const std::string w(where);
    if (!(shelving_rate >= 0) || !(deshelving_rate >= 0) || !(bright_scatter_rate >= 0)
        || !(dark_count_rate >= 0))
        throw ValidationError(w, "rates must be non-negative");
    if (!(collection_efficiency > 0 && collection_efficiency <= 1))
        throw ValidationError(w + ".collection_efficiency", "must lie in (0, 1]");
}

BrightOccupancy telegraph_occupancy(double shelving_rate, double deshelving_rate,
                                    double duration, double bin, Rng& rng)
{
    if (!(duration > 0) || !(bin > 0) || !(bin < duration))
        throw ValidationError("bin", "requires duration > bin > 0");
    BrightOccupancy out;
    const auto n_bins = static_cast<std::size_t>(std::ceil(duration / bin - 1e-9));
    out.bright_time.assign(n_bins, 0.0);

    auto add_bright = [&](double a, double b) {
        // distribute [a, b) over bins
        while (a < b) {
            auto k = std::min(static_cast<std::size_t>(a / bin), n_bins - 1);
            // a / bin can round down when a sits exactly on an edge
            if (k + 1 < n_bins && bin * static_cast<double>(k + 1) <= a)
                ++k;
            const double edge = k + 1 == n_bins ? b : std::min(b, bin * static_cast<double>(k + 1));
            out.bright_time[k] += edge - a;
            a = edge;
        }
    };

    double t = 0;
    bool bright = true;
    while (t < duration) {
        const double rate = bright ? shelving_rate : deshelving_rate;
        const double dwell = rate > 0 ? rng.exponential(rate) : INFINITY;
        const double end = std::min(duration, t + dwell);
        if (bright)
            add_bright(t, end);
        else
            out.dark_time += end - t;
        if (t + dwell < duration)
            (bright ? out.bright_dwells : out.dark_dwells).push_back(dwell);
        t = end;
        bright = !bright;
    }
    return out;
}

TelegraphTrace telegraph_trace(const TelegraphParams& p, double duration, double bin, Rng& rng)
{
    auto occ = telegraph_occupancy(p.shelving_rate, p.deshelving_rate, duration, bin, rng);
    TelegraphTrace out;
    out.bins.resize(occ.bright_time.size());
    for (std::size_t k = 0; k < out.bins.size(); ++k) {
        const double width = std::min(bin, duration - bin * static_cast<double>(k));
        const double mean = p.collection_efficiency * p.bright_scatter_rate * occ.bright_time[k]
                            + p.dark_count_rate * width;
        out.bins[k] = {.t_start = bin * static_cast<double>(k),
                       .counts = rng.poisson(mean),
                       .bright = occ.bright_time[k] >= 0.5 * width};
    }
    out.dark_dwells = std::move(occ.dark_dwells);
    out.bright_dwells = std::move(occ.bright_dwells);
    out.dark_time = occ.dark_time;
    return out;
}

std::vector<CrystalBin> crystal_signal(const IonCrystal& crystal, const TelegraphParams& p,
                                       double nonfluorescing_rate, double duration, double bin,
                                       std::uint64_t seed)
{
    const auto n_bins = static_cast<std::size_t>(std::ceil(duration / bin - 1e-9));
    std::vector<double> mean(n_bins, 0.0);
    std::vector<std::size_t> n_bright(n_bins, 0);

    const auto ions = crystal.ions();
    for (std::size_t i = 0; i < ions.size(); ++i) {
        if (ions[i].cooling != CoolingClass::cooled) {
            for (std::size_t k = 0; k < n_bins; ++k)
                mean[k] += p.collection_efficiency * nonfluorescing_rate
                           * std::min(bin, duration - bin * static_cast<double>(k));
            continue;
        }
        Rng rng = Rng::stream(seed, {streams::telegraph, i});
        const auto occ = telegraph_occupancy(p.shelving_rate, p.deshelving_rate, duration, bin, rng);
        for (std::size_t k = 0; k < n_bins; ++k) {
            mean[k] += p.collection_efficiency * p.bright_scatter_rate * occ.bright_time[k];
            const double width = std::min(bin, duration - bin * static_cast<double>(k));
            if (occ.bright_time[k] >= 0.5 * width)
                ++n_bright[k];
        }
    }

    Rng counts = Rng::stream(seed, {streams::counts});
    std::vector<CrystalBin> out(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double width = std::min(bin, duration - bin * static_cast<double>(k));
        out[k] = {.t_start = bin * static_cast<double>(k),
                  .counts = counts.poisson(mean[k] + p.dark_count_rate * width),
                  .n_bright = n_bright[k]};
    }
    return out;
}

}  // namespace srload
