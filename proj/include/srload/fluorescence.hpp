#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "srload/capture.hpp"
#include "srload/rng.hpp"

namespace srload {

enum IonLevel : std::size_t { S12 = 0, P12 = 1, D32 = 2, P32 = 3, D52 = 4 };
inline constexpr std::size_t n_ion_levels = 5;

/*!
 * Rate-equation model of the Sr+ cooling cycle.
 *
 * Pumps are symmetric stimulated rates: r_422 on S1/2-P1/2, r_1092 on
 * D3/2-P1/2 and r_408 (ASE) on S1/2-P3/2. Both D levels decay to S1/2.
 */
struct IonLevelSystem
{
    std::array<double, n_ion_levels> populations{1.0, 0, 0, 0, 0};

    double r_422 = 0;
    double r_1092 = 0;
    double r_408 = 0;

    double gamma_p12 = 1.0 / 7.39e-9;     // 1/s
    double gamma_p32 = 1.0 / 6.69e-9;     // 1/s
    double branch_p12_d32 = 0.0565;
    double branch_p32_d32 = 0.0066;
    double branch_p32_d52 = 0.0587;
    double tau_d32 = 0.435;  // s
    double tau_d52 = 0.395;  // s

    using Generator = Eigen::Matrix<double, n_ion_levels, n_ion_levels>;
    //! dp/dt = G p; columns of G sum to zero.
    Generator generator() const;

    void validate(std::string_view where) const;
};

//! Advance populations by dt with the exact propagator exp(G dt).
IonLevelSystem evolve_populations(const IonLevelSystem& sys, double dt);

struct TelegraphParams
{
    double shelving_rate = 0;        // 1/s
    double deshelving_rate = 1.0 / 0.395;  // 1/s
    double bright_scatter_rate = 0;  // photons/s
    double collection_efficiency = 1;
    double dark_count_rate = 0;      // counts/s, camera background

    void validate(std::string_view where) const;
};

struct TraceBin
{
    double t_start = 0;
    std::uint64_t counts = 0;
    bool bright = true;  // bright for at least half of the bin
};

struct TelegraphTrace
{
    std::vector<TraceBin> bins;
    std::vector<double> dark_dwells;    // completed dark periods, s
    std::vector<double> bright_dwells;  // completed bright periods, s
    double dark_time = 0;               // total time spent dark, s
};

/*!
 * Bright/dark two-state jump process starting bright, binned into photon
 * counts. Each bin's count is Poisson with mean
 * eta * r_bright * (bright time in bin) + dark_count_rate * bin.
 */
TelegraphTrace telegraph_trace(const TelegraphParams& p, double duration, double bin, Rng& rng);

/*!
 * Jump process over [0, duration) for a single ion, returning the bright time
 * accumulated in each bin and the dwell statistics, without photon counting.
 */
struct BrightOccupancy
{
    std::vector<double> bright_time;  // per bin, s
    std::vector<double> dark_dwells;
    std::vector<double> bright_dwells;
    double dark_time = 0;
};
BrightOccupancy telegraph_occupancy(double shelving_rate, double deshelving_rate,
                                    double duration, double bin, Rng& rng);

struct CrystalBin
{
    double t_start = 0;
    std::uint64_t counts = 0;
    std::size_t n_bright = 0;
};

/*!
 * Summed camera signal of a crystal. Only directly cooled ions scatter at
 * the bright rate; other ions scatter at `nonfluorescing_rate` (zero by
 * default). Ion i uses telegraph stream (seed, i); counts use their own stream.
 */
std::vector<CrystalBin> crystal_signal(const IonCrystal& crystal, const TelegraphParams& p,
                                       double nonfluorescing_rate, double duration, double bin,
                                       std::uint64_t seed);

}  // namespace srload
