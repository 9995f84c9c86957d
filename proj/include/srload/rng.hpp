#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace srload {

//! SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/*!
 * Seeded random stream.
 *
 * Streams are identified by a master seed plus a key path (stream purpose,
 * chunk index, time step, ion id, ...). Two streams with the same key path
 * produce the same sequence regardless of which thread or in what order they
 * are created.
 */
class Rng
{
  public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
    {
        std::uint64_t h = mix64(seed);
        for (auto k : keys)
            h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
        return Rng(h);
    }

    //! Uniform on [0, 1).
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    //! Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }
    std::uint64_t poisson(double mean)
    {
        if (!(mean > 0))
            return 0;
        return std::poisson_distribution<std::uint64_t>(mean)(engine_);
    }
    std::uint64_t next() { return engine_(); }

    engine_type& engine() { return engine_; }

  private:
    engine_type engine_;
};

// Purpose tags for stream derivation.
namespace streams {
inline constexpr std::uint64_t atoms = 1;
inline constexpr std::uint64_t first_ion = 2;
inline constexpr std::uint64_t loads = 3;
inline constexpr std::uint64_t telegraph = 4;
inline constexpr std::uint64_t counts = 5;
inline constexpr std::uint64_t session_ionize = 6;
inline constexpr std::uint64_t session_capture = 7;
inline constexpr std::uint64_t session_rates = 8;
}  // namespace streams

}  // namespace srload
