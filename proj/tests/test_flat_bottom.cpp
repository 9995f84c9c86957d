#include <doctest.h>

#include <algorithm>

#include "srload/constants.hpp"
#include "srload/experiments.hpp"

using namespace srload;

// Known to fail with the default calibration: the oven lag plus a ~1 GHz
// Doppler width leave the bottom of the line ~17% deep over +-250 MHz.
TEST_CASE("first-ion time is flat within 10% over the central +-250 MHz")
{
    const auto cfg = default_config();
    double lo = INFINITY, hi = 0;
    for (int mhz = -250; mhz <= 250; mhz += 50) {
        const auto t = expected_time_to_first_ion(cfg.beamline.oven.dissipated_power,
                                                  units::angular(mhz * 1e6), cfg);
        REQUIRE(t.has_value());
        lo = std::min(lo, *t);
        hi = std::max(hi, *t);
    }
    INFO("min " << lo << " s, max " << hi << " s");
    CHECK(hi / lo <= 1.10);
}
