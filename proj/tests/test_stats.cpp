#include <doctest.h>

#include <cmath>
#include <vector>

#include "srload/rng.hpp"
#include "srload/stats.hpp"

using namespace srload;

TEST_CASE("Wilson interval")
{
    // 50/100 at 95%: 0.4038 .. 0.5962
    const auto ci = wilson_interval(50, 100);
    CHECK(ci.lo == doctest::Approx(0.40383).epsilon(1e-4));
    CHECK(ci.hi == doctest::Approx(0.59617).epsilon(1e-4));
    const auto zero = wilson_interval(0, 20);
    CHECK(zero.lo == 0);
    CHECK(zero.hi > 0.1);
    const auto all = wilson_interval(20, 20);
    CHECK(all.hi == 1);
}

TEST_CASE("summary statistics")
{
    std::vector<double> x{1, 2, 3, 4};
    const auto s = summarize(x);
    CHECK(s.mean == 2.5);
    CHECK(s.std_dev == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2));
}

TEST_CASE("Kolmogorov-Smirnov")
{
    // Kolmogorov distribution: P(K > 1.358) = 0.05, P(K > 1.628) = 0.01
    const std::size_t n = 1000000;
    CHECK(ks_p_value(1.358 / std::sqrt(double(n)), n) == doctest::Approx(0.05).epsilon(0.02));
    CHECK(ks_p_value(1.628 / std::sqrt(double(n)), n) == doctest::Approx(0.01).epsilon(0.03));

    std::vector<double> pts{0.1, 0.2, 0.9};
    const double d = ks_statistic(pts, [](double x) { return x; });
    CHECK(d == doctest::Approx(0.4667).epsilon(1e-3));

    Rng rng(3);
    std::vector<double> e(5000), u(5000);
    for (auto& x : e)
        x = rng.exponential(2.0);
    for (auto& x : u)
        x = rng.uniform();
    auto exp_cdf = [](double t) { return 1 - std::exp(-2 * t); };
    CHECK(ks_p_value(ks_statistic(e, exp_cdf), e.size()) > 0.01);
    CHECK(ks_p_value(ks_statistic(u, exp_cdf), u.size()) < 1e-6);
}
