#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace srload {

struct Interval
{
    double lo = 0;
    double hi = 0;
};

//! Wilson score interval for k successes in n trials.
Interval wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

struct SampleSummary
{
    double mean = 0;
    double std_dev = 0;    // sample standard deviation (n - 1)
    double std_error = 0;
    std::size_t n = 0;
};

SampleSummary summarize(std::span<const double> xs);

//! One-sample Kolmogorov-Smirnov statistic sup|F_n - F|.
double ks_statistic(std::span<const double> xs, const std::function<double(double)>& cdf);

//! Asymptotic p-value of D for sample size n (Stephens' small-n correction).
double ks_p_value(double d, std::size_t n);

}  // namespace srload
