#include "srload/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace srload {

Interval wilson_interval(std::size_t k, std::size_t n, double z)
{
    if (n == 0)
        return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2 * nn)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

SampleSummary summarize(std::span<const double> xs)
{
    SampleSummary s;
    s.n = xs.size();
    if (xs.empty())
        return s;
    // Welford, to stay accurate for long traces
    double mean = 0, m2 = 0;
    std::size_t k = 0;
    for (double x : xs) {
        ++k;
        const double d = x - mean;
        mean += d / static_cast<double>(k);
        m2 += d * (x - mean);
    }
    s.mean = mean;
    if (s.n > 1) {
        s.std_dev = std::sqrt(m2 / static_cast<double>(s.n - 1));
        s.std_error = s.std_dev / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

double ks_statistic(std::span<const double> xs, const std::function<double(double)>& cdf)
{
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = cdf(v[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_p_value(double d, std::size_t n)
{
    if (n == 0)
        return 1.0;
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-3)
        return 1.0;
    double q = 0, sign = 1;
    for (int k = 1; k <= 100; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        q += term;
        if (std::abs(term) < 1e-12)
            break;
        sign = -sign;
    }
    return std::clamp(2.0 * q, 0.0, 1.0);
}

}  // namespace srload
