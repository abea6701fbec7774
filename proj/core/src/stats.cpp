#include "sigfolio/stats.hpp"

#include <stdexcept>

namespace sigfolio {

std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (max_lag < 1) {
        throw std::invalid_argument("max_lag must be at least 1");
    }
    if (n <= max_lag) {
        throw std::invalid_argument("series must be longer than max_lag");
    }

    double mean = 0.0;
    for (const double x : series) {
        mean += x;
    }
    mean /= static_cast<double>(n);

    double variance = 0.0;  // times n
    for (const double x : series) {
        variance += (x - mean) * (x - mean);
    }
    if (variance == 0.0) {
        throw std::invalid_argument("autocorrelation of a constant series is undefined");
    }

    std::vector<double> acf(max_lag + 1, 0.0);
    acf[0] = 1.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double cov = 0.0;
        for (std::size_t t = lag; t < n; ++t) {
            cov += (series[t] - mean) * (series[t - lag] - mean);
        }
        const double scale = static_cast<double>(n) / static_cast<double>(n - lag);
        acf[lag] = scale * cov / variance;
    }
    return acf;
}

}  // namespace sigfolio
