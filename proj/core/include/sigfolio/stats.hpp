#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sigfolio {

// Sample autocorrelation for lags 0..max_lag. Mean-adjusted, with the
// unbiased 1/(N-k) lag normalization against the 1/N variance, so a perfectly
// anti-correlated series reports exactly -1 at lag 1. Requires
// series.size() > max_lag >= 1 and a non-constant series.
std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag);

}  // namespace sigfolio
