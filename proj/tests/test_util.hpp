#pragma once

#include <cstddef>
#include <vector>

#include "sigfolio/portfolio_math.hpp"
#include "sigfolio/random.hpp"

namespace testutil {

// Random point on the simplex (normalized exponentials, strictly positive).
inline std::vector<double> random_simplex(sigfolio::Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    double sum = 0.0;
    for (auto& x : w) {
        x = -std::log(1.0 - rng.uniform()) + 1e-9;
        sum += x;
    }
    for (auto& x : w) {
        x /= sum;
    }
    return w;
}

inline sigfolio::PortfolioVector random_portfolio(sigfolio::Rng& rng, std::size_t num_assets) {
    return sigfolio::PortfolioVector(random_simplex(rng, num_assets + 1));
}

// Relative prices with moves up to roughly +-10% per period, cash fixed at 1.
inline sigfolio::RelativePriceVector random_relatives(sigfolio::Rng& rng,
                                                      std::size_t num_assets) {
    std::vector<double> y(num_assets + 1, 1.0);
    for (std::size_t i = 1; i < y.size(); ++i) {
        y[i] = std::exp(rng.uniform(-0.1, 0.1));
    }
    return sigfolio::RelativePriceVector(std::move(y));
}

}  // namespace testutil
