#include "sigfolio/portfolio_math.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sigfolio {

namespace {

constexpr double kWeightSumTolerance = 1e-9;
constexpr double kMuTolerance = 1e-12;
constexpr int kMuMaxIterations = 200;

void check_finite_positive(const std::vector<double>& values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] <= 0.0) {
            std::ostringstream msg;
            msg << what << " entry " << i << " must be finite and positive, got "
                << values[i];
            throw std::invalid_argument(msg.str());
        }
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

}  // namespace

void CommissionSchedule::validate() const {
    if (!(purchase_rate >= 0.0 && purchase_rate < 1.0) ||
        !(sell_rate >= 0.0 && sell_rate < 1.0)) {
        throw std::invalid_argument("commission rates must lie in [0, 1)");
    }
    if (purchase_rate + sell_rate >= 1.0) {
        throw std::invalid_argument("combined commission rate must be below 1");
    }
}

PriceVector::PriceVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw std::invalid_argument("price vector must hold at least the cash entry");
    }
    if (values_[0] != 1.0) {
        throw std::invalid_argument("price vector cash entry must equal 1");
    }
    check_finite_positive(values_, "price vector");
}

RelativePriceVector::RelativePriceVector(std::vector<double> values)
    : values_(std::move(values)) {
    if (values_.empty()) {
        throw std::invalid_argument("relative price vector must hold at least the cash entry");
    }
    if (values_[0] != 1.0) {
        throw std::invalid_argument("relative price vector cash entry must equal 1");
    }
    check_finite_positive(values_, "relative price vector");
}

PortfolioVector::PortfolioVector(std::vector<double> weights)
    : weights_(std::move(weights)) {
    if (weights_.empty()) {
        throw std::invalid_argument("portfolio vector must hold at least the cash entry");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double w = weights_[i];
        if (!std::isfinite(w) || w < -1e-12 || w > 1.0 + 1e-12) {
            std::ostringstream msg;
            msg << "portfolio weight " << i << " out of [0, 1]: " << w;
            throw std::invalid_argument(msg.str());
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
        std::ostringstream msg;
        msg << "portfolio weights must sum to 1, got " << sum;
        throw std::invalid_argument(msg.str());
    }
}

PortfolioVector PortfolioVector::all_cash(std::size_t num_assets) {
    std::vector<double> w(num_assets + 1, 0.0);
    w[0] = 1.0;
    return PortfolioVector(std::move(w));
}

RelativePriceVector relative_prices(const PriceVector& prev, const PriceVector& curr) {
    if (prev.size() != curr.size()) {
        throw std::invalid_argument("price vectors differ in length");
    }
    std::vector<double> ratios(prev.size());
    ratios[0] = 1.0;
    for (std::size_t i = 1; i < prev.size(); ++i) {
        ratios[i] = curr[i] / prev[i];
    }
    return RelativePriceVector(std::move(ratios));
}

PortfolioVector evolve_weights(const PortfolioVector& w_prev, const RelativePriceVector& y) {
    if (w_prev.size() != y.size()) {
        throw std::invalid_argument("portfolio and relative price vectors differ in length");
    }
    const double denom = dot(w_prev.values(), y.values());
    if (!(denom > 0.0)) {
        throw std::domain_error("evolve_weights: y . w is not positive");
    }
    std::vector<double> evolved(w_prev.size());
    for (std::size_t i = 0; i < w_prev.size(); ++i) {
        evolved[i] = y[i] * w_prev[i] / denom;
    }
    return PortfolioVector(std::move(evolved));
}

double transaction_remainder(const PortfolioVector& w_evolved,
                             const PortfolioVector& w_target,
                             const CommissionSchedule& fees) {
    if (w_evolved.size() != w_target.size()) {
        throw std::invalid_argument("portfolio vectors differ in length");
    }
    fees.validate();
    if (fees.is_free() || w_evolved == w_target) {
        return 1.0;
    }

    const double cp = fees.purchase_rate;
    const double cs = fees.sell_rate;
    const double combined = fees.combined_rate();
    const double denom = 1.0 - cp * w_target.cash_weight();

    auto rhs = [&](double mu) {
        double positive_part = 0.0;
        for (std::size_t i = 1; i < w_evolved.size(); ++i) {
            const double diff = w_evolved[i] - mu * w_target[i];
            if (diff > 0.0) {
                positive_part += diff;
            }
        }
        return (1.0 - cp * w_evolved.cash_weight() - combined * positive_part) / denom;
    };

    double turnover = 0.0;
    for (std::size_t i = 0; i < w_evolved.size(); ++i) {
        turnover += std::abs(w_evolved[i] - w_target[i]);
    }
    double mu = 1.0 - (cp + cs) * turnover / 2.0;

    for (int iter = 0; iter < kMuMaxIterations; ++iter) {
        const double next = 0.5 * (mu + rhs(mu));
        const double delta = std::abs(next - mu);
        mu = next;
        if (delta < kMuTolerance) {
            if (mu > 0.0 && mu <= 1.0) {
                return mu;
            }
            break;
        }
    }

    // Fallback: bisection on g(mu) = mu - rhs(mu). g is strictly increasing
    // with g(0) < 0 and g(1) >= 0, so the root is bracketed by (0, 1].
    double lo = 0.0;
    double hi = 1.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double g = mid - rhs(mid);
        if (g > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo < kMuTolerance) {
            break;
        }
    }
    mu = 0.5 * (lo + hi);
    if (!(mu > 0.0 && mu <= 1.0)) {
        std::ostringstream msg;
        msg << "transaction_remainder did not converge: mu=" << mu
            << " cp=" << cp << " cs=" << cs;
        throw std::runtime_error(msg.str());
    }
    return mu;
}

StepResult step_portfolio(double prev_value,
                          const PortfolioVector& w_prev,
                          const PortfolioVector& w_target,
                          const RelativePriceVector& y,
                          const CommissionSchedule& fees) {
    if (!(prev_value > 0.0)) {
        throw std::invalid_argument("portfolio value must be positive");
    }
    PortfolioVector evolved = evolve_weights(w_prev, y);
    const double mu = transaction_remainder(evolved, w_target, fees);
    const double growth = dot(w_prev.values(), y.values());
    const double gross = mu * growth;

    return StepResult{
        .mu = mu,
        .rate_of_return = gross - 1.0,
        .log_return = std::log(gross),
        .new_value = prev_value * gross,
        .evolved_weights = std::move(evolved),
    };
}

double terminal_value(double initial_value, std::span<const StepResult> steps) {
    if (!(initial_value > 0.0)) {
        throw std::invalid_argument("initial value must be positive");
    }
    double value = initial_value;
    for (const StepResult& step : steps) {
        value *= 1.0 + step.rate_of_return;
    }
    return value;
}

}  // namespace sigfolio
