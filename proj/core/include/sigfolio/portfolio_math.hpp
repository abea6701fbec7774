#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sigfolio {

// Proportional commission rates for the purchase and sell legs of a
// rebalance. Defaults sum to one tenth of a percent, split evenly.
struct CommissionSchedule {
    double purchase_rate = 0.0005;
    double sell_rate = 0.0005;

    // Effective rate on weight moved through a sell-then-buy round trip:
    // c_s + c_p - c_s*c_p.
    double combined_rate() const {
        return sell_rate + purchase_rate - sell_rate * purchase_rate;
    }
    bool is_free() const { return purchase_rate == 0.0 && sell_rate == 0.0; }

    void validate() const;  // throws std::invalid_argument
};

// Closing quotes for cash plus m assets. Entry 0 is the cash quote and is
// always exactly 1; entries 1..m are asset closes in the quote currency.
class PriceVector {
  public:
    explicit PriceVector(std::vector<double> values);

    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    std::size_t num_assets() const { return values_.size() - 1; }
    const std::vector<double>& values() const { return values_; }

  private:
    std::vector<double> values_;
};

// Element-wise ratio of consecutive price vectors; cash entry fixed at 1.
class RelativePriceVector {
  public:
    explicit RelativePriceVector(std::vector<double> values);

    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    std::size_t num_assets() const { return values_.size() - 1; }
    const std::vector<double>& values() const { return values_; }

  private:
    std::vector<double> values_;
};

// Capital allocation over cash (index 0) and m assets. Non-negative weights
// summing to 1: no short selling, no leverage.
class PortfolioVector {
  public:
    explicit PortfolioVector(std::vector<double> weights);

    static PortfolioVector all_cash(std::size_t num_assets);

    double operator[](std::size_t i) const { return weights_[i]; }
    double cash_weight() const { return weights_[0]; }
    std::size_t size() const { return weights_.size(); }
    std::size_t num_assets() const { return weights_.size() - 1; }
    const std::vector<double>& values() const { return weights_; }

    bool operator==(const PortfolioVector& other) const = default;

  private:
    std::vector<double> weights_;
};

// Outcome of one trading period: prices move, then the portfolio is
// rebalanced to its target, paying commissions through the factor mu.
struct StepResult {
    double mu;              // transaction remainder factor, in (0, 1]
    double rate_of_return;  // rho_t = mu * (y . w_prev) - 1
    double log_return;      // r_t = ln(mu * (y . w_prev))
    double new_value;       // p_t = p_prev * (1 + rho_t)
    PortfolioVector evolved_weights;  // weights after price move, before fees
};

// y[i] = curr[i] / prev[i]; y[0] = 1.
RelativePriceVector relative_prices(const PriceVector& prev, const PriceVector& curr);

// Weights after a price move, before any rebalancing:
// w'[i] = y[i] * w[i] / (y . w).
PortfolioVector evolve_weights(const PortfolioVector& w_prev, const RelativePriceVector& y);

// Transaction remainder factor mu in (0, 1]: the fraction of portfolio value
// surviving the rebalance from w_evolved to w_target. Root of
//   mu = [1 - c_p*w'_0 - (c_s + c_p - c_s*c_p) * sum_i (w'_i - mu*w_i)+]
//        / (1 - c_p*w_0)
// with w' = w_evolved and w = w_target. Solved by damped fixed-point
// iteration (tolerance 1e-12, at most 200 iterations) with a bisection
// fallback on g(mu) = mu - rhs(mu) over (0, 1].
double transaction_remainder(const PortfolioVector& w_evolved,
                             const PortfolioVector& w_target,
                             const CommissionSchedule& fees);

// One full period: grow holdings by y, then rebalance to w_target paying
// commissions. Requires prev_value > 0.
StepResult step_portfolio(double prev_value,
                          const PortfolioVector& w_prev,
                          const PortfolioVector& w_target,
                          const RelativePriceVector& y,
                          const CommissionSchedule& fees);

// Final portfolio value p0 * prod_t mu_t * (y_t . w_{t-1}), taken from the
// per-step results. Empty sequence returns p0 unchanged.
double terminal_value(double initial_value, std::span<const StepResult> steps);

}  // namespace sigfolio
