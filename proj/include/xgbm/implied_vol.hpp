#pragma once

#include "xgbm/market_model.hpp"

namespace xgbm {

struct VolQuote {
    double sigma = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Flat-rate market data for one maturity; rates enter as r·T.
struct FlatMarket {
    double s0 = 100.0;
    double T = 1.0;
    double r_d = 0.0;
    double r_f = 0.0;
};

// Black-Scholes put on the flat-vol line y = σ²T.
[[nodiscard]] double bs_put(double sigma, double K, const FlatMarket& mk);

// Bracketed Newton on [1e-6, 5] (log-price Newton for small prices);
// |reprice - price| < min(1e-12·s0, 1e-13·price) on success. Throws
// ValidationError naming the violated no-arbitrage bound. A price on the
// intrinsic bound returns sigma = 0 with converged = false.
[[nodiscard]] VolQuote implied_vol(double price, double K, const FlatMarket& mk);

// Spot (premium-excluded) put delta strikes; ATM is the forward.
[[nodiscard]] double strike_from_delta(DeltaTag target, double sigma_ref, const FlatMarket& mk);

// Strike for an arbitrary put delta in (-e^{-r_f T}, 0).
[[nodiscard]] double strike_from_put_delta(double delta, double sigma_ref, const FlatMarket& mk);

// Flat equivalent rates of a piecewise parameter set up to T.
[[nodiscard]] FlatMarket flat_market(const PiecewiseParams& p, double T);

}  // namespace xgbm
