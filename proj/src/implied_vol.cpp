#include "xgbm/implied_vol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "xgbm/black_scholes.hpp"
#include "xgbm/errors.hpp"

namespace xgbm {

namespace {
constexpr double sigma_lo = 1e-6;
constexpr double sigma_hi = 5.0;
constexpr int max_iter = 100;

BsPoint point(double sigma, double K, const FlatMarket& mk) {
    return {std::log(mk.s0), sigma * sigma * mk.T, std::log(K), mk.r_d * mk.T, mk.r_f * mk.T};
}
}  // namespace

double bs_put(double sigma, double K, const FlatMarket& mk) { return put_price(point(sigma, K, mk)); }

VolQuote implied_vol(double price, double K, const FlatMarket& mk) {
    if (!(mk.s0 > 0.0) || !(K > 0.0) || !(mk.T > 0.0)) throw ValidationError("implied_vol: s0, K and T must be > 0");
    const double disc_k = K * std::exp(-mk.r_d * mk.T);
    const double disc_s = mk.s0 * std::exp(-mk.r_f * mk.T);
    const double lower = std::max(disc_k - disc_s, 0.0);
    const double tol = 1e-12 * mk.s0;
    if (!std::isfinite(price) || price < lower - tol)
        throw ValidationError("implied_vol: price below the lower no-arbitrage bound max(K e^{-r_d T} - S e^{-r_f T}, 0)");
    if (price >= disc_k) throw ValidationError("implied_vol: price at or above the upper no-arbitrage bound K e^{-r_d T}");
    // Only rounding noise above the bound counts as intrinsic; an out-of-the-money
    // price is invertible however small it is.
    if (price - lower <= 8.0 * std::numeric_limits<double>::epsilon() * lower) return {0.0, false, 0};

    double lo = sigma_lo, hi = sigma_hi;
    if (bs_put(hi, K, mk) < price) throw ValidationError("implied_vol: price needs a volatility above 5");
    if (bs_put(lo, K, mk) > price) return {lo, std::abs(bs_put(lo, K, mk) - price) < tol, 0};

    // Small prices are solved in log space, where Newton stays well scaled.
    const bool log_space = price < 1e-3 * disc_s;
    const double target = std::min(tol, 1e-13 * price);
    double s = std::clamp(std::sqrt(2.0 * std::numbers::pi / mk.T) * price / disc_s, 0.05, 1.0);
    for (int it = 1; it <= max_iter; ++it) {
        const auto p = point(s, K, mk);
        const double P = put_price(p);
        const double f = P - price;
        if (std::abs(f) <= target) return {s, true, it};
        if (f > 0.0) hi = s;
        else lo = s;
        // ∂P/∂σ = ∂_y P · 2σT
        const double vega = partial(p, 0, 1) * 2.0 * s * mk.T;
        double next = 0.5 * (lo + hi);
        if (vega > 0.0 && P > 0.0) next = log_space ? s - std::log(P / price) * P / vega : s - f / vega;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo < 1e-15 * hi) return {next, std::abs(bs_put(next, K, mk) - price) < tol, it};
        s = next;
    }
    return {s, false, max_iter};
}

double strike_from_put_delta(double delta, double sigma_ref, const FlatMarket& mk) {
    if (!(sigma_ref > 0.0)) throw ValidationError("strike_from_delta: sigma_ref must be > 0");
    const double df = std::exp(-mk.r_f * mk.T);
    if (!(delta < 0.0 && delta > -df)) throw ValidationError("strike_from_delta: delta outside (-e^{-r_f T}, 0)");
    // -df·N(-d+) falls monotonically from 0 to -df as K grows.
    auto delta_at = [&](double lnK) {
        const BsPoint p{std::log(mk.s0), sigma_ref * sigma_ref * mk.T, lnK, mk.r_d * mk.T, mk.r_f * mk.T};
        return -df * norm_cdf(-d_plus(p));
    };
    const double lnF = std::log(mk.s0) + (mk.r_d - mk.r_f) * mk.T;
    const double width = sigma_ref * std::sqrt(mk.T);
    double lo = lnF - 40.0 * width - 1.0, hi = lnF + 40.0 * width + 1.0;
    if (!(delta_at(lo) > delta && delta_at(hi) < delta)) throw NumericalError("strike_from_delta: no root in bracket");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (delta_at(mid) > delta) lo = mid;
        else hi = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

double strike_from_delta(DeltaTag target, double sigma_ref, const FlatMarket& mk) {
    switch (target) {
        case DeltaTag::atm:
            if (!(sigma_ref > 0.0)) throw ValidationError("strike_from_delta: sigma_ref must be > 0");
            return mk.s0 * std::exp((mk.r_d - mk.r_f) * mk.T);
        case DeltaTag::put10: return strike_from_put_delta(-0.10, sigma_ref, mk);
        case DeltaTag::put25: return strike_from_put_delta(-0.25, sigma_ref, mk);
    }
    throw ValidationError("strike_from_delta: unknown delta tag");
}

FlatMarket flat_market(const PiecewiseParams& p, double T) {
    return {p.s0, T, p.integrated_rd(T) / T, p.integrated_rf(T) / T};
}

}  // namespace xgbm
