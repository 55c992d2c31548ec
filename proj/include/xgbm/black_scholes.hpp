#pragma once

namespace xgbm {

// Put price in log-spot / integrated-variance coordinates.
struct BsPoint {
    double x = 0.0;       // log-spot
    double y = 0.0;       // integrated variance
    double k = 0.0;       // log-strike
    double int_rd = 0.0;  // ∫ r_d over [0, T]
    double int_rf = 0.0;  // ∫ r_f over [0, T]
};

[[nodiscard]] double norm_cdf(double z) noexcept;
[[nodiscard]] double norm_pdf(double z) noexcept;

[[nodiscard]] double d_plus(const BsPoint& p);
[[nodiscard]] double d_minus(const BsPoint& p);

// y >= 0; y below 1e-300 returns the discounted intrinsic limit.
[[nodiscard]] double put_price(const BsPoint& p);

// ∂_x^a ∂_y^b P_BS for 1 <= a + b <= 4; requires y > 0.
[[nodiscard]] double partial(const BsPoint& p, int a, int b);

}  // namespace xgbm
