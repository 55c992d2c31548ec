#pragma once

#include <vector>

#include "xgbm/market_model.hpp"

namespace xgbm {

enum class ZerothMethod { explicit_verhulst, rk4, euler_piecewise };

// Deterministic ε = 0 volatility path.
//   explicit_verhulst: exact chained logistic solution at any t
//   rk4: nodes from fixed-step RK4, cubic Hermite in between; slopes holds the
//        (left, right) pair α(t, v) for each step, so the drift may jump at grid nodes
//   euler_piecewise: linear between fine-grid nodes
class ZerothPath {
public:
    ZerothPath(ZerothMethod method, TimeGrid grid, std::vector<double> values, std::vector<double> slopes,
               PiecewiseParams params);

    [[nodiscard]] ZerothMethod method() const noexcept { return method_; }
    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] const PiecewiseParams& params() const noexcept { return params_; }

    [[nodiscard]] double value(double t) const;

    // Value entering the exponent of the operator factors. The piecewise Euler
    // engine freezes v₀ at the left node of each fine interval; the smooth
    // methods use value(t).
    [[nodiscard]] double exponent_value(double t) const;

private:
    ZerothMethod method_;
    TimeGrid grid_;
    std::vector<double> values_;
    std::vector<double> slopes_;
    PiecewiseParams params_;
};

[[nodiscard]] double v0_explicit_verhulst(const PiecewiseParams& p, double t);

// Fixed-step RK4 with every parameter node as a step boundary.
[[nodiscard]] double v0_rk4(const ModelSpec& m, const PiecewiseParams& p, double t, double step);

// Step used when none is given: T / 2048.
[[nodiscard]] double default_rk4_step(double T);
constexpr std::size_t default_euler_substeps = 128;

[[nodiscard]] ZerothPath zeroth_path_explicit(const PiecewiseParams& p);
[[nodiscard]] ZerothPath zeroth_path_rk4(const ModelSpec& m, const PiecewiseParams& p, double step);

// v(T̃_{i+1}) = v(T̃_i) + α(T̃_i, v(T̃_i)) ΔT̃_i on a refinement of the parameter grid.
[[nodiscard]] ZerothPath v0_euler_piecewise(const PiecewiseParams& p, const TimeGrid& fine_grid);
[[nodiscard]] ZerothPath v0_euler_piecewise(const ModelSpec& m, const PiecewiseParams& p, const TimeGrid& fine_grid);

}  // namespace xgbm
