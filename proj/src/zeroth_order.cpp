#include "xgbm/zeroth_order.hpp"

#include <algorithm>
#include <cmath>

#include "xgbm/errors.hpp"

namespace xgbm {

namespace {

double logistic_step(double v, double kappa, double theta, double dt) {
    if (kappa * theta * dt == 0.0) return v;
    return theta / (1.0 + (theta / v - 1.0) * std::exp(-kappa * theta * dt));
}

void require_positive(double v, double t) {
    if (!std::isfinite(v) || v <= 0.0)
        throw NumericalError("zeroth-order path diverged or left (0, inf) at t=" + std::to_string(t));
}

}  // namespace

ZerothPath::ZerothPath(ZerothMethod method, TimeGrid grid, std::vector<double> values, std::vector<double> slopes,
                       PiecewiseParams params)
    : method_(method),
      grid_(std::move(grid)),
      values_(std::move(values)),
      slopes_(std::move(slopes)),
      params_(std::move(params)) {}

double ZerothPath::value(double t) const {
    if (method_ == ZerothMethod::explicit_verhulst) return v0_explicit_verhulst(params_, t);
    const std::size_t i = grid_.interval_of(t);
    const double h = grid_.width(i);
    const double g = (t - grid_[i]) / h;
    if (method_ == ZerothMethod::euler_piecewise) return values_[i] + (values_[i + 1] - values_[i]) * g;
    const double g2 = g * g, g3 = g2 * g;
    return (2 * g3 - 3 * g2 + 1) * values_[i] + (g3 - 2 * g2 + g) * h * slopes_[2 * i] +
           (-2 * g3 + 3 * g2) * values_[i + 1] + (g3 - g2) * h * slopes_[2 * i + 1];
}

double ZerothPath::exponent_value(double t) const {
    if (method_ != ZerothMethod::euler_piecewise) return value(t);
    return values_[grid_.interval_of(t)];
}

double v0_explicit_verhulst(const PiecewiseParams& p, double t) {
    const auto& g = p.grid;
    double v = p.v0;
    for (std::size_t i = 0; i < g.intervals() && g[i] < t; ++i) {
        const double end = (i + 1 == g.intervals()) ? t : std::min(t, g[i + 1]);
        v = logistic_step(v, p.kappa[i], p.theta[i], end - g[i]);
    }
    return v;
}

double default_rk4_step(double T) { return T / 2048.0; }

namespace {

struct Rk4Result {
    std::vector<double> nodes, values, slopes;
};

Rk4Result rk4_integrate(const ModelSpec& m, const PiecewiseParams& p, double t_end, double step) {
    if (!(step > 0.0)) throw ValidationError("step: must be > 0");
    Rk4Result r;
    double v = p.v0;
    const auto& g = p.grid;
    r.nodes.push_back(0.0);
    r.values.push_back(v);
    for (std::size_t i = 0; i < g.intervals() && g[i] < t_end; ++i) {
        const auto ip = p.interval(i);
        const double b = (i + 1 == g.intervals()) ? t_end : std::min(t_end, g[i + 1]);
        const double len = b - g[i];
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / step - 1e-9)));
        const double h = len / static_cast<double>(n);
        auto f = [&](double x) { return m.alpha(ip, x); };
        for (std::size_t j = 0; j < n; ++j) {
            const double k1 = f(v);
            r.slopes.push_back(k1);
            const double k2 = f(v + 0.5 * h * k1);
            const double k3 = f(v + 0.5 * h * k2);
            const double k4 = f(v + h * k3);
            v += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            const double t = (j + 1 == n) ? b : g[i] + h * static_cast<double>(j + 1);
            require_positive(v, t);
            r.nodes.push_back(t);
            r.values.push_back(v);
            r.slopes.push_back(f(v));
        }
    }
    return r;
}

}  // namespace

double v0_rk4(const ModelSpec& m, const PiecewiseParams& p, double t, double step) {
    if (t <= 0.0) return p.v0;
    return rk4_integrate(m, p, t, step).values.back();
}

ZerothPath zeroth_path_explicit(const PiecewiseParams& p) {
    std::vector<double> values;
    for (double t : p.grid.boundaries()) values.push_back(v0_explicit_verhulst(p, t));
    return ZerothPath(ZerothMethod::explicit_verhulst, p.grid, std::move(values), {}, p);
}

ZerothPath zeroth_path_rk4(const ModelSpec& m, const PiecewiseParams& p, double step) {
    auto r = rk4_integrate(m, p, p.grid.back(), step);
    return ZerothPath(ZerothMethod::rk4, TimeGrid(std::move(r.nodes)), std::move(r.values), std::move(r.slopes), p);
}

ZerothPath v0_euler_piecewise(const PiecewiseParams& p, const TimeGrid& fine_grid) {
    return v0_euler_piecewise(verhulst_model(), p, fine_grid);
}

ZerothPath v0_euler_piecewise(const ModelSpec& m, const PiecewiseParams& p, const TimeGrid& fine_grid) {
    if (!fine_grid.refines(p.grid)) throw ValidationError("fine_grid: not a refinement of the parameter grid");
    std::vector<double> values{p.v0};
    for (std::size_t j = 0; j < fine_grid.intervals(); ++j) {
        const double v = values.back();
        const auto ip = p.at(0.5 * (fine_grid[j] + fine_grid[j + 1]));
        const double next = v + m.alpha(ip, v) * fine_grid.width(j);
        require_positive(next, fine_grid[j + 1]);
        values.push_back(next);
    }
    return ZerothPath(ZerothMethod::euler_piecewise, fine_grid, std::move(values), {}, p);
}

}  // namespace xgbm
