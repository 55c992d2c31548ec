#include "xgbm/integral_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "xgbm/errors.hpp"

namespace xgbm {

void OperatorTerm::validate(std::size_t intervals) const {
    if (factors.empty() || factors.size() > 4) throw ValidationError("OperatorTerm: needs 1..4 factors");
    for (const auto& f : factors) {
        if (f.k_const.size() != intervals || f.h.size() != intervals || f.l_const.size() != intervals)
            throw ValidationError("OperatorTerm: coefficient arrays must match the parameter grid");
        if (f.q < 0) throw ValidationError("OperatorTerm: q must be >= 0");
    }
}

// ============================================================================
// Quadrature
// ============================================================================

namespace {

constexpr int cheb_n = 16;
constexpr int cheb_pts = cheb_n + 1;

struct ChebyshevPanel {
    std::array<double, cheb_pts> nodes{};  // ascending on [-1, 1]
    // cumulative[i][j]: weight of f(ξ_j) in ∫_{-1}^{ξ_i} f
    std::array<std::array<double, cheb_pts>, cheb_pts> cumulative{};

    ChebyshevPanel() {
        using ld = long double;
        const ld pi = std::numbers::pi_v<long double>;
        std::array<ld, cheb_pts> theta{};
        for (int i = 0; i < cheb_pts; ++i) {
            theta[i] = pi - pi * static_cast<ld>(i) / cheb_n;
            nodes[i] = static_cast<double>(std::cos(theta[i]));
        }
        nodes[0] = -1.0;
        nodes[cheb_n] = 1.0;
        for (int j = 0; j < cheb_pts; ++j) {
            // Chebyshev coefficients of the j-th Lagrange basis function.
            std::array<ld, cheb_pts + 2> a{};
            for (int k = 0; k <= cheb_n; ++k) {
                const ld wj = (j == 0 || j == cheb_n) ? 0.5L : 1.0L;
                a[k] = 2.0L / cheb_n * wj * std::cos(k * theta[j]);
            }
            a[0] *= 0.5L;
            a[cheb_n] *= 0.5L;
            std::array<ld, cheb_pts + 2> b{};
            b[1] += a[0];
            b[2] += a[1] / 4.0L;
            for (int k = 2; k <= cheb_n; ++k) {
                b[k + 1] += a[k] / (2.0L * (k + 1));
                b[k - 1] -= a[k] / (2.0L * (k - 1));
            }
            auto eval = [&](ld th) {
                ld s = 0.0L;
                for (int k = 0; k <= cheb_n + 1; ++k) s += b[k] * std::cos(k * th);
                return s;
            };
            const ld base = eval(pi);
            for (int i = 0; i < cheb_pts; ++i) cumulative[i][j] = static_cast<double>(eval(theta[i]) - base);
        }
    }
};

const ChebyshevPanel& panel_rule() {
    static const ChebyshevPanel rule;
    return rule;
}

std::vector<double> initial_panels(const std::vector<double>& breakpoints, double t0, double T) {
    std::vector<double> pts{0.0, T};
    if (t0 > 0.0 && t0 < T) pts.push_back(t0);
    for (double b : breakpoints)
        if (b > 0.0 && b < T) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double p : pts)
        if (out.empty() || p - out.back() > 1e-14 * std::max(1.0, T)) out.push_back(p);
    if (out.back() != T) out.back() = T;
    return out;
}

// One evaluation of the nested integral on a fixed panel set.
double quadrature_pass(const OperatorFunctions& term, const std::vector<double>& edges, double t0) {
    const auto& rule = panel_rule();
    const std::size_t panels = edges.size() - 1;
    const std::size_t m = panels * cheb_pts;
    std::vector<double> t(m), half(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        half[p] = 0.5 * (edges[p + 1] - edges[p]);
        const double mid = 0.5 * (edges[p + 1] + edges[p]);
        for (int i = 0; i < cheb_pts; ++i) t[p * cheb_pts + i] = mid + half[p] * rule.nodes[i];
        t[p * cheb_pts] = edges[p];
        t[p * cheb_pts + cheb_n] = edges[p + 1];
    }
    // Forward cumulative ∫_0^{t} f at every node.
    auto cumulative = [&](const std::vector<double>& f, std::vector<double>& out) {
        double offset = 0.0;
        for (std::size_t p = 0; p < panels; ++p) {
            const double* fp = &f[p * cheb_pts];
            for (int i = 0; i < cheb_pts; ++i) {
                double s = 0.0;
                for (int j = 0; j < cheb_pts; ++j) s += rule.cumulative[i][j] * fp[j];
                out[p * cheb_pts + i] = offset + half[p] * s;
            }
            offset = out[p * cheb_pts + cheb_n];
        }
    };
    // Panel nodes sit strictly inside a panel except at the ends, so evaluate
    // the integrands from the inside to respect right-open discontinuities.
    auto sample = [&](const std::function<double(double)>& fn, std::vector<double>& out) {
        for (std::size_t p = 0; p < panels; ++p)
            for (int i = 0; i < cheb_pts; ++i) {
                double s = t[p * cheb_pts + i];
                if (i == cheb_n) s = std::nextafter(s, -std::numeric_limits<double>::infinity());
                out[p * cheb_pts + i] = fn(s);
            }
    };

    std::vector<double> w(m, 1.0), g(m), kv(m), K(m), lv(m), cum(m);
    for (std::size_t jj = term.factors.size(); jj-- > 0;) {
        const auto& f = term.factors[jj];
        sample(f.k, kv);
        cumulative(kv, K);
        sample(f.l, lv);
        for (std::size_t i = 0; i < m; ++i) g[i] = lv[i] * std::exp(K[i]) * w[i];
        cumulative(g, cum);
        const double total = cum[m - 1];
        for (std::size_t i = 0; i < m; ++i) w[i] = total - cum[i];
    }
    for (std::size_t p = 0; p < panels; ++p)
        if (edges[p] == t0) return w[p * cheb_pts];
    return w[m - 1];
}

}  // namespace

OperatorFunctions as_functions(const OperatorTerm& term, const ZerothPath& zeroth) {
    const auto& grid = zeroth.params().grid;
    term.validate(grid.intervals());
    OperatorFunctions out;
    out.breakpoints = zeroth.grid().boundaries();
    for (double b : grid.boundaries()) out.breakpoints.push_back(b);
    for (const auto& f : term.factors) {
        FactorFunctions ff;
        ff.k = [f, &zeroth, grid](double t) {
            const auto i = grid.interval_of(t);
            return f.k_const[i] + f.h[i] * zeroth.exponent_value(t);
        };
        ff.l = [f, &zeroth, grid](double t) {
            const auto i = grid.interval_of(t);
            return f.q == 0 ? f.l_const[i] : f.l_const[i] * std::pow(zeroth.value(t), f.q);
        };
        out.factors.push_back(std::move(ff));
    }
    return out;
}

double eval_quadrature(const OperatorFunctions& term, double t0, double T, const QuadratureOptions& opt) {
    if (!(opt.tol > 0.0)) throw ValidationError("eval_quadrature: tol must be > 0");
    if (!(T >= t0) || t0 < 0.0) throw ValidationError("eval_quadrature: need 0 <= t0 <= T");
    if (term.factors.empty()) throw ValidationError("eval_quadrature: operator has no factors");
    if (T == t0) return 0.0;
    auto edges = initial_panels(term.breakpoints, t0, T);
    double prev = quadrature_pass(term, edges, t0);
    for (int r = 0; r < opt.max_refinements; ++r) {
        std::vector<double> finer;
        for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
            finer.push_back(edges[p]);
            finer.push_back(0.5 * (edges[p] + edges[p + 1]));
        }
        finer.push_back(edges.back());
        edges = std::move(finer);
        const double next = quadrature_pass(term, edges, t0);
        if (std::abs(next - prev) <= std::max(opt.tol, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(next)))
            return next;
        prev = next;
    }
    throw AccuracyError("eval_quadrature: no convergence within refinement budget", prev);
}

// ============================================================================
// φ closed forms (paper case analysis)
// ============================================================================

namespace {

constexpr int max_power = 400;
constexpr double series_radius = 2.5;
constexpr double series_cap = 12.0;

// ∫_0^1 g^P e^{X g} dg.
double unit_moment(double X, int P) {
    const double ax = std::abs(X);
    if (ax <= series_radius || (X > 0.0 && P > ax)) {
        double term = 1.0, sum = 0.0;
        for (int m = 0; m < 400; ++m) {
            const double add = term / (P + m + 1);
            sum += add;
            if (std::abs(add) <= 1e-18 * std::abs(sum) && m > ax) break;
            term *= X / (m + 1);
        }
        return sum;
    }
    const double eX = std::exp(X);
    if (X < 0.0 && P > ax) {
        // Downward recursion I(p-1) = (e^X - X I(p)) / p is stable here.
        int top = P + 60;
        double I = eX / (top + 1);
        for (int q = top; q > P; --q) I = (eX - X * I) / q;
        return I;
    }
    double I = (eX - 1.0) / X;
    for (int q = 1; q <= P; ++q) I = (eX - q * I) / X;
    return I;
}

}  // namespace

double phi(double rate, int p, double dt, double gamma) {
    if (std::abs(rate) < phi_zero_threshold) return dt * (1.0 - std::pow(gamma, p + 1)) / (p + 1);
    const double x = rate * dt;
    return dt * (unit_moment(x, p) - std::pow(gamma, p + 1) * unit_moment(x * gamma, p));
}

double phi_n(std::span<const PhiFactor> f, double dt, double gamma) {
    if (f.empty()) return 1.0;
    const auto [c, p] = f.front();
    if (f.size() == 1) return phi(c, p, dt, gamma);
    const auto rest = f.subspan(1);
    if (std::abs(c) < phi_zero_threshold) {
        std::vector<PhiFactor> merged(rest.begin(), rest.end());
        merged.front().p += p + 1;
        return dt / (p + 1) * (phi_n(merged, dt, gamma) - std::pow(gamma, p + 1) * phi_n(rest, dt, gamma));
    }
    std::vector<PhiFactor> merged(rest.begin(), rest.end());
    merged.front().rate += c;
    merged.front().p += p;
    double out = phi_n(merged, dt, gamma) - std::pow(gamma, p) * std::exp(c * dt * gamma) * phi_n(rest, dt, gamma);
    if (p >= 1) {
        std::vector<PhiFactor> lower(f.begin(), f.end());
        lower.front().p -= 1;
        out -= p / dt * phi_n(lower, dt, gamma);
    }
    return out / c;
}

// ============================================================================
// Left-endpoint φ on a unit step for polynomial l-functions
// ============================================================================

namespace {

// Nested left-endpoint integrals of contiguous factor runs on one unit step.
class StepIntegrals {
public:
    StepIntegrals(const std::vector<double>& x, const std::vector<std::vector<double>>& a) : x_(x), a_(a) {}

    // ∫_{0<g_s<…<g_e<1} Π_j l_j(g_j) e^{x_j g_j} for factors s..e (s outermost).
    double run(std::size_t s, std::size_t e) {
        if (memo_.empty() || end_ != e) {
            end_ = e;
            const std::size_t n = x_.size();
            memo_.assign(n * n * (max_power + 1), std::numeric_limits<double>::quiet_NaN());
        }
        double out = 0.0;
        for (std::size_t p = 0; p < a_[s].size(); ++p)
            if (a_[s][p] != 0.0) out += a_[s][p] * F(s, s, static_cast<int>(p));
        return out;
    }

private:
    double rate(std::size_t b, std::size_t j) const {
        double X = 0.0;
        for (std::size_t i = b; i <= j; ++i) X += x_[i];
        return X;
    }

    // Σ_p a_{j+1,p} F(c, j+1, P + p)
    double next(std::size_t c, std::size_t j, int P) {
        double s = 0.0;
        for (std::size_t p = 0; p < a_[j + 1].size(); ++p)
            if (a_[j + 1][p] != 0.0) s += a_[j + 1][p] * F(c, j + 1, P + static_cast<int>(p));
        return s;
    }

    double F(std::size_t b, std::size_t j, int P) {
        if (P > max_power) throw NumericalError("phi recursion: polynomial power out of range");
        const std::size_t n = x_.size();
        double& slot = memo_[(b * n + j) * (max_power + 1) + static_cast<std::size_t>(P)];
        if (!std::isnan(slot)) return slot;
        const double X = rate(b, j);
        const double ax = std::abs(X);
        double v;
        if (j == end_) {
            v = unit_moment(X, P);
        } else if (ax <= series_radius || (P > ax && ax <= series_cap)) {
            // Taylor continuation onto the k̃ = 0 branch.
            double term = 1.0;
            v = 0.0;
            for (int m = 0; m < 200; ++m) {
                v += term / (P + m + 1) * next(j + 1, j, P + m + 1);
                term *= X / (m + 1);
                if (std::abs(term) <= 1e-18 && m > ax) break;
            }
        } else {
            v = next(b, j, P);
            if (P == 0) v -= next(j + 1, j, 0);
            else v -= P * F(b, j, P - 1);
            v /= X;
        }
        slot = v;
        return v;
    }

    const std::vector<double>& x_;
    const std::vector<std::vector<double>>& a_;
    std::size_t end_ = 0;
    std::vector<double> memo_;
};

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

// ============================================================================
// OperatorState
// ============================================================================

OperatorState::OperatorState(std::size_t n_factors)
    : head_(n_factors + 1, 0.0), log_e_(n_factors, 0.0), log_ev_(n_factors, 0.0) {
    if (n_factors == 0) throw ValidationError("OperatorState: needs at least one factor");
    head_[0] = 1.0;
    history_.push_back(head_);
}

double OperatorState::e(std::size_t j) const { return std::exp(log_e_.at(j)); }
double OperatorState::e_v(std::size_t j) const { return std::exp(log_ev_.at(j)); }

OperatorState extend_to_next_maturity(const OperatorState& state, const OperatorTerm& term, std::size_t i,
                                      const ZerothPath& zeroth) {
    const auto& grid = zeroth.params().grid;
    const std::size_t n = term.factors.size();
    if (n != state.size()) throw ValidationError("extend_to_next_maturity: state and term sizes differ");
    if (zeroth.method() != ZerothMethod::euler_piecewise)
        throw ValidationError("extend_to_next_maturity: needs the piecewise Euler zeroth-order path");
    if (i != state.index_ || i >= grid.intervals())
        throw ValidationError("extend_to_next_maturity: state is not at T_" + std::to_string(i));
    term.validate(grid.intervals());
    const auto& fine = zeroth.grid();
    const auto first = fine.node_index(grid[i]);
    const auto last = fine.node_index(grid[i + 1]);
    if (!first || !last) throw ValidationError("extend_to_next_maturity: zeroth grid does not refine the parameter grid");

    OperatorState out = state;
    const auto& v = zeroth.values();
    std::vector<double> x(n);
    std::vector<std::vector<double>> a(n);
    std::vector<double> fresh(n + 1);
    for (std::size_t s = *first; s < *last; ++s) {
        const double dt = fine.width(s);
        const double va = v[s];
        const double slope = v[s + 1] - va;
        for (std::size_t j = 0; j < n; ++j) {
            const auto& f = term.factors[j];
            x[j] = (f.k_const[i] + f.h[i] * va) * dt;
            a[j].assign(static_cast<std::size_t>(f.q) + 1, 0.0);
            for (int p = 0; p <= f.q; ++p)
                a[j][p] = f.l_const[i] * binomial(f.q, p) * std::pow(va, f.q - p) * std::pow(slope, p);
        }
        StepIntegrals step(x, a);
        fresh[0] = 1.0;
        for (std::size_t L = 1; L <= n; ++L) {
            // r innermost factors of the head fall inside the new step.
            double acc = out.head_[L];
            double log_e = 0.0;
            double scale = 1.0;
            for (std::size_t r = 1; r <= L; ++r) {
                const std::size_t j = L - r;
                log_e += out.log_e_[j] + out.log_ev_[j];
                scale *= dt;
                const double prefix = out.head_[j];
                if (prefix == 0.0) continue;
                acc += prefix * std::exp(log_e) * scale * step.run(j, L - 1);
            }
            fresh[L] = acc;
        }
        for (std::size_t L = 1; L <= n; ++L) out.head_[L] = fresh[L];
        for (std::size_t j = 0; j < n; ++j) {
            out.log_e_[j] += dt * term.factors[j].k_const[i];
            out.log_ev_[j] += dt * term.factors[j].h[i] * va;
        }
    }
    out.index_ = i + 1;
    out.history_.push_back(out.head_);
    return out;
}

OperatorState eval_recursion(const OperatorTerm& term, const ZerothPath& zeroth, std::size_t last) {
    OperatorState s(term.factors.size());
    for (std::size_t i = 0; i <= last; ++i) s = extend_to_next_maturity(s, term, i, zeroth);
    return s;
}

}  // namespace xgbm
