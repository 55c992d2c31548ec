#include "xgbm/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "xgbm/errors.hpp"
#include "xgbm/implied_vol.hpp"

namespace xgbm {

namespace {

constexpr std::size_t n_free = 4;
using Vec = ParamScales;

// (0.01 bp)²: objective differences below the printed vol precision.
constexpr double objective_resolution = 1e-12;
// Damping of the search metric along directions the quotes do not pin down;
// the objective itself only carries regularization_weight.
constexpr double whitening_damping = 0.1;

Vec to_vec(const IntervalParams& ip) { return {ip.kappa, ip.theta, ip.lambda, ip.rho}; }

void set_interval(PiecewiseParams& p, std::size_t i, const Vec& x) {
    p.kappa[i] = x[0];
    p.theta[i] = x[1];
    p.lambda[i] = x[2];
    p.rho[i] = x[3];
}

void fail(const std::string& field, const std::string& msg) { throw ValidationError(field + ": " + msg); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line, const std::string& col) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (s.empty() || pos != s.size() || !std::isfinite(v))
        throw ValidationError("line " + std::to_string(line) + ": column '" + col + "' is not a number: '" + s + "'");
    return v;
}

// Squared parameter distance with per-coordinate scales.
double reg_distance(const Vec& x, const Vec& a, const Vec& scale) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n_free; ++j) {
        const double d = (x[j] - a[j]) * scale[j];
        acc += d * d;
    }
    return acc;
}

std::vector<double> quote_vols(const CalibrationProblem& prob, const PiecewiseParams& truncated,
                               const ExpansionState& state, std::size_t i, const std::vector<ResolvedQuote>& quotes,
                               bool& penalized) {
    const auto mk = flat_market(truncated, truncated.grid[i + 1]);
    std::vector<double> out;
    for (const auto& q : quotes) {
        double sigma = std::numeric_limits<double>::quiet_NaN();
        try {
            const auto r = price_from_state(state, prob.model, truncated, std::log(q.strike));
            const auto iv = implied_vol(r.total, q.strike, mk);
            if (iv.converged) sigma = iv.sigma;
        } catch (const std::exception&) {
        }
        if (std::isnan(sigma)) penalized = true;
        out.push_back(sigma);
    }
    return out;
}

ObjectiveValue evaluate(const CalibrationProblem& prob, const PiecewiseParams& truncated, const ExpansionState& state,
                        std::size_t i, const std::vector<ResolvedQuote>& quotes, const IntervalParams& anchor,
                        const Vec& scale) {
    ObjectiveValue out;
    const auto vols = quote_vols(prob, truncated, state, i, quotes, out.penalized);
    for (std::size_t q = 0; q < quotes.size(); ++q) {
        if (std::isnan(vols[q])) {
            out.value += objective_penalty;
            continue;
        }
        const double d = vols[q] - quotes[q].implied_vol;
        out.value += quotes[q].weight * d * d;
    }
    out.value += prob.regularization_weight *
                 reg_distance(to_vec(truncated.interval(i)), to_vec(anchor), scale);
    return out;
}

struct Candidate {
    ObjectiveValue value;
    ExpansionState state;
};

Candidate try_candidate(const CalibrationProblem& prob, const PiecewiseParams& params, const ExpansionState& frozen,
                        std::size_t i, const std::vector<ResolvedQuote>& quotes, const IntervalParams& anchor,
                        const Vec& scale) {
    const auto p = params.truncated(params.grid[i + 1]);
    Candidate c;
    try {
        c.state = extend_expansion(frozen, prob.model, p, i, prob.euler_substeps);
    } catch (const NumericalError&) {
        c.value.value = objective_penalty * static_cast<double>(quotes.size());
        c.value.penalized = true;
        return c;
    }
    c.value = evaluate(prob, p, c.state, i, quotes, anchor, scale);
    return c;
}

// Nelder–Mead; bounds are the objective's concern.
class Simplex {
public:
    Simplex(std::size_t dim, std::function<double(const std::vector<double>&)> f, int max_evals)
        : dim_(dim), f_(std::move(f)), max_evals_(max_evals) {}

    int evals() const { return evals_; }
    bool exhausted() const { return evals_ >= limit_; }
    bool spent() const { return evals_ >= max_evals_; }
    // Caps the next run at `budget` further evaluations.
    void set_budget(int budget) { limit_ = std::min(max_evals_, evals_ + budget); }

    // Returns true when the simplex collapsed below tolerance.
    bool run(std::vector<double>& best, double& f_best, const std::vector<double>& step, std::vector<double>& trace) {
        std::vector<std::vector<double>> x(dim_ + 1, best);
        std::vector<double> fx(dim_ + 1, f_best);
        for (std::size_t j = 0; j < dim_; ++j) {
            x[j + 1][j] += step[j];
            if (exhausted()) return false;
            fx[j + 1] = eval(x[j + 1]);
        }
        while (!exhausted()) {
            std::vector<std::size_t> order(dim_ + 1);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fx[a] < fx[b]; });
            reorder(x, order);
            reorder(fx, order);
            trace.push_back(fx[0]);
            if (converged(x, fx)) break;

            std::vector<double> c(dim_, 0.0);
            for (std::size_t k = 0; k < dim_; ++k)
                for (std::size_t j = 0; j < dim_; ++j) c[j] += x[k][j] / static_cast<double>(dim_);
            auto along = [&](double t) {
                std::vector<double> y(dim_);
                for (std::size_t j = 0; j < dim_; ++j) y[j] = c[j] + t * (x[dim_][j] - c[j]);
                return y;
            };
            auto xr = along(-1.0);
            const double fr = eval(xr);
            if (fr < fx[0]) {
                auto xe = along(-2.0);
                const double fe = exhausted() ? fr + 1.0 : eval(xe);
                if (fe < fr) replace_worst(x, fx, xe, fe);
                else replace_worst(x, fx, xr, fr);
            } else if (fr < fx[dim_ - 1]) {
                replace_worst(x, fx, xr, fr);
            } else {
                const bool outside = fr < fx[dim_];
                auto xc = along(outside ? -0.5 : 0.5);
                if (exhausted()) break;
                const double fc = eval(xc);
                if (fc < (outside ? fr : fx[dim_])) {
                    replace_worst(x, fx, xc, fc);
                } else {
                    for (std::size_t k = 1; k <= dim_ && !exhausted(); ++k) {
                        for (std::size_t j = 0; j < dim_; ++j) x[k][j] = x[0][j] + 0.5 * (x[k][j] - x[0][j]);
                        fx[k] = eval(x[k]);
                    }
                }
            }
        }
        const auto it = std::min_element(fx.begin(), fx.end());
        const auto k = static_cast<std::size_t>(it - fx.begin());
        const bool done = converged(x, fx);
        if (fx[k] < f_best) {
            f_best = fx[k];
            best = x[k];
        }
        return done;
    }

    double eval(const std::vector<double>& z) {
        ++evals_;
        return f_(z);
    }

private:
    template <class T>
    static void reorder(std::vector<T>& v, const std::vector<std::size_t>& order) {
        std::vector<T> out;
        out.reserve(v.size());
        for (auto k : order) out.push_back(v[k]);
        v = std::move(out);
    }

    void replace_worst(std::vector<std::vector<double>>& x, std::vector<double>& fx, std::vector<double> y, double fy) {
        x[dim_] = std::move(y);
        fx[dim_] = fy;
    }

    static bool converged(const std::vector<std::vector<double>>&, const std::vector<double>& fx) {
        const double f_lo = *std::min_element(fx.begin(), fx.end());
        const double f_hi = *std::max_element(fx.begin(), fx.end());
        return f_hi - f_lo <= objective_resolution + 1e-6 * std::abs(f_lo);
    }

    std::size_t dim_;
    std::function<double(const std::vector<double>&)> f_;
    int max_evals_;
    int limit_ = max_evals_;
    int evals_ = 0;
};

}  // namespace

void ParamBounds::validate() const {
    const Vec l = to_vec(lo), h = to_vec(hi);
    const char* names[] = {"kappa", "theta", "lambda", "rho"};
    for (std::size_t j = 0; j < n_free; ++j) {
        if (!std::isfinite(l[j]) || !std::isfinite(h[j])) fail(std::string("bounds.") + names[j], "not finite");
        if (l[j] > h[j]) fail(std::string("bounds.") + names[j], "lower bound exceeds upper bound");
    }
    if (lo.kappa <= 0.0) fail("bounds.kappa", "lower bound must be > 0");
    if (lo.theta <= 0.0) fail("bounds.theta", "lower bound must be > 0");
    if (lo.lambda <= 0.0) fail("bounds.lambda", "lower bound must be > 0");
    if (lo.rho < -1.0 || hi.rho > 1.0) fail("bounds.rho", "must lie in [-1, 1]");
}

void CalibrationProblem::validate() const {
    bounds.validate();
    initial_guess.validate();
    model.validate();
    if (!(regularization_weight >= 0.0) || !std::isfinite(regularization_weight))
        fail("regularization_weight", "must be >= 0");
    if (max_evals < 1) fail("max_evals", "must be >= 1");
    if (euler_substeps < 1) fail("euler_substeps", "must be >= 1");
    if (!model.has_affine_structure()) fail("model", "'" + model.name + "' has no closed-form recursion");
    const auto& g = initial_guess.grid;
    std::vector<int> count(g.intervals(), 0);
    for (std::size_t q = 0; q < quotes.size(); ++q) {
        const auto& o = quotes[q];
        const std::string f = "quotes[" + std::to_string(q) + "]";
        const auto node = g.node_index(o.maturity);
        if (!node || *node == 0) fail(f + ".maturity", "is not a node of the calibration grid");
        if (o.strike.has_value() == o.delta_tag.has_value()) fail(f, "needs exactly one of strike and delta tag");
        if (o.strike && !(*o.strike > 0.0 && std::isfinite(*o.strike))) fail(f + ".strike", "must be > 0");
        // A put with positive finite vol always lies strictly inside the price bounds.
        if (!(o.implied_vol > 0.0) || o.implied_vol > 5.0)
            fail(f + ".implied_vol", "outside (0, 5]: put price violates the no-arbitrage bounds");
        if (!(o.weight > 0.0) || !std::isfinite(o.weight)) fail(f + ".weight", "must be > 0");
        ++count[*node - 1];
    }
    for (std::size_t i = 0; i < count.size(); ++i)
        if (count[i] == 0) fail("quotes", "no quote at maturity " + std::to_string(g[i + 1]));
    for (std::size_t i = 0; i < initial_guess.intervals(); ++i) {
        const Vec x = to_vec(initial_guess.interval(i));
        const Vec l = to_vec(bounds.lo), h = to_vec(bounds.hi);
        for (std::size_t j = 0; j < n_free; ++j)
            if (x[j] < l[j] || x[j] > h[j])
                fail("initial_guess[" + std::to_string(i) + "]", "outside the parameter bounds");
    }
}

CalibrationProblem make_problem(std::vector<OptionQuote> quotes, double s0, double v0, const IntervalParams& guess) {
    std::vector<double> nodes{0.0};
    for (const auto& q : quotes) nodes.push_back(q.maturity);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }),
                nodes.end());
    if (nodes.size() < 2 || !(nodes[1] > 0.0)) fail("quotes", "need at least one positive maturity");
    CalibrationProblem prob;
    prob.quotes = std::move(quotes);
    auto& p = prob.initial_guess;
    p.grid = TimeGrid(nodes);
    p.s0 = s0;
    p.v0 = v0;
    const auto n = p.grid.intervals();
    p.kappa.assign(n, guess.kappa);
    p.theta.assign(n, guess.theta);
    p.lambda.assign(n, guess.lambda);
    p.rho.assign(n, guess.rho);
    p.r_d.assign(n, guess.r_d);
    p.r_f.assign(n, guess.r_f);
    return prob;
}

bool CalibrationResult::complete() const {
    return std::all_of(intervals.begin(), intervals.end(), [](const IntervalFit& f) { return f.converged; });
}

std::vector<ResolvedQuote> resolve_quotes(const PiecewiseParams& p, double T, const std::vector<OptionQuote>& quotes) {
    const auto mk = flat_market(p, T);
    std::vector<ResolvedQuote> out;
    for (const auto& q : quotes) {
        if (std::abs(q.maturity - T) > 1e-12 * std::max(1.0, T)) continue;
        const double K = q.strike ? *q.strike : strike_from_delta(*q.delta_tag, q.implied_vol, mk);
        out.push_back({K, q.implied_vol, q.weight});
    }
    return out;
}

std::vector<double> model_vols(const ExpansionState& state, const ModelSpec& m, const PiecewiseParams& p,
                               const std::vector<double>& strikes) {
    const double T = p.grid[state.index];
    const auto mk = flat_market(p, T);
    std::vector<double> out;
    for (double K : strikes) out.push_back(implied_vol(price_from_state(state, m, p, std::log(K)).total, K, mk).sigma);
    return out;
}

namespace {

// Finite-difference vol Jacobian of the interval's quotes at `at`.
struct LocalJacobian {
    Vec base{};
    std::vector<Vec> rows;  // ∂σ_q/∂x_j; zero rows where a bump was penalized
};

LocalJacobian local_jacobian(const CalibrationProblem& prob, const PiecewiseParams& params,
                             const ExpansionState& frozen, std::size_t i, const std::vector<ResolvedQuote>& quotes,
                             const Vec& at) {
    const Vec lo = to_vec(prob.bounds.lo), hi = to_vec(prob.bounds.hi);
    LocalJacobian out;
    out.base = at;
    for (std::size_t j = 0; j < n_free; ++j) out.base[j] = std::clamp(out.base[j], lo[j], hi[j]);
    out.rows.assign(quotes.size(), Vec{});
    auto p = params.truncated(params.grid[i + 1]);
    auto vols_at = [&](const Vec& x, bool& bad) {
        set_interval(p, i, x);
        try {
            const auto st = extend_expansion(frozen, prob.model, p, i, prob.euler_substeps);
            return quote_vols(prob, p, st, i, quotes, bad);
        } catch (const NumericalError&) {
            bad = true;
            return std::vector<double>(quotes.size(), std::numeric_limits<double>::quiet_NaN());
        }
    };
    bool bad = false;
    const auto v0 = vols_at(out.base, bad);
    if (bad) return out;
    for (std::size_t j = 0; j < n_free; ++j) {
        const double width = hi[j] > lo[j] ? hi[j] - lo[j] : 1.0;
        double h = 1e-4 * width;
        Vec x = out.base;
        if (x[j] + h > hi[j]) h = -h;
        x[j] += h;
        bool bad_j = false;
        const auto v1 = vols_at(x, bad_j);
        if (bad_j) continue;
        for (std::size_t q = 0; q < quotes.size(); ++q) out.rows[q][j] = (v1[q] - v0[q]) / h;
    }
    return out;
}

ParamScales scales_from(const LocalJacobian& jac, const std::vector<ResolvedQuote>& quotes, const ParamBounds& b) {
    const Vec lo = to_vec(b.lo), hi = to_vec(b.hi);
    Vec s{};
    double s_max = 0.0;
    for (std::size_t j = 0; j < n_free; ++j) {
        double acc = 0.0;
        for (std::size_t q = 0; q < quotes.size(); ++q) acc += quotes[q].weight * jac.rows[q][j] * jac.rows[q][j];
        s[j] = std::sqrt(acc);
        s_max = std::max(s_max, s[j]);
    }
    // Coordinates the quotes cannot see still get a small pull toward the anchor.
    for (std::size_t j = 0; j < n_free; ++j) {
        const double width = hi[j] > lo[j] ? hi[j] - lo[j] : 1.0;
        s[j] = std::max(s[j], s_max > 0.0 ? 1e-3 * s_max : 1.0 / width);
    }
    return s;
}

// x = base + M·y with M = L^{-T}, H = L·Lᵀ the Gauss–Newton Hessian of the
// objective on the free coordinates, so the objective is near-isotropic in y.
Eigen::MatrixXd whitening(const LocalJacobian& jac, const std::vector<ResolvedQuote>& quotes, const ParamScales& s,
                          double reg, std::size_t dim) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t q = 0; q < quotes.size(); ++q)
        for (std::size_t a = 0; a < dim; ++a)
            for (std::size_t b = 0; b < dim; ++b)
                H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
                    quotes[q].weight * jac.rows[q][a] * jac.rows[q][b];
    double tr = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
        H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) += reg * s[a] * s[a];
        tr += H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a));
    }
    for (std::size_t a = 0; a < dim; ++a)
        H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) += 1e-8 * tr / static_cast<double>(dim) + 1e-300;
    const Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) return Eigen::MatrixXd::Identity(H.rows(), H.cols());
    const Eigen::MatrixXd L = llt.matrixL();
    return L.transpose().triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(H.rows(), H.cols()));
}

}  // namespace

ParamScales regularization_scales(const CalibrationProblem& prob, const PiecewiseParams& params,
                                  const ExpansionState& frozen, std::size_t i, const std::vector<ResolvedQuote>& quotes,
                                  const IntervalParams& anchor) {
    if (frozen.index != i) throw ValidationError("regularization_scales: frozen state must be complete through T_i");
    return scales_from(local_jacobian(prob, params, frozen, i, quotes, to_vec(anchor)), quotes, prob.bounds);
}

ObjectiveValue objective(const CalibrationProblem& prob, const PiecewiseParams& params, const ExpansionState& frozen,
                         std::size_t i, const std::vector<ResolvedQuote>& quotes, const IntervalParams& anchor,
                         const ParamScales& scales) {
    if (frozen.index != i) throw ValidationError("objective: frozen state must be complete through T_i");
    return try_candidate(prob, params, frozen, i, quotes, anchor, scales).value;
}

ObjectiveValue objective_from_scratch(const CalibrationProblem& prob, const PiecewiseParams& params, std::size_t i,
                                      const std::vector<ResolvedQuote>& quotes, const IntervalParams& anchor,
                                      const ParamScales& scales) {
    const auto p = params.truncated(params.grid[i + 1]);
    ExpansionState s = initial_expansion_state(prob.model);
    for (std::size_t j = 0; j <= i; ++j) s = extend_expansion(s, prob.model, p, j, prob.euler_substeps);
    return evaluate(prob, p, s, i, quotes, anchor, scales);
}

CalibrationResult calibrate_bootstrap(const CalibrationProblem& prob) {
    prob.validate();
    CalibrationResult res;
    res.params = prob.initial_guess;
    auto& p = res.params;
    const Vec lo = to_vec(prob.bounds.lo), hi = to_vec(prob.bounds.hi);
    ExpansionState state = initial_expansion_state(prob.model);

    for (std::size_t i = 0; i < p.intervals(); ++i) {
        const double T = p.grid[i + 1];
        const auto quotes = resolve_quotes(p, T, prob.quotes);
        const IntervalParams anchor = i == 0 ? prob.initial_guess.interval(0) : p.interval(i - 1);
        const Vec start = to_vec(anchor);
        const bool fix_rho = prob.global_rho && i > 0;
        const std::size_t dim = fix_rho ? n_free - 1 : n_free;

        const auto scales = regularization_scales(prob, p, state, i, quotes, anchor);
        LocalJacobian jac;
        Eigen::MatrixXd M;
        auto decode = [&](const std::vector<double>& y) {
            Vec x = start;
            for (std::size_t a = 0; a < dim; ++a) {
                double v = jac.base[a];
                for (std::size_t b = 0; b < dim; ++b)
                    v += M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * y[b];
                x[a] = std::clamp(v, lo[a], hi[a]);
            }
            return x;
        };
        IntervalFit fit;
        auto f = [&](const std::vector<double>& y) {
            set_interval(p, i, decode(y));
            const auto c = try_candidate(prob, p, state, i, quotes, anchor, scales);
            if (c.value.penalized) ++fit.penalties;
            return c.value.value;
        };

        // Each pass re-linearizes at the current best point and runs
        // Nelder–Mead in the whitened coordinates of that linearization.
        Vec x_best = start;
        for (std::size_t j = 0; j < n_free; ++j) x_best[j] = std::clamp(x_best[j], lo[j], hi[j]);
        Simplex nm(dim, f, prob.max_evals);
        double fz = 0.0;
        bool collapsed = false;
        for (int pass = 0; !nm.spent(); ++pass) {
            jac = local_jacobian(prob, p, state, i, quotes, x_best);
            M = whitening(jac, quotes, scales, std::max(prob.regularization_weight, whitening_damping), dim);
            std::vector<double> y(dim, 0.0);
            const double before = pass == 0 ? nm.eval(y) : fz;
            if (pass == 0) {
                fz = before;
                fit.trace.push_back(fz);
                if (fz <= 1e-24) {
                    collapsed = true;
                    break;
                }
            }
            // In whitened units the distance to the minimum is about sqrt(f).
            const std::vector<double> step(dim, std::max(0.5 * std::sqrt(std::min(fz, 1e-2)), 1e-12));
            nm.set_budget(150);
            collapsed = nm.run(y, fz, step, fit.trace);
            x_best = decode(y);
            if (pass > 0 && collapsed && before - fz <= objective_resolution + 1e-6 * std::abs(before)) break;
            if (pass > 0) ++fit.restarts;
        }
        fit.converged = collapsed;
        fit.evals = nm.evals();
        fit.objective = fz;
        res.objective_evals += fit.evals;

        set_interval(p, i, x_best);
        const auto tp = p.truncated(T);
        state = extend_expansion(state, prob.model, tp, i, prob.euler_substeps);

        std::vector<double> strikes;
        for (const auto& q : quotes) strikes.push_back(q.strike);
        double sq = 0.0;
        try {
            const auto vols = model_vols(state, prob.model, tp, strikes);
            for (std::size_t q = 0; q < quotes.size(); ++q) sq += std::pow(vols[q] - quotes[q].implied_vol, 2);
            res.per_maturity_rmse.push_back(1e4 * std::sqrt(sq / static_cast<double>(quotes.size())));
        } catch (const std::exception&) {
            res.per_maturity_rmse.push_back(std::numeric_limits<double>::infinity());
            fit.converged = false;
        }
        res.intervals.push_back(std::move(fit));
    }
    res.martingale_ok = check_martingale_condition(p).ok;
    return res;
}

std::vector<OptionQuote> parse_quotes_csv(std::istream& in) {
    std::string line;
    std::size_t n = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++n;
        if (!trim(line).empty()) {
            header = split(line);
            break;
        }
    }
    const bool has_weight = header.size() == 4 && header[3] == "weight";
    if (header.size() < 3 || header[0] != "maturity" || header[1] != "delta_tag_or_strike" ||
        header[2] != "implied_vol" || (header.size() == 4 && !has_weight) || header.size() > 4)
        throw ValidationError("line " + std::to_string(std::max<std::size_t>(n, 1)) +
                              ": expected header maturity,delta_tag_or_strike,implied_vol[,weight]");
    std::vector<OptionQuote> out;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size() && !(has_weight && cells.size() == 3))
            throw ValidationError("line " + std::to_string(n) + ": expected " + std::to_string(header.size()) +
                                  " columns, found " + std::to_string(cells.size()));
        OptionQuote q;
        q.maturity = parse_number(cells[0], n, "maturity");
        if (!(q.maturity > 0.0)) throw ValidationError("line " + std::to_string(n) + ": maturity must be > 0");
        if (auto tag = parse_delta_tag(cells[1])) q.delta_tag = tag;
        else q.strike = parse_number(cells[1], n, "delta_tag_or_strike");
        if (q.strike && !(*q.strike > 0.0)) throw ValidationError("line " + std::to_string(n) + ": strike must be > 0");
        q.implied_vol = parse_number(cells[2], n, "implied_vol");
        if (!(q.implied_vol > 0.0)) throw ValidationError("line " + std::to_string(n) + ": implied_vol must be > 0");
        if (cells.size() == 4 && !cells[3].empty()) {
            q.weight = parse_number(cells[3], n, "weight");
            if (!(q.weight > 0.0)) throw ValidationError("line " + std::to_string(n) + ": weight must be > 0");
        }
        out.push_back(q);
    }
    return out;
}

}  // namespace xgbm
