#include "xgbm/pricer.hpp"

#include <cmath>

#include "xgbm/errors.hpp"

namespace xgbm {

std::string to_string(Backend b) { return b == Backend::quadrature ? "quadrature" : "recursion"; }

namespace {

bool is_integer(double x) { return x >= 0.0 && std::floor(x) == x; }

double l_coefficient(LKind kind, const IntervalParams& ip) {
    switch (kind) {
        case LKind::rho_lambda: return ip.rho * ip.lambda;
        case LKind::lambda_sq: return ip.lambda * ip.lambda;
        case LKind::unit: return 1.0;
        case LKind::alpha_xx: break;
    }
    return 0.0;
}

std::optional<OperatorTerm> closed_form(const std::vector<FactorSpec>& specs, const ModelSpec& m,
                                        const PiecewiseParams& p) {
    if (!m.has_affine_structure()) return std::nullopt;
    for (const auto& f : specs)
        if (f.l != LKind::alpha_xx && !is_integer(f.power)) return std::nullopt;
    OperatorTerm term;
    const auto n = p.intervals();
    for (const auto& f : specs) {
        OperatorFactor of;
        of.k_const.resize(n);
        of.h.resize(n);
        of.l_const.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ip = p.interval(i);
            const auto aff = m.affine(ip);
            of.k_const[i] = f.k_scale * aff.k_const;
            of.h[i] = f.k_scale * aff.h;
            of.l_const[i] = f.l == LKind::alpha_xx ? aff.xx_const : l_coefficient(f.l, ip);
            if (f.l == LKind::alpha_xx) of.q = aff.xx_power;
        }
        if (f.l != LKind::alpha_xx) of.q = static_cast<int>(f.power);
        term.factors.push_back(std::move(of));
    }
    return term;
}

PiecewiseParams checked_truncation(const PiecewiseParams& p, double T) {
    if (!(T > 0.0)) throw ValidationError("T: maturity must be > 0");
    return p.truncated(T);
}

OperatorTerm variance_term(std::size_t intervals) {
    OperatorFactor f;
    f.k_const.assign(intervals, 0.0);
    f.h.assign(intervals, 0.0);
    f.l_const.assign(intervals, 1.0);
    f.q = 2;
    return OperatorTerm{{f}};
}

PriceResult assemble_price(const std::vector<AssembledTerm>& terms, const std::vector<double>& values,
                           const PiecewiseParams& p, double log_strike, double T, double y, Backend backend) {
    PriceResult r;
    r.backend = backend;
    r.integrated_variance = y;
    const BsPoint bs{std::log(p.s0), y, log_strike, p.integrated_rd(T), p.integrated_rf(T)};
    r.base_bs = put_price(bs);
    double sum = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto& a = terms[t];
        Correction c;
        c.name = a.name;
        c.operator_value = a.squared ? values[t] * values[t] : values[t];
        c.dx = a.dx;
        c.dy = a.dy;
        c.derivative = y > 0.0 ? partial(bs, a.dx, a.dy) : 0.0;
        c.coefficient = a.coefficient;
        c.contribution = c.coefficient * c.operator_value * c.derivative;
        sum += c.contribution;
        r.corrections.push_back(std::move(c));
    }
    r.total = r.base_bs + sum;
    return r;
}

}  // namespace

std::vector<AssembledTerm> assemble_operator_terms(const ModelSpec& m, const PiecewiseParams& p) {
    m.validate();
    const double mu = m.mu;
    const FactorSpec A{-1.0, LKind::rho_lambda, mu + 1.0};
    const FactorSpec B{-2.0, LKind::lambda_sq, 2.0 * mu};
    const FactorSpec xv{1.0, LKind::unit, 1.0};
    const FactorSpec x2{2.0, LKind::unit, 0.0};
    const FactorSpec xx{1.0, LKind::alpha_xx, 0.0};
    const FactorSpec r1{0.0, LKind::rho_lambda, 2.0 * mu - 1.0};
    const FactorSpec r2{0.0, LKind::rho_lambda, mu};

    std::vector<AssembledTerm> out = {
        {"A.(ax,v)", {A, xv}, 1, 1, 2.0, false, {}},
        {"B.(2ax,1)", {B, x2}, 0, 1, 1.0, false, {}},
        {"A.A.(2ax,1)", {A, A, x2}, 2, 1, 2.0, false, {}},
        {"B.(ax,axx).(ax,v)", {B, xx, xv}, 0, 1, 1.0, false, {}},
        {"A.A.(ax,axx).(ax,v)", {A, A, xx, xv}, 2, 1, 2.0, false, {}},
        {"A.(0,rl*v^(2mu-1)).(ax,v)", {A, r1, xv}, 2, 1, 2.0 * mu, false, {}},
        {"A.(0,rl*v^mu).(ax,v)", {A, r2, xv}, 2, 1, 2.0, false, {}},
        {"B.(ax,v).(ax,v)", {B, xv, xv}, 0, 2, 4.0, false, {}},
        {"(A.(ax,v))^2", {A, xv}, 2, 2, 2.0, true, {}},
    };
    for (auto& t : out) t.closed_form = closed_form(t.factors, m, p);
    return out;
}

OperatorFunctions term_functions(const AssembledTerm& term, const ModelSpec& m, const PiecewiseParams& p,
                                 const ZerothPath& zeroth) {
    OperatorFunctions out;
    out.breakpoints = zeroth.grid().boundaries();
    for (double b : p.grid.boundaries()) out.breakpoints.push_back(b);
    for (const auto& f : term.factors) {
        FactorFunctions ff;
        ff.k = [f, &m, &p, &zeroth](double t) {
            if (f.k_scale == 0.0) return 0.0;
            return f.k_scale * m.alpha_x(p.at(t), zeroth.exponent_value(t));
        };
        ff.l = [f, &m, &p, &zeroth](double t) {
            const auto ip = p.at(t);
            const double v = zeroth.value(t);
            if (f.l == LKind::alpha_xx) return m.alpha_xx(ip, v);
            const double c = l_coefficient(f.l, ip);
            if (f.power == 0.0) return c;
            if (f.power == 1.0) return c * v;
            return c * std::pow(v, f.power);
        };
        out.factors.push_back(std::move(ff));
    }
    return out;
}

PriceResult price_second_order_general(const ModelSpec& m, const PiecewiseParams& params, double log_strike, double T,
                                       Backend backend, const PricerOptions& opt) {
    m.validate();
    params.validate();
    if (!std::isfinite(log_strike)) throw ValidationError("strike: log-strike must be finite");
    if (backend == Backend::recursion) {
        const auto node = params.grid.node_index(T);
        if (!node || *node == 0)
            throw ValidationError("T: the recursion backend needs a maturity on the parameter grid");
        const auto p = params.truncated(T);
        if (!m.has_affine_structure())
            throw ValidationError("backend: model '" + m.name + "' has no affine structure for the recursion backend");
        ExpansionState s = initial_expansion_state(m);
        for (std::size_t i = 0; i < p.intervals(); ++i) s = extend_expansion(s, m, p, i, opt.euler_substeps);
        return price_from_state(s, m, p, log_strike);
    }

    const auto p = checked_truncation(params, T);
    const ZerothMethod method =
        opt.zeroth.value_or(m.name == "verhulst" ? ZerothMethod::explicit_verhulst : ZerothMethod::rk4);
    std::optional<ZerothPath> zeroth;
    switch (method) {
        case ZerothMethod::explicit_verhulst:
            if (m.name != "verhulst") throw ValidationError("zeroth: explicit solution exists for Verhulst only");
            zeroth.emplace(zeroth_path_explicit(p));
            break;
        case ZerothMethod::rk4:
            zeroth.emplace(zeroth_path_rk4(m, p, opt.rk4_step > 0.0 ? opt.rk4_step : default_rk4_step(T)));
            break;
        case ZerothMethod::euler_piecewise:
            zeroth.emplace(v0_euler_piecewise(m, p, p.grid.subdivided(opt.euler_substeps)));
            break;
    }
    const auto terms = assemble_operator_terms(m, p);
    QuadratureOptions qo;
    qo.tol = opt.quadrature_tol;
    OperatorFunctions var;
    var.breakpoints = zeroth->grid().boundaries();
    var.factors.push_back({[](double) { return 0.0; }, [&zeroth](double t) {
                               const double v = zeroth->value(t);
                               return v * v;
                           }});
    const double y = eval_quadrature(var, 0.0, T, qo);
    std::vector<double> values;
    for (const auto& t : terms) values.push_back(eval_quadrature(term_functions(t, m, p, *zeroth), 0.0, T, qo));
    return assemble_price(terms, values, p, log_strike, T, y, Backend::quadrature);
}

PriceResult price_second_order_verhulst(const PiecewiseParams& p, double log_strike, double T, Backend backend,
                                        const PricerOptions& opt) {
    return price_second_order_general(verhulst_model(), p, log_strike, T, backend, opt);
}

// ============================================================================
// Incremental state
// ============================================================================

ExpansionState initial_expansion_state(const ModelSpec& m) {
    ExpansionState s;
    PiecewiseParams dummy = PiecewiseParams::flat(1.0, 0.1, 1.0, {1.0, 0.1, 0.1, 0.0, 0.0, 0.0});
    for (const auto& t : assemble_operator_terms(m, dummy)) s.terms.emplace_back(t.factors.size());
    return s;
}

ExpansionState extend_expansion(const ExpansionState& state, const ModelSpec& m, const PiecewiseParams& p,
                                std::size_t i, std::size_t substeps) {
    if (i != state.index) throw ValidationError("extend_expansion: state is not at interval " + std::to_string(i));
    const auto terms = assemble_operator_terms(m, p);
    const auto zeroth = v0_euler_piecewise(m, p, p.grid.subdivided(substeps));
    ExpansionState out;
    out.index = i + 1;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        if (!terms[t].closed_form)
            throw ValidationError("backend: term '" + terms[t].name + "' has no closed form (needs affine drift and mu = 1)");
        out.terms.push_back(extend_to_next_maturity(state.terms[t], *terms[t].closed_form, i, zeroth));
    }
    out.variance = extend_to_next_maturity(state.variance, variance_term(p.intervals()), i, zeroth);
    return out;
}

PriceResult price_from_state(const ExpansionState& state, const ModelSpec& m, const PiecewiseParams& p,
                             double log_strike) {
    if (state.index == 0) throw ValidationError("price_from_state: state has not been extended");
    const double T = p.grid[state.index];
    const auto terms = assemble_operator_terms(m, p);
    std::vector<double> values;
    for (const auto& s : state.terms) values.push_back(s.value());
    return assemble_price(terms, values, p, log_strike, T, state.variance.value(), Backend::recursion);
}

}  // namespace xgbm
