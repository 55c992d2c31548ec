#include "xgbm/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "xgbm/errors.hpp"

namespace xgbm {

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

void fail(const std::string& field, const std::string& why) { throw ValidationError(field + ": " + why); }

void check_length(const std::vector<double>& v, std::size_t n, const char* name) {
    if (v.size() != n) {
        std::ostringstream os;
        os << "expected " << n << " values (one per interval), got " << v.size();
        fail(name, os.str());
    }
}

void check_each(const std::vector<double>& v, const char* name, bool allow_zero) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) fail(std::string(name) + "[" + std::to_string(i) + "]", "not finite");
        if (allow_zero ? v[i] < 0.0 : v[i] <= 0.0)
            fail(std::string(name) + "[" + std::to_string(i) + "]", allow_zero ? "must be >= 0" : "must be > 0");
    }
}

}  // namespace

// ============================================================================
// TimeGrid
// ============================================================================

TimeGrid::TimeGrid(std::vector<double> boundaries) : t_(std::move(boundaries)) {
    if (t_.size() < 2) fail("grid", "needs at least two nodes");
    if (t_.front() != 0.0) fail("grid", "first node must be 0");
    for (std::size_t i = 0; i < t_.size(); ++i) {
        if (!std::isfinite(t_[i]) || t_[i] < 0.0) fail("grid[" + std::to_string(i) + "]", "must be finite and >= 0");
        if (i > 0 && !(t_[i] > t_[i - 1])) fail("grid[" + std::to_string(i) + "]", "grid must be strictly increasing");
    }
}

std::size_t TimeGrid::interval_of(double t) const {
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    if (it == t_.begin()) return 0;
    auto i = static_cast<std::size_t>(it - t_.begin()) - 1;
    return std::min(i, intervals() - 1);
}

std::optional<std::size_t> TimeGrid::node_index(double t) const {
    for (std::size_t i = 0; i < t_.size(); ++i)
        if (close(t_[i], t)) return i;
    return std::nullopt;
}

bool TimeGrid::refines(const TimeGrid& coarse) const {
    if (!close(back(), coarse.back())) return false;
    return std::all_of(coarse.t_.begin(), coarse.t_.end(), [&](double s) { return node_index(s).has_value(); });
}

TimeGrid TimeGrid::subdivided(std::size_t substeps) const {
    if (substeps == 0) fail("substeps", "must be >= 1");
    std::vector<double> out{t_.front()};
    for (std::size_t i = 0; i < intervals(); ++i) {
        for (std::size_t j = 1; j < substeps; ++j)
            out.push_back(t_[i] + width(i) * static_cast<double>(j) / static_cast<double>(substeps));
        out.push_back(t_[i + 1]);
    }
    return TimeGrid(std::move(out));
}

TimeGrid TimeGrid::merged(const TimeGrid& other) const {
    const double end = std::min(back(), other.back());
    std::vector<double> all;
    for (double s : t_)
        if (s <= end) all.push_back(s);
    for (double s : other.t_)
        if (s <= end) all.push_back(s);
    std::sort(all.begin(), all.end());
    std::vector<double> out;
    for (double s : all)
        if (out.empty() || !close(out.back(), s)) out.push_back(s);
    return TimeGrid(std::move(out));
}

// ============================================================================
// PiecewiseParams
// ============================================================================

void PiecewiseParams::validate(Validation mode) const {
    const auto n = grid.intervals();
    if (n == 0) fail("grid", "needs at least two nodes");
    check_length(kappa, n, "kappa");
    check_length(theta, n, "theta");
    check_length(lambda, n, "lambda");
    check_length(rho, n, "rho");
    check_length(r_d, n, "r_d");
    check_length(r_f, n, "r_f");
    const bool zeros = mode == Validation::degenerate;
    check_each(kappa, "kappa", zeros);
    check_each(theta, "theta", zeros);
    // λ = 0 is the deterministic-volatility limit and stays admissible.
    check_each(lambda, "lambda", true);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(rho[i]) || std::abs(rho[i]) > 1.0)
            fail("rho[" + std::to_string(i) + "]", "must lie in [-1, 1]");
        if (!std::isfinite(r_d[i])) fail("r_d[" + std::to_string(i) + "]", "not finite");
        if (!std::isfinite(r_f[i])) fail("r_f[" + std::to_string(i) + "]", "not finite");
    }
    if (!std::isfinite(s0) || s0 <= 0.0) fail("s0", "must be > 0");
    if (!std::isfinite(v0) || (zeros ? v0 < 0.0 : v0 <= 0.0)) fail("v0", zeros ? "must be >= 0" : "must be > 0");
}

IntervalParams PiecewiseParams::interval(std::size_t i) const {
    return {kappa.at(i), theta.at(i), lambda.at(i), rho.at(i), r_d.at(i), r_f.at(i)};
}

namespace {
double integrate_piecewise(const TimeGrid& g, const std::vector<double>& v, double T) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.intervals() && g[i] < T; ++i) acc += v[i] * (std::min(g[i + 1], T) - g[i]);
    if (T > g.back()) acc += v.back() * (T - g.back());
    return acc;
}
}  // namespace

double PiecewiseParams::integrated_rd(double T) const { return integrate_piecewise(grid, r_d, T); }
double PiecewiseParams::integrated_rf(double T) const { return integrate_piecewise(grid, r_f, T); }

PiecewiseParams PiecewiseParams::refined(const TimeGrid& fine) const {
    if (!fine.refines(grid)) fail("fine_grid", "does not refine the parameter grid");
    PiecewiseParams out;
    out.grid = fine;
    out.s0 = s0;
    out.v0 = v0;
    for (std::size_t j = 0; j < fine.intervals(); ++j) {
        const auto ip = interval(grid.interval_of(0.5 * (fine[j] + fine[j + 1])));
        out.kappa.push_back(ip.kappa);
        out.theta.push_back(ip.theta);
        out.lambda.push_back(ip.lambda);
        out.rho.push_back(ip.rho);
        out.r_d.push_back(ip.r_d);
        out.r_f.push_back(ip.r_f);
    }
    return out;
}

PiecewiseParams PiecewiseParams::truncated(double T) const {
    if (!(T > 0.0) || T > grid.back() * (1.0 + 1e-12)) fail("T", "must lie in (0, grid end]");
    std::vector<double> nodes;
    for (double s : grid.boundaries())
        if (s < T && !close(s, T)) nodes.push_back(s);
    nodes.push_back(T);
    const auto n = nodes.size() - 1;
    PiecewiseParams out = *this;
    out.grid = TimeGrid(std::move(nodes));
    for (auto* v : {&out.kappa, &out.theta, &out.lambda, &out.rho, &out.r_d, &out.r_f}) v->resize(n);
    return out;
}

PiecewiseParams PiecewiseParams::flat(double s0, double v0, double T, const IntervalParams& ip) {
    PiecewiseParams p;
    p.grid = TimeGrid({0.0, T});
    p.kappa = {ip.kappa};
    p.theta = {ip.theta};
    p.lambda = {ip.lambda};
    p.rho = {ip.rho};
    p.r_d = {ip.r_d};
    p.r_f = {ip.r_f};
    p.s0 = s0;
    p.v0 = v0;
    return p;
}

// ============================================================================
// ModelSpec
// ============================================================================

double ModelSpec::beta(const IntervalParams& ip, double x) const {
    return ip.lambda * (mu == 1.0 ? x : std::pow(x, mu));
}

void ModelSpec::validate() const {
    if (!(mu >= 0.5 && mu <= 1.0)) fail("mu", "must lie in [1/2, 1]");
    if (!alpha || !alpha_x || !alpha_xx) fail(name.empty() ? "model" : name, "drift callbacks not set");
}

ModelSpec verhulst_model() {
    ModelSpec m;
    m.name = "verhulst";
    m.alpha = [](const IntervalParams& p, double x) { return p.kappa * (p.theta - x) * x; };
    m.alpha_x = [](const IntervalParams& p, double x) { return p.kappa * p.theta - 2.0 * p.kappa * x; };
    m.alpha_xx = [](const IntervalParams& p, double) { return -2.0 * p.kappa; };
    m.mu = 1.0;
    m.affine = [](const IntervalParams& p) {
        return AffineCoefficients{p.kappa * p.theta, -2.0 * p.kappa, -2.0 * p.kappa, 0};
    };
    return m;
}

ModelSpec inverse_gamma_model() {
    ModelSpec m;
    m.name = "inverse_gamma";
    m.alpha = [](const IntervalParams& p, double x) { return p.kappa * (p.theta - x); };
    m.alpha_x = [](const IntervalParams& p, double) { return -p.kappa; };
    m.alpha_xx = [](const IntervalParams&, double) { return 0.0; };
    m.mu = 1.0;
    m.affine = [](const IntervalParams& p) { return AffineCoefficients{-p.kappa, 0.0, 0.0, 0}; };
    return m;
}

ModelSpec model_by_name(const std::string& name) {
    if (name == "verhulst") return verhulst_model();
    if (name == "inverse_gamma") return inverse_gamma_model();
    throw ValidationError("model: unknown model '" + name + "' (expected verhulst | inverse_gamma)");
}

// ============================================================================
// Quotes and checks
// ============================================================================

std::string to_string(DeltaTag tag) {
    switch (tag) {
        case DeltaTag::put10: return "PUT10";
        case DeltaTag::put25: return "PUT25";
        case DeltaTag::atm: return "ATM";
    }
    return "?";
}

std::optional<DeltaTag> parse_delta_tag(const std::string& s) {
    if (s == "PUT10") return DeltaTag::put10;
    if (s == "PUT25") return DeltaTag::put25;
    if (s == "ATM") return DeltaTag::atm;
    return std::nullopt;
}

MartingaleReport check_martingale_condition(const PiecewiseParams& p) {
    MartingaleReport r;
    for (std::size_t i = 0; i < p.intervals(); ++i) {
        const double m = p.rho[i] * p.lambda[i] - p.kappa[i];
        r.margins.push_back(m);
        if (m > 0.0) r.ok = false;
    }
    return r;
}

// ============================================================================
// JSON
// ============================================================================

namespace {

std::vector<double> number_array(const nlohmann::json& j, const char* field) {
    if (!j.contains(field)) fail(field, "missing field");
    const auto& a = j.at(field);
    if (!a.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : a) {
        if (!e.is_number()) fail(field, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

double number(const nlohmann::json& j, const char* field) {
    if (!j.contains(field)) fail(field, "missing field");
    if (!j.at(field).is_number()) fail(field, "expected a number");
    return j.at(field).get<double>();
}

}  // namespace

ModelConfig model_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail("config", "expected a JSON object");
    ModelConfig c;
    auto& p = c.params;
    p.s0 = number(j, "s0");
    p.v0 = number(j, "v0");
    p.grid = TimeGrid(number_array(j, "grid"));
    p.kappa = number_array(j, "kappa");
    p.theta = number_array(j, "theta");
    p.lambda = number_array(j, "lambda");
    p.rho = number_array(j, "rho");
    p.r_d = number_array(j, "r_d");
    p.r_f = number_array(j, "r_f");
    if (j.contains("model")) {
        if (!j.at("model").is_string()) fail("model", "expected a string");
        c.model = j.at("model").get<std::string>();
    }
    (void)model_by_name(c.model);
    p.validate();
    return c;
}

nlohmann::json to_json(const PiecewiseParams& p, const std::string& model) {
    return {{"s0", p.s0},         {"v0", p.v0},         {"grid", p.grid.boundaries()},
            {"kappa", p.kappa},   {"theta", p.theta},   {"lambda", p.lambda},
            {"rho", p.rho},       {"r_d", p.r_d},       {"r_f", p.r_f},
            {"model", model}};
}

}  // namespace xgbm
