#include "xgbm/cli.hpp"

#include <boost/uuid/detail/sha1.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include "xgbm/calibration.hpp"
#include "xgbm/errors.hpp"
#include "xgbm/implied_vol.hpp"
#include "xgbm/monte_carlo.hpp"
#include "xgbm/pricer.hpp"

namespace xgbm {

using nlohmann::json;

namespace {

struct Options {
    std::string config_path;
    std::string out_path;
    std::string plot_path;
    std::string quotes_path;
    std::string params_out;
    std::optional<std::uint64_t> seed, paths, steps_per_year;
    std::optional<std::string> estimator, backend;
    std::optional<double> maturity, strike;
    std::optional<std::string> delta, vary;
    std::vector<double> values;
};

std::string read_file(const std::string& path, const std::string& what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(what + ": cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string vol_str(double v) { return fmt("%.6f", v); }   // 1e-6 = 0.01 bp
std::string bps_str(double v) { return fmt("%.2f", v); }   // 0.01 bp
std::string price_str(double v) { return fmt("%.10f", v); }

// Nearest double to v printed with `digits` decimals, so JSON shows the short form.
double round_to(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::strtod(buf, nullptr);
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Manifest {
public:
    Manifest(std::string command, const Options& o, const std::string& config_bytes, const std::string& extra_bytes,
             std::uint64_t seed)
        : command_(std::move(command)), config_(o.config_path), seed_(seed), started_(utc_now()) {
        std::ostringstream key;
        key << command_ << '\n'
            << "seed=" << seed << " paths=" << o.paths.value_or(0) << " spy=" << o.steps_per_year.value_or(0)
            << " estimator=" << o.estimator.value_or("") << " backend=" << o.backend.value_or("")
            << " maturity=" << (o.maturity ? fmt("%.17g", *o.maturity) : "") << " strike="
            << (o.strike ? fmt("%.17g", *o.strike) : "") << " delta=" << o.delta.value_or("")
            << " vary=" << o.vary.value_or("") << " values=";
        for (double v : o.values) key << fmt("%.17g", v) << ';';
        key << '\n' << config_bytes << '\n' << extra_bytes;
        hash_ = git_blob_hash(key.str());
    }

    [[nodiscard]] const std::string& hash() const { return hash_; }
    [[nodiscard]] std::string csv_line() const {
        return "# manifest " + hash_ + " command=" + command_ + " seed=" + std::to_string(seed_) + "\n";
    }
    [[nodiscard]] json to_json() const {
        return {{"command", command_}, {"config", config_},       {"seed", seed_},
                {"hash", hash_},       {"started_at", started_}, {"finished_at", utc_now()}};
    }

private:
    std::string command_, config_;
    std::uint64_t seed_;
    std::string started_;
    std::string hash_;
};

// Loaded config with the command-specific sections kept as JSON.
struct Loaded {
    std::string bytes;
    json doc;
    ModelConfig model;
    ModelSpec spec;
};

Loaded load_config(const std::string& path) {
    Loaded l;
    l.bytes = read_file(path, "config");
    try {
        l.doc = json::parse(l.bytes);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    l.model = model_config_from_json(l.doc);
    l.spec = model_by_name(l.model.model);
    return l;
}

json section(const Loaded& l, const std::string& name) {
    if (!l.doc.contains(name)) return json::object();
    if (!l.doc.at(name).is_object()) throw ValidationError(name + ": expected an object");
    return l.doc.at(name);
}

template <class T>
T get_or(const json& s, const std::string& sec, const std::string& key, T fallback) {
    if (!s.contains(key)) return fallback;
    try {
        return s.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(sec + "." + key + ": wrong type");
    }
}

McConfig mc_config(const Loaded& l, const Options& o) {
    const auto s = section(l, "mc");
    McConfig c;
    c.n_paths = o.paths.value_or(get_or<std::uint64_t>(s, "mc", "paths", c.n_paths));
    c.steps_per_year = o.steps_per_year.value_or(get_or<std::uint64_t>(s, "mc", "steps_per_year", c.steps_per_year));
    c.seed = o.seed.value_or(get_or<std::uint64_t>(s, "mc", "seed", c.seed));
    c.antithetic = get_or<bool>(s, "mc", "antithetic", false);
    c.threads = get_or<unsigned>(s, "mc", "threads", 0);
    const auto est = o.estimator.value_or(get_or<std::string>(s, "mc", "estimator", "mixing"));
    if (est == "mixing") c.estimator = Estimator::mixing;
    else if (est == "plain") c.estimator = Estimator::plain;
    else throw ValidationError("estimator: expected plain or mixing, got '" + est + "'");
    c.validate();
    return c;
}

Backend backend_of(const Options& o) {
    const auto b = o.backend.value_or("quadrature");
    if (b == "quadrature") return Backend::quadrature;
    if (b == "recursion") return Backend::recursion;
    throw ValidationError("backend: expected quadrature or recursion, got '" + b + "'");
}

std::vector<double> maturities_of(const json& s, const std::string& sec, const PiecewiseParams& p,
                                  std::vector<double> fallback) {
    auto m = get_or<std::vector<double>>(s, sec, "maturities", std::move(fallback));
    if (m.empty()) throw ValidationError(sec + ".maturities: empty list");
    for (double T : m)
        if (!(T > 0.0) || T > p.grid.back() * (1.0 + 1e-12))
            throw ValidationError(sec + ".maturities: " + fmt("%g", T) + " outside (0, grid end]");
    return m;
}

std::vector<DeltaTag> deltas_of(const json& s, const std::string& sec, std::vector<std::string> fallback) {
    std::vector<DeltaTag> out;
    for (const auto& name : get_or<std::vector<std::string>>(s, sec, "deltas", std::move(fallback))) {
        const auto tag = parse_delta_tag(name);
        if (!tag) throw ValidationError(sec + ".deltas: unknown tag '" + name + "' (PUT10, PUT25, ATM)");
        out.push_back(*tag);
    }
    if (out.empty()) throw ValidationError(sec + ".deltas: empty list");
    return out;
}

// Parameters with T inserted as a grid node, so the recursion backend can stop there.
PiecewiseParams with_node(const PiecewiseParams& p, double T) {
    if (p.grid.node_index(T)) return p;
    auto nodes = p.grid.boundaries();
    nodes.push_back(T);
    std::sort(nodes.begin(), nodes.end());
    return p.refined(TimeGrid(nodes));
}

double approx_price(const Loaded& l, const PiecewiseParams& p, double K, double T, Backend b) {
    return price_second_order_general(l.spec, with_node(p, T), std::log(K), T, b).total;
}

double vol_of(double price, double K, const PiecewiseParams& p, double T) {
    const auto q = implied_vol(price, K, flat_market(p, T));
    if (!q.converged) throw NumericalError("implied vol did not converge at K=" + fmt("%g", K));
    return q.sigma;
}

double vega(double sigma, double K, const PiecewiseParams& p, double T) {
    const auto mk = flat_market(p, T);
    return partial({std::log(mk.s0), sigma * sigma * T, std::log(K), mk.r_d * T, mk.r_f * T}, 0, 1) * 2.0 * sigma * T;
}

void emit(const Options& o, std::ostream& out, const std::string& text) {
    if (o.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(o.out_path, std::ios::binary);
    if (!f) throw ValidationError("out: cannot write '" + o.out_path + "'");
    f << text;
}

void emit_plot(const Options& o, const std::string& text) {
    if (o.plot_path.empty()) return;
    std::ofstream f(o.plot_path, std::ios::binary);
    if (!f) throw ValidationError("plot: cannot write '" + o.plot_path + "'");
    f << text;
}

// ---------------------------------------------------------------------------

int cmd_price(const Options& o, std::ostream& out) {
    const auto l = load_config(o.config_path);
    const auto& p = l.model.params;
    const auto s = section(l, "price");
    const Backend b = backend_of(o);
    const double T = o.maturity.value_or(get_or<double>(s, "price", "maturity", p.grid.back()));
    if (!(T > 0.0) || T > p.grid.back() * (1.0 + 1e-12)) throw ValidationError("maturity: outside (0, grid end]");

    std::vector<std::pair<std::string, double>> strikes;
    const double fwd = strike_from_delta(DeltaTag::atm, 1.0, flat_market(p, T));
    if (o.strike) {
        strikes.emplace_back("", *o.strike);
    } else if (o.delta || !s.contains("strikes")) {
        std::vector<DeltaTag> tags;
        if (o.delta) {
            const auto t = parse_delta_tag(*o.delta);
            if (!t) throw ValidationError("delta: unknown tag '" + *o.delta + "' (PUT10, PUT25, ATM)");
            tags.push_back(*t);
        } else {
            tags = deltas_of(s, "price", {"ATM"});
        }
        // Delta strikes use the approximation's own ATM vol as reference.
        const double atm_vol = vol_of(approx_price(l, p, fwd, T, b), fwd, p, T);
        for (auto t : tags) strikes.emplace_back(to_string(t), strike_from_delta(t, atm_vol, flat_market(p, T)));
    } else {
        for (double K : get_or<std::vector<double>>(s, "price", "strikes", {})) {
            if (!(K > 0.0)) throw ValidationError("price.strikes: must be > 0");
            strikes.emplace_back("", K);
        }
    }

    const Manifest man("price", o, l.bytes, "", 0);
    json results = json::array();
    std::string plot = "# manifest " + man.hash() + "\n# maturity strike price implied_vol\n";
    for (const auto& [tag, K] : strikes) {
        const auto r = price_second_order_general(l.spec, with_node(p, T), std::log(K), T, b);
        json corr = json::array();
        for (const auto& c : r.corrections)
            corr.push_back({{"name", c.name},
                            {"operator", c.operator_value},
                            {"derivative", std::to_string(c.dx) + "," + std::to_string(c.dy)},
                            {"coefficient", c.coefficient},
                            {"contribution", round_to(c.contribution, 10)}});
        const double iv = vol_of(r.total, K, p, T);
        json row = {{"maturity", T},
                    {"strike", round_to(K, 10)},
                    {"total", round_to(r.total, 10)},
                    {"base_bs", round_to(r.base_bs, 10)},
                    {"integrated_variance", r.integrated_variance},
                    {"implied_vol", round_to(iv, 6)},
                    {"backend", to_string(r.backend)},
                    {"corrections", corr}};
        if (!tag.empty()) row["delta"] = tag;
        results.push_back(row);
        plot += fmt("%.10g", T) + " " + price_str(K) + " " + price_str(r.total) + " " + vol_str(iv) + "\n";
    }
    json doc = {{"manifest", man.to_json()}, {"model", l.model.model}, {"results", results}};
    emit(o, out, doc.dump(2) + "\n");
    emit_plot(o, plot);
    return exit_ok;
}

int cmd_mc_validate(const Options& o, std::ostream& out) {
    const auto l = load_config(o.config_path);
    const auto& p = l.model.params;
    const auto s = section(l, "mc_validate");
    auto cfg = mc_config(l, o);
    const Backend b = backend_of(o);
    std::vector<double> fallback;
    for (double T : {1.0 / 12.0, 0.25, 0.5, 1.0})
        if (T <= p.grid.back() * (1.0 + 1e-12)) fallback.push_back(T);
    if (fallback.empty()) fallback.push_back(p.grid.back());
    const auto mats = maturities_of(s, "mc_validate", p, fallback);
    const auto tags = deltas_of(s, "mc_validate", {"PUT10", "PUT25", "ATM"});

    const Manifest man("mc-validate", o, l.bytes, "", cfg.seed);
    std::ostringstream csv;
    csv << man.csv_line();
    csv << "maturity,delta,strike,approx_vol,mixing_vol,mixing_se_bp,plain_vol,plain_se_bp,approx_minus_mixing_bp,"
           "mixing_minus_plain_se\n";
    std::string plot = "# manifest " + man.hash() + "\n# maturity delta approx_vol mixing_vol plain_vol\n";
    for (double T : mats) {
        auto mix_cfg = cfg, plain_cfg = cfg;
        mix_cfg.estimator = Estimator::mixing;
        plain_cfg.estimator = Estimator::plain;
        const double fwd = strike_from_delta(DeltaTag::atm, 1.0, flat_market(p, T));
        const auto atm = price_mc(l.spec, p, std::log(fwd), T, mix_cfg);
        const double sigma_ref = vol_of(atm.mean, fwd, p, T);
        for (auto tag : tags) {
            const double K = strike_from_delta(tag, sigma_ref, flat_market(p, T));
            const double k = std::log(K);
            const auto mix = tag == DeltaTag::atm ? atm : price_mc(l.spec, p, k, T, mix_cfg);
            const auto pl = price_mc(l.spec, p, k, T, plain_cfg);
            const double va = vol_of(approx_price(l, p, K, T, b), K, p, T);
            const double vm = vol_of(mix.mean, K, p, T);
            const double vp = vol_of(pl.mean, K, p, T);
            const double vg = vega(vm, K, p, T);
            const double se = std::hypot(mix.std_error, pl.std_error);
            csv << fmt("%.10g", T) << ',' << to_string(tag) << ',' << price_str(K) << ',' << vol_str(va) << ','
                << vol_str(vm) << ',' << bps_str(1e4 * mix.std_error / vg) << ',' << vol_str(vp) << ','
                << bps_str(1e4 * pl.std_error / vg) << ',' << bps_str(1e4 * (va - vm)) << ','
                << (se > 0.0 ? bps_str((mix.mean - pl.mean) / se) : std::string("0.00")) << '\n';
            plot += fmt("%.10g", T) + " " + to_string(tag) + " " + vol_str(va) + " " + vol_str(vm) + " " +
                    vol_str(vp) + "\n";
        }
    }
    emit(o, out, csv.str());
    emit_plot(o, plot);
    return exit_ok;
}

void set_all(PiecewiseParams& p, const std::string& name, double v) {
    auto& field = name == "kappa" ? p.kappa : name == "theta" ? p.theta : name == "lambda" ? p.lambda : p.rho;
    std::fill(field.begin(), field.end(), v);
}

int cmd_sensitivity(const Options& o, std::ostream& out) {
    const auto l = load_config(o.config_path);
    const auto s = section(l, "sensitivity");
    const auto cfg = mc_config(l, o);
    const Backend b = backend_of(o);
    const auto vary = o.vary.value_or(get_or<std::string>(s, "sensitivity", "vary", ""));
    if (vary != "kappa" && vary != "theta" && vary != "lambda" && vary != "rho")
        throw ValidationError("vary: expected kappa, theta, lambda or rho, got '" + vary + "'");
    const auto values = o.values.empty() ? get_or<std::vector<double>>(s, "sensitivity", "values", {}) : o.values;
    if (values.empty()) throw ValidationError("values: empty list");
    std::vector<double> fallback;
    for (double T : {1.0 / 12.0, 0.25, 0.5, 1.0})
        if (T <= l.model.params.grid.back() * (1.0 + 1e-12)) fallback.push_back(T);
    if (fallback.empty()) fallback.push_back(l.model.params.grid.back());
    const auto mats = maturities_of(s, "sensitivity", l.model.params, fallback);
    const auto tags = deltas_of(s, "sensitivity", {"ATM"});

    // cells[value][maturity][delta] in bps
    std::vector<std::vector<std::vector<std::optional<double>>>> cells(
        values.size(), std::vector<std::vector<std::optional<double>>>(mats.size(),
                                                                       std::vector<std::optional<double>>(tags.size())));
    bool partial = false;
    std::string failures;
    for (std::size_t v = 0; v < values.size(); ++v) {
        auto p = l.model.params;
        set_all(p, vary, values[v]);
        p.validate();
        for (std::size_t m = 0; m < mats.size(); ++m) {
            const double T = mats[m];
            try {
                const double fwd = strike_from_delta(DeltaTag::atm, 1.0, flat_market(p, T));
                const auto atm = price_mc(l.spec, p, std::log(fwd), T, cfg);
                const double sigma_ref = vol_of(atm.mean, fwd, p, T);
                for (std::size_t d = 0; d < tags.size(); ++d) {
                    const double K = strike_from_delta(tags[d], sigma_ref, flat_market(p, T));
                    const double mc = tags[d] == DeltaTag::atm ? atm.mean : price_mc(l.spec, p, std::log(K), T, cfg).mean;
                    cells[v][m][d] = 1e4 * (vol_of(approx_price(l, p, K, T, b), K, p, T) - vol_of(mc, K, p, T));
                }
            } catch (const NumericalError& e) {
                partial = true;
                failures += "# failed " + vary + "=" + fmt("%g", values[v]) + " T=" + fmt("%g", T) + ": " + e.what() +
                            "\n";
            }
        }
    }

    const Manifest man("sensitivity", o, l.bytes, "", cfg.seed);
    std::ostringstream csv;
    csv << man.csv_line();
    if (partial) csv << "# partial result\n" << failures;
    csv << "delta,maturity";
    for (double v : values) csv << ',' << vary << '=' << fmt("%g", v);
    csv << '\n';
    std::string plot = "# manifest " + man.hash() + "\n# " + vary + " then one column per maturity (bps)\n";
    for (std::size_t d = 0; d < tags.size(); ++d) {
        for (std::size_t m = 0; m < mats.size(); ++m) {
            csv << to_string(tags[d]) << ',' << fmt("%.10g", mats[m]);
            for (std::size_t v = 0; v < values.size(); ++v)
                csv << ',' << (cells[v][m][d] ? bps_str(*cells[v][m][d]) : std::string("NA"));
            csv << '\n';
        }
        plot += "# delta " + to_string(tags[d]) + "\n";
        for (std::size_t v = 0; v < values.size(); ++v) {
            plot += fmt("%g", values[v]);
            for (std::size_t m = 0; m < mats.size(); ++m)
                plot += " " + (cells[v][m][d] ? bps_str(*cells[v][m][d]) : std::string("nan"));
            plot += "\n";
        }
        plot += "\n\n";
    }
    emit(o, out, csv.str());
    emit_plot(o, plot);
    return partial ? exit_partial_result : exit_ok;
}

IntervalParams interval_params(const json& j, const std::string& sec, IntervalParams fallback) {
    if (!j.is_object()) throw ValidationError(sec + ": expected an object");
    fallback.kappa = get_or<double>(j, sec, "kappa", fallback.kappa);
    fallback.theta = get_or<double>(j, sec, "theta", fallback.theta);
    fallback.lambda = get_or<double>(j, sec, "lambda", fallback.lambda);
    fallback.rho = get_or<double>(j, sec, "rho", fallback.rho);
    return fallback;
}

int cmd_calibrate(const Options& o, std::ostream& out) {
    const auto l = load_config(o.config_path);
    const auto& base = l.model.params;
    const auto s = section(l, "calibration");
    if (o.quotes_path.empty()) throw ValidationError("quotes: --quotes PATH is required");
    const auto quote_bytes = read_file(o.quotes_path, "quotes");
    std::istringstream qs(quote_bytes);
    auto quotes = parse_quotes_csv(qs);
    if (quotes.empty()) throw ValidationError("quotes: no rows");

    auto prob = make_problem(quotes, base.s0, base.v0, base.interval(0));
    auto& g = prob.initial_guess;
    if (g.grid.back() > base.grid.back() * (1.0 + 1e-12))
        throw ValidationError("quotes: maturity beyond the config grid end");
    for (std::size_t i = 0; i < g.intervals(); ++i) {
        // The config supplies the rates and the starting parameters.
        const auto ip = base.at(0.5 * (g.grid[i] + g.grid[i + 1]));
        g.kappa[i] = ip.kappa;
        g.theta[i] = ip.theta;
        g.lambda[i] = ip.lambda;
        g.rho[i] = ip.rho;
        g.r_d[i] = ip.r_d;
        g.r_f[i] = ip.r_f;
    }
    prob.model = l.spec;
    prob.regularization_weight = get_or<double>(s, "calibration", "regularization_weight", prob.regularization_weight);
    prob.global_rho = get_or<bool>(s, "calibration", "global_rho", false);
    prob.max_evals = get_or<int>(s, "calibration", "max_evals", prob.max_evals);
    prob.euler_substeps = get_or<std::size_t>(s, "calibration", "euler_substeps", prob.euler_substeps);
    if (s.contains("bounds")) {
        const auto& bj = s.at("bounds");
        if (!bj.is_object()) throw ValidationError("calibration.bounds: expected an object");
        if (bj.contains("lo")) prob.bounds.lo = interval_params(bj.at("lo"), "calibration.bounds.lo", prob.bounds.lo);
        if (bj.contains("hi")) prob.bounds.hi = interval_params(bj.at("hi"), "calibration.bounds.hi", prob.bounds.hi);
    }
    // Clip the starting point into the box so only genuinely infeasible bounds fail.
    prob.bounds.validate();
    for (std::size_t i = 0; i < g.intervals(); ++i) {
        g.kappa[i] = std::clamp(g.kappa[i], prob.bounds.lo.kappa, prob.bounds.hi.kappa);
        g.theta[i] = std::clamp(g.theta[i], prob.bounds.lo.theta, prob.bounds.hi.theta);
        g.lambda[i] = std::clamp(g.lambda[i], prob.bounds.lo.lambda, prob.bounds.hi.lambda);
        g.rho[i] = std::clamp(g.rho[i], prob.bounds.lo.rho, prob.bounds.hi.rho);
    }

    const auto r = calibrate_bootstrap(prob);
    const Manifest man("calibrate", o, l.bytes, quote_bytes, 0);
    json intervals = json::array();
    for (std::size_t i = 0; i < r.intervals.size(); ++i) {
        const auto& f = r.intervals[i];
        intervals.push_back({{"maturity", r.params.grid[i + 1]},
                             {"converged", f.converged},
                             {"evals", f.evals},
                             {"restarts", f.restarts},
                             {"penalties", f.penalties},
                             {"objective", f.objective},
                             {"rmse_bp", round_to(r.per_maturity_rmse[i], 2)}});
    }
    auto fitted = to_json(r.params, l.model.model);
    json doc = {{"manifest", man.to_json()},   {"params", fitted},
                {"objective_evals", r.objective_evals}, {"martingale_ok", r.martingale_ok},
                {"complete", r.complete()},    {"intervals", intervals}};
    emit(o, out, doc.dump(2) + "\n");
    if (!o.params_out.empty()) {
        std::ofstream f(o.params_out, std::ios::binary);
        if (!f) throw ValidationError("params-out: cannot write '" + o.params_out + "'");
        fitted["manifest"] = man.hash();
        f << fitted.dump(2) << "\n";
    }
    std::string plot = "# manifest " + man.hash() + "\n# maturity rmse_bp\n";
    for (std::size_t i = 0; i < r.intervals.size(); ++i)
        plot += fmt("%.10g", r.params.grid[i + 1]) + " " + bps_str(r.per_maturity_rmse[i]) + "\n";
    emit_plot(o, plot);
    return r.complete() ? exit_ok : exit_partial_result;
}

}  // namespace

std::string git_blob_hash(const std::string& content) {
    boost::uuids::detail::sha1 h;
    const std::string head = "blob " + std::to_string(content.size()) + std::string(1, '\0');
    h.process_bytes(head.data(), head.size());
    h.process_bytes(content.data(), content.size());
    unsigned int d[5];
    h.get_digest(d);
    std::ostringstream ss;
    for (unsigned int w : d) ss << std::hex << std::setw(8) << std::setfill('0') << w;
    return ss.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Second-order expansion pricer for the Verhulst stochastic volatility model"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* c, bool mc) {
        c->add_option("--config", o.config_path, "Model config JSON")->required();
        c->add_option("--out", o.out_path, "Output file (default stdout)");
        c->add_option("--plot", o.plot_path, "Write whitespace-delimited plot data");
        c->add_option("--backend", o.backend, "quadrature|recursion");
        if (mc) {
            c->add_option("--seed", o.seed, "Monte Carlo seed");
            c->add_option("--paths", o.paths, "Monte Carlo paths");
            c->add_option("--steps-per-year", o.steps_per_year, "Monte Carlo time steps per year");
            c->add_option("--estimator", o.estimator, "plain|mixing");
        }
    };
    auto* price = app.add_subcommand("price", "Second-order approximation price");
    common(price, false);
    price->add_option("--maturity", o.maturity, "Maturity in years (default grid end)");
    price->add_option("--strike", o.strike, "Strike");
    price->add_option("--delta", o.delta, "PUT10|PUT25|ATM");

    auto* mcv = app.add_subcommand("mc-validate", "Compare the approximation with both Monte Carlo estimators");
    common(mcv, true);

    auto* sens = app.add_subcommand("sensitivity", "Table of approximation minus Monte Carlo vols in bps");
    common(sens, true);
    sens->add_option("--vary", o.vary, "kappa|theta|lambda|rho");
    sens->add_option("--values", o.values, "Parameter values")->delimiter(',');

    auto* cal = app.add_subcommand("calibrate", "Bootstrap calibration to implied-vol quotes");
    common(cal, false);
    cal->add_option("--quotes", o.quotes_path, "Quotes CSV")->required();
    cal->add_option("--params-out", o.params_out, "Write fitted parameters JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_config_error;
    }

    try {
        if (price->parsed()) return cmd_price(o, out);
        if (mcv->parsed()) return cmd_mc_validate(o, out);
        if (sens->parsed()) return cmd_sensitivity(o, out);
        if (cal->parsed()) return cmd_calibrate(o, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical_failure;
    }
    return exit_config_error;
}

}  // namespace xgbm
