#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "xgbm/market_model.hpp"
#include "xgbm/pricer.hpp"

namespace xgbm {

// Box constraints on (kappa, theta, lambda, rho); rates are not calibrated.
struct ParamBounds {
    IntervalParams lo{0.1, 0.01, 0.01, -0.99, 0.0, 0.0};
    IntervalParams hi{20.0, 1.0, 3.0, 0.99, 0.0, 0.0};

    void validate() const;
};

struct CalibrationProblem {
    std::vector<OptionQuote> quotes;
    // Grid nodes must be exactly the distinct quote maturities; rates, s0 and
    // v0 are taken as given.
    PiecewiseParams initial_guess;
    ParamBounds bounds;
    double regularization_weight = 1e-4;
    bool global_rho = false;
    ModelSpec model = verhulst_model();
    std::size_t euler_substeps = default_euler_substeps;
    int max_evals = 500;

    void validate() const;
};

// Builds the grid {0, T_1, ..., T_N} from the quote maturities.
[[nodiscard]] CalibrationProblem make_problem(std::vector<OptionQuote> quotes, double s0, double v0,
                                              const IntervalParams& guess);

struct IntervalFit {
    bool converged = false;
    int evals = 0;
    int restarts = 0;
    int penalties = 0;  // evaluations where a model price left the no-arbitrage bounds
    double objective = 0.0;
    std::vector<double> trace;  // best objective after each optimizer iteration
};

struct CalibrationResult {
    PiecewiseParams params;
    std::vector<double> per_maturity_rmse;  // implied-vol RMSE in bps
    int objective_evals = 0;
    bool martingale_ok = false;
    std::vector<IntervalFit> intervals;

    [[nodiscard]] bool complete() const;
};

// Quote with its strike resolved (delta tags use the quote's own vol).
struct ResolvedQuote {
    double strike = 0.0;
    double implied_vol = 0.0;
    double weight = 1.0;
};

[[nodiscard]] std::vector<ResolvedQuote> resolve_quotes(const PiecewiseParams& p, double T,
                                                        const std::vector<OptionQuote>& quotes);

// Model implied vols at T_{state.index} for the given strikes.
[[nodiscard]] std::vector<double> model_vols(const ExpansionState& state, const ModelSpec& m, const PiecewiseParams& p,
                                             const std::vector<double>& strikes);

struct ObjectiveValue {
    double value = 0.0;
    bool penalized = false;
};

constexpr double objective_penalty = 1.0;

// Per-coordinate scales for the regularization norm: the weighted RMS
// implied-vol sensitivity sqrt(Σ_q w_q (∂σ_q/∂x_j)²) at the anchor, so a
// parameter move is priced by the vol change it causes.
using ParamScales = std::array<double, 4>;
[[nodiscard]] ParamScales regularization_scales(const CalibrationProblem& prob, const PiecewiseParams& params,
                                                const ExpansionState& frozen, std::size_t i,
                                                const std::vector<ResolvedQuote>& quotes, const IntervalParams& anchor);

// Σ w_q(σ_model − σ_q)² + weight·Σ_j (scale_j·(x_j − anchor_j))² for interval i,
// with `params` carrying the candidate on interval i and frozen values before
// it. `frozen` must be complete through T_i.
[[nodiscard]] ObjectiveValue objective(const CalibrationProblem& prob, const PiecewiseParams& params,
                                       const ExpansionState& frozen, std::size_t i,
                                       const std::vector<ResolvedQuote>& quotes, const IntervalParams& anchor,
                                       const ParamScales& scales);

// Same objective with the expansion state rebuilt from t = 0.
[[nodiscard]] ObjectiveValue objective_from_scratch(const CalibrationProblem& prob, const PiecewiseParams& params,
                                                    std::size_t i, const std::vector<ResolvedQuote>& quotes,
                                                    const IntervalParams& anchor, const ParamScales& scales);

[[nodiscard]] CalibrationResult calibrate_bootstrap(const CalibrationProblem& prob);

// CSV with header maturity,delta_tag_or_strike,implied_vol[,weight].
// Throws ValidationError carrying the line number.
[[nodiscard]] std::vector<OptionQuote> parse_quotes_csv(std::istream& in);

}  // namespace xgbm
