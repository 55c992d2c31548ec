#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xgbm/black_scholes.hpp"
#include "xgbm/integral_engine.hpp"

namespace xgbm {

enum class Backend { quadrature, recursion };

[[nodiscard]] std::string to_string(Backend b);

// l-function of one factor: coefficient(interval)·v₀^power, or α_xx itself.
enum class LKind { rho_lambda, lambda_sq, unit, alpha_xx };

struct FactorSpec {
    double k_scale = 0.0;  // k = k_scale·α_x
    LKind l = LKind::unit;
    double power = 0.0;    // exponent of v₀ (ignored for alpha_xx)
};

struct AssembledTerm {
    std::string name;
    std::vector<FactorSpec> factors;  // outermost first
    int dx = 0;
    int dy = 0;
    double coefficient = 0.0;
    bool squared = false;
    // Closed-form coefficients; present when the model is affine in v₀ and
    // all powers are integers.
    std::optional<OperatorTerm> closed_form;
};

// The nine operator terms (coefficients {2,1,2,1,2,2μ,2,4,2}).
[[nodiscard]] std::vector<AssembledTerm> assemble_operator_terms(const ModelSpec& m, const PiecewiseParams& p);

// Operator factors sampled on a zeroth-order path, for the quadrature backend.
[[nodiscard]] OperatorFunctions term_functions(const AssembledTerm& term, const ModelSpec& m, const PiecewiseParams& p,
                                               const ZerothPath& zeroth);

struct Correction {
    std::string name;
    double operator_value = 0.0;  // already squared for the ∂xxyy term
    int dx = 0;
    int dy = 0;
    double derivative = 0.0;
    double coefficient = 0.0;
    double contribution = 0.0;
};

struct PriceResult {
    double total = 0.0;
    double base_bs = 0.0;
    double integrated_variance = 0.0;  // ∫_0^T v₀² dt
    std::vector<Correction> corrections;
    Backend backend = Backend::quadrature;
};

struct PricerOptions {
    // Quadrature backend path; defaults to the explicit solution for Verhulst
    // and RK4 otherwise.
    std::optional<ZerothMethod> zeroth;
    std::size_t euler_substeps = default_euler_substeps;
    double rk4_step = 0.0;  // 0 → T/2048
    double quadrature_tol = 1e-15;
};

[[nodiscard]] PriceResult price_second_order_general(const ModelSpec& m, const PiecewiseParams& p, double log_strike,
                                                     double T, Backend backend, const PricerOptions& opt = {});

[[nodiscard]] PriceResult price_second_order_verhulst(const PiecewiseParams& p, double log_strike, double T,
                                                      Backend backend, const PricerOptions& opt = {});

// ============================================================================
// Incremental closed-form state (bootstrap calibration)
// ============================================================================

struct ExpansionState {
    std::vector<OperatorState> terms;  // one per assembled term
    OperatorState variance{1};         // ∫ v₀² dt
    std::size_t index = 0;             // maturity index reached
};

[[nodiscard]] ExpansionState initial_expansion_state(const ModelSpec& m);

// Extends through parameter interval i using the interval-i values of `p`;
// earlier intervals of `p` must match those used to build `state`.
[[nodiscard]] ExpansionState extend_expansion(const ExpansionState& state, const ModelSpec& m,
                                              const PiecewiseParams& p, std::size_t i,
                                              std::size_t substeps = default_euler_substeps);

// Price at T_{state.index}.
[[nodiscard]] PriceResult price_from_state(const ExpansionState& state, const ModelSpec& m, const PiecewiseParams& p,
                                           double log_strike);

}  // namespace xgbm
