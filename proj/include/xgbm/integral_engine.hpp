#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "xgbm/zeroth_order.hpp"

namespace xgbm {

// One factor (k + h·v₀, l·v₀^q) with per-interval coefficients on the
// parameter grid.
struct OperatorFactor {
    std::vector<double> k_const;
    std::vector<double> h;
    std::vector<double> l_const;
    int q = 0;
};

// Factors ordered outermost first: ω^{(k⁽ⁿ⁾,l⁽ⁿ⁾),…,(k⁽¹⁾,l⁽¹⁾)}.
struct OperatorTerm {
    std::vector<OperatorFactor> factors;

    void validate(std::size_t intervals) const;
};

// ============================================================================
// Quadrature on arbitrary integrands
// ============================================================================

struct FactorFunctions {
    std::function<double(double)> k;
    std::function<double(double)> l;
};

struct OperatorFunctions {
    std::vector<FactorFunctions> factors;  // outermost first
    std::vector<double> breakpoints;       // times where k or l may be non-smooth
};

// Samples `term` against a zeroth-order path: k = k_const + h·v₀ (with the
// path's exponent convention) and l = l_const·v₀^q. Breakpoints are the path
// grid nodes.
[[nodiscard]] OperatorFunctions as_functions(const OperatorTerm& term, const ZerothPath& zeroth);

struct QuadratureOptions {
    double tol = 1e-12;
    int max_refinements = 12;
};

// ω_{t0,T} with inner exponentials ∫_0^u k. Piecewise Clenshaw–Curtis panels
// between breakpoints, bisected until two successive estimates agree to tol.
// Throws AccuracyError (carrying the best estimate) when refinement runs out.
[[nodiscard]] double eval_quadrature(const OperatorFunctions& term, double t0, double T,
                                     const QuadratureOptions& opt = {});

// ============================================================================
// Closed forms on one interval of width ΔT
// ============================================================================

struct PhiFactor {
    double rate = 0.0;  // k̃ = k + h·v₀ at the left node
    int p = 0;          // power of γ
};

constexpr double phi_zero_threshold = 1e-12;

// ∫_t^{T_{i+1}} γ^p e^{k̃ ΔT γ} du with γ = γ(t).
[[nodiscard]] double phi(double rate, int p, double dt, double gamma);

// n-fold form, factors outermost first:
//   φ_n(f, γ) = ∫_{γΔT}^{ΔT} (u/ΔT)^{p₁} e^{k̃₁u} φ_{n-1}(rest, u/ΔT) du.
// Uses the exact case recursion, which divides by k̃ and loses relative
// accuracy when |k̃ΔT| is small but above the zero threshold. The maturity
// extension below uses series-stabilized step integrals instead.
[[nodiscard]] double phi_n(std::span<const PhiFactor> factors, double dt, double gamma);

// ============================================================================
// Maturity-extension recursion
// ============================================================================

class OperatorState {
public:
    // State at T_0 = 0 for an operator with n factors.
    explicit OperatorState(std::size_t n_factors);

    [[nodiscard]] std::size_t maturity_index() const noexcept { return index_; }
    [[nodiscard]] std::size_t size() const noexcept { return log_e_.size(); }

    // ω_{0,T_i} of the full operator.
    [[nodiscard]] double value() const { return head_.back(); }

    // ω_{0,T_i} of the outermost `len` factors (len = 0 gives 1).
    [[nodiscard]] double head(std::size_t len) const { return head_.at(len); }

    // Head values recorded at each completed maturity index.
    [[nodiscard]] const std::vector<std::vector<double>>& value_at() const noexcept { return history_; }

    // Per-factor e_{T_i} (from k_const) and e_{v,T_i} (from h·v₀).
    [[nodiscard]] double e(std::size_t j) const;
    [[nodiscard]] double e_v(std::size_t j) const;

    friend OperatorState extend_to_next_maturity(const OperatorState& state, const OperatorTerm& term, std::size_t i,
                                                 const ZerothPath& zeroth);

private:
    std::size_t index_ = 0;
    std::vector<double> head_;   // head_[0] = 1
    std::vector<double> log_e_;  // ∫_0^{T_i} k_const
    std::vector<double> log_ev_; // Σ ΔT v₀,left·h
    std::vector<std::vector<double>> history_;
};

// Advances `state` from T_i to T_{i+1} over the fine nodes of `zeroth` (an
// EULER_PW path whose parameter grid carries T_i). Interval-i coefficients of
// `term` are used throughout.
[[nodiscard]] OperatorState extend_to_next_maturity(const OperatorState& state, const OperatorTerm& term,
                                                    std::size_t i, const ZerothPath& zeroth);

// Runs the recursion from 0 through parameter interval `last`.
[[nodiscard]] OperatorState eval_recursion(const OperatorTerm& term, const ZerothPath& zeroth, std::size_t last);

}  // namespace xgbm
