#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "xgbm/market_model.hpp"

namespace xgbm {

// Philox4x32-10 (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    [[nodiscard]] static Counter generate(Counter ctr, Key key) noexcept;
};

// Two independent standard normals for (seed, path, step).
struct NormalPair {
    double z_b = 0.0;  // drives the volatility Brownian motion B
    double z_z = 0.0;  // independent component of the spot Brownian motion
};
[[nodiscard]] NormalPair normals_at(std::uint64_t seed, std::uint64_t path, std::uint64_t step) noexcept;

enum class Estimator { plain, mixing };
enum class VolScheme { automatic, exact, euler };

struct McConfig {
    std::uint64_t n_paths = 100000;
    std::uint64_t steps_per_year = 250;
    std::uint64_t seed = 1;
    Estimator estimator = Estimator::mixing;
    bool antithetic = false;
    VolScheme vol_scheme = VolScheme::automatic;  // exact for Verhulst
    unsigned threads = 0;                         // 0 → hardware concurrency

    void validate() const;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n_paths = 0;
};

// Step times on [0, T]: each parameter interval split into
// max(1, ceil(ΔT·steps_per_year)) equal steps.
[[nodiscard]] std::vector<double> step_grid(const PiecewiseParams& p, double T, std::uint64_t steps_per_year);

// ΔB per step for one path (antithetic pairs are the caller's concern).
[[nodiscard]] std::vector<double> brownian_increments(const std::vector<double>& times, std::uint64_t seed,
                                                      std::uint64_t path);

// V on `times` from the explicit solution Y = F/(1/v₀ + ∫κF du), trapezoid in time.
[[nodiscard]] std::vector<double> verhulst_exact_path(const PiecewiseParams& p, const std::vector<double>& times,
                                                      const std::vector<double>& dB);
// Euler scheme for dV = α dt + λV^μ dB, absorbed at 0.
[[nodiscard]] std::vector<double> euler_vol_path(const ModelSpec& m, const PiecewiseParams& p,
                                                 const std::vector<double>& times, const std::vector<double>& dB);

// Volatility path on the step grid of maturity p.grid.back().
[[nodiscard]] std::vector<double> simulate_verhulst_exact(const PiecewiseParams& p, const McConfig& cfg,
                                                          std::uint64_t path_index);

[[nodiscard]] McEstimate price_mixing_mc(const PiecewiseParams& p, double log_strike, double T, const McConfig& cfg);
[[nodiscard]] McEstimate price_mixing_mc(const ModelSpec& m, const PiecewiseParams& p, double log_strike, double T,
                                         const McConfig& cfg);
[[nodiscard]] McEstimate price_plain_mc(const PiecewiseParams& p, double log_strike, double T, const McConfig& cfg);
[[nodiscard]] McEstimate price_plain_mc(const ModelSpec& m, const PiecewiseParams& p, double log_strike, double T,
                                        const McConfig& cfg);

// Dispatches on cfg.estimator.
[[nodiscard]] McEstimate price_mc(const ModelSpec& m, const PiecewiseParams& p, double log_strike, double T,
                                  const McConfig& cfg);

// E[e^{-∫(r_d - r_f)} S_T] / S₀ under the plain Euler scheme.
[[nodiscard]] McEstimate forward_ratio_mc(const ModelSpec& m, const PiecewiseParams& p, double T, const McConfig& cfg);

}  // namespace xgbm
