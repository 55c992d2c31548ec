#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace xgbm {

class TimeGrid {
public:
    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> boundaries);

    [[nodiscard]] const std::vector<double>& boundaries() const noexcept { return t_; }
    [[nodiscard]] std::size_t intervals() const noexcept { return t_.empty() ? 0 : t_.size() - 1; }
    [[nodiscard]] double front() const { return t_.front(); }
    [[nodiscard]] double back() const { return t_.back(); }
    [[nodiscard]] double operator[](std::size_t i) const { return t_[i]; }
    [[nodiscard]] double width(std::size_t i) const { return t_[i + 1] - t_[i]; }

    // Interval containing t under the right-open convention; t == back() maps
    // to the last interval.
    [[nodiscard]] std::size_t interval_of(double t) const;

    // Index of the node equal to t (relative tolerance 1e-12), if any.
    [[nodiscard]] std::optional<std::size_t> node_index(double t) const;

    // True when every node of `coarse` is a node of this grid.
    [[nodiscard]] bool refines(const TimeGrid& coarse) const;

    // Each interval split into `substeps` equal pieces.
    [[nodiscard]] TimeGrid subdivided(std::size_t substeps) const;

    // Union of the two node sets within [0, min(back)].
    [[nodiscard]] TimeGrid merged(const TimeGrid& other) const;

private:
    std::vector<double> t_;
};

// Parameters held constant on one interval [T_i, T_{i+1}).
struct IntervalParams {
    double kappa = 0.0;
    double theta = 0.0;
    double lambda = 0.0;
    double rho = 0.0;
    double r_d = 0.0;
    double r_f = 0.0;
};

enum class Validation {
    strict,      // kappa, theta, lambda, v0 > 0
    degenerate,  // allows zeros (deterministic and frozen limits in tests)
};

struct PiecewiseParams {
    TimeGrid grid;
    std::vector<double> kappa, theta, lambda, rho, r_d, r_f;
    double s0 = 100.0;
    double v0 = 0.2;

    // Throws ValidationError naming the offending field.
    void validate(Validation mode = Validation::strict) const;

    [[nodiscard]] std::size_t intervals() const noexcept { return grid.intervals(); }
    [[nodiscard]] IntervalParams interval(std::size_t i) const;
    [[nodiscard]] IntervalParams at(double t) const { return interval(grid.interval_of(t)); }

    // ∫_0^T r_d dt and ∫_0^T r_f dt.
    [[nodiscard]] double integrated_rd(double T) const;
    [[nodiscard]] double integrated_rf(double T) const;

    // Same parameter values on a finer grid.
    [[nodiscard]] PiecewiseParams refined(const TimeGrid& fine) const;

    // Restriction to [0, T], with T inserted as the last node.
    [[nodiscard]] PiecewiseParams truncated(double T) const;

    // Flat parameters on the grid {0, T}.
    [[nodiscard]] static PiecewiseParams flat(double s0, double v0, double T, const IntervalParams& ip);
};

// Coefficients of the closed-form representation on one interval:
// α_x(t, v) = k_const + h·v and α_xx(t, v) = xx_const·v^xx_power.
struct AffineCoefficients {
    double k_const = 0.0;
    double h = 0.0;
    double xx_const = 0.0;
    int xx_power = 0;
};

struct ModelSpec {
    using Fn = std::function<double(const IntervalParams&, double x)>;

    std::string name;
    Fn alpha;
    Fn alpha_x;
    Fn alpha_xx;
    double mu = 1.0;
    std::function<AffineCoefficients(const IntervalParams&)> affine;

    [[nodiscard]] bool has_affine_structure() const noexcept { return static_cast<bool>(affine); }
    [[nodiscard]] double beta(const IntervalParams& ip, double x) const;

    // Throws unless mu ∈ [1/2, 1] and the callbacks are set.
    void validate() const;
};

[[nodiscard]] ModelSpec verhulst_model();
[[nodiscard]] ModelSpec inverse_gamma_model();
// "verhulst" | "inverse_gamma"; throws ValidationError otherwise.
[[nodiscard]] ModelSpec model_by_name(const std::string& name);

enum class DeltaTag { put10, put25, atm };

[[nodiscard]] std::string to_string(DeltaTag tag);
[[nodiscard]] std::optional<DeltaTag> parse_delta_tag(const std::string& s);

struct OptionQuote {
    double maturity = 0.0;
    std::optional<double> strike;
    std::optional<DeltaTag> delta_tag;
    double implied_vol = 0.0;
    double weight = 1.0;
};

struct MartingaleReport {
    bool ok = true;
    std::vector<double> margins;  // ρ_i λ_i − κ_i
};

[[nodiscard]] MartingaleReport check_martingale_condition(const PiecewiseParams& p);

struct ModelConfig {
    PiecewiseParams params;
    std::string model = "verhulst";
};

// Parses the parameter schema; throws ValidationError with the field name.
[[nodiscard]] ModelConfig model_config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const PiecewiseParams& p, const std::string& model);

}  // namespace xgbm
