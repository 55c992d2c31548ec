#include "xgbm/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "xgbm/black_scholes.hpp"
#include "xgbm/errors.hpp"

namespace xgbm {

// ============================================================================
// Philox4x32-10
// ============================================================================

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) noexcept {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += w0;
        k[1] += w1;
    }
    return c;
}

namespace {
// Uniform in (0, 1) from 64 random bits.
double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}
}  // namespace

NormalPair normals_at(std::uint64_t seed, std::uint64_t path, std::uint64_t step) noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                  static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const auto r = Philox4x32::generate(ctr, key);
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

void McConfig::validate() const {
    if (n_paths < 2) throw ValidationError("paths: need at least 2 paths");
    if (steps_per_year < 1) throw ValidationError("steps_per_year: must be >= 1");
    if (antithetic && n_paths % 2 != 0) throw ValidationError("paths: antithetic sampling needs an even path count");
}

// ============================================================================
// Paths
// ============================================================================

std::vector<double> step_grid(const PiecewiseParams& p, double T, std::uint64_t steps_per_year) {
    const auto q = p.truncated(T);
    std::vector<double> t{0.0};
    for (std::size_t i = 0; i < q.intervals(); ++i) {
        const double w = q.grid.width(i);
        const auto n = static_cast<std::size_t>(
            std::max(1.0, std::ceil(w * static_cast<double>(steps_per_year) - 1e-9)));
        for (std::size_t j = 1; j < n; ++j) t.push_back(q.grid[i] + w * static_cast<double>(j) / static_cast<double>(n));
        t.push_back(q.grid[i + 1]);
    }
    return t;
}

std::vector<double> brownian_increments(const std::vector<double>& times, std::uint64_t seed, std::uint64_t path) {
    std::vector<double> dB(times.size() - 1);
    for (std::size_t s = 0; s + 1 < times.size(); ++s)
        dB[s] = std::sqrt(times[s + 1] - times[s]) * normals_at(seed, path, s).z_b;
    return dB;
}

std::vector<double> verhulst_exact_path(const PiecewiseParams& p, const std::vector<double>& times,
                                        const std::vector<double>& dB) {
    std::vector<double> v(times.size());
    v[0] = p.v0;
    double logF = 0.0, F = 1.0, I = 0.0;
    for (std::size_t s = 0; s + 1 < times.size(); ++s) {
        const double dt = times[s + 1] - times[s];
        const auto ip = p.at(0.5 * (times[s] + times[s + 1]));
        logF += (ip.kappa * ip.theta - 0.5 * ip.lambda * ip.lambda) * dt + ip.lambda * dB[s];
        const double Fn = std::exp(logF);
        I += 0.5 * ip.kappa * (F + Fn) * dt;
        F = Fn;
        v[s + 1] = F / (1.0 / p.v0 + I);
    }
    return v;
}

std::vector<double> euler_vol_path(const ModelSpec& m, const PiecewiseParams& p, const std::vector<double>& times,
                                   const std::vector<double>& dB) {
    std::vector<double> v(times.size());
    v[0] = p.v0;
    for (std::size_t s = 0; s + 1 < times.size(); ++s) {
        const double dt = times[s + 1] - times[s];
        const auto ip = p.at(0.5 * (times[s] + times[s + 1]));
        const double x = v[s];
        v[s + 1] = std::max(0.0, x + m.alpha(ip, x) * dt + m.beta(ip, x) * dB[s]);
    }
    return v;
}

std::vector<double> simulate_verhulst_exact(const PiecewiseParams& p, const McConfig& cfg, std::uint64_t path_index) {
    const auto times = step_grid(p, p.grid.back(), cfg.steps_per_year);
    return verhulst_exact_path(p, times, brownian_increments(times, cfg.seed, path_index));
}

namespace {

struct StepData {
    double dt, sdt, kappa, theta, lambda, rho, rho_c;
    // ρ inside the mixing sums. With λ = 0 on a step, V does not depend on
    // that step's ΔB, so its Gaussian contribution is integrated out exactly.
    double rho_mix;
};

struct PathSums {
    double rho_v_db = 0.0;    // ∫ρV dB
    double rho2_v2 = 0.0;     // ∫ρ²V² dt
    double comp_v2 = 0.0;     // ∫(1-ρ²)V² dt
    double x_T = 0.0;         // Euler log-spot at T
};

class PathEngine {
public:
    PathEngine(const ModelSpec& m, const PiecewiseParams& p, double T, const McConfig& cfg)
        : model_(m), p_(p), cfg_(cfg) {
        p.validate(Validation::degenerate);
        cfg.validate();
        if (!(T > 0.0)) throw ValidationError("T: maturity must be > 0");
        exact_ = cfg.vol_scheme == VolScheme::exact ||
                 (cfg.vol_scheme == VolScheme::automatic && m.name == "verhulst");
        if (exact_ && m.name != "verhulst") throw ValidationError("vol_scheme: exact simulation exists for Verhulst only");
        const auto t = step_grid(p, T, cfg.steps_per_year);
        for (std::size_t s = 0; s + 1 < t.size(); ++s) {
            const auto ip = p.at(0.5 * (t[s] + t[s + 1]));
            const double dt = t[s + 1] - t[s];
            steps_.push_back({dt, std::sqrt(dt), ip.kappa, ip.theta, ip.lambda, ip.rho,
                              std::sqrt(std::max(0.0, 1.0 - ip.rho * ip.rho)), ip.lambda == 0.0 ? 0.0 : ip.rho});
            drift_.push_back((ip.r_d - ip.r_f) * dt);
        }
        x0_ = std::log(p.s0);
    }

    PathSums run(std::uint64_t path, double sign) const {
        PathSums out;
        double v = p_.v0;
        double logF = 0.0, F = 1.0, I = 0.0;
        double x = x0_;
        for (std::size_t s = 0; s < steps_.size(); ++s) {
            const auto& st = steps_[s];
            const auto z = normals_at(cfg_.seed, path, s);
            const double dB = sign * z.z_b * st.sdt;
            const double dZ = sign * z.z_z * st.sdt;
            const double v2dt = v * v * st.dt;
            out.rho_v_db += st.rho_mix * v * dB;
            out.rho2_v2 += st.rho_mix * st.rho_mix * v2dt;
            out.comp_v2 += (1.0 - st.rho_mix * st.rho_mix) * v2dt;
            x += drift_[s] - 0.5 * v2dt + v * (st.rho * dB + st.rho_c * dZ);
            if (exact_) {
                logF += (st.kappa * st.theta - 0.5 * st.lambda * st.lambda) * st.dt + st.lambda * dB;
                const double Fn = std::exp(logF);
                I += 0.5 * st.kappa * (F + Fn) * st.dt;
                F = Fn;
                v = F / (1.0 / p_.v0 + I);
            } else {
                const IntervalParams ip{st.kappa, st.theta, st.lambda, st.rho, 0.0, 0.0};
                v = std::max(0.0, v + model_.alpha(ip, v) * st.dt + model_.beta(ip, v) * dB);
            }
        }
        out.x_T = x;
        return out;
    }

private:
    const ModelSpec& model_;
    const PiecewiseParams& p_;
    McConfig cfg_;
    bool exact_ = true;
    std::vector<StepData> steps_;
    std::vector<double> drift_;
    double x0_ = 0.0;
};

// Shifted sums over fixed-size blocks, combined in block order, so the result
// is independent of the number of workers.
template <class Sample>
McEstimate accumulate(const McConfig& cfg, const Sample& sample) {
    const std::uint64_t units = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
    auto unit_value = [&](std::uint64_t u) {
        if (!cfg.antithetic) return sample(u, 1.0);
        return 0.5 * (sample(u, 1.0) + sample(u, -1.0));
    };
    const double ref = unit_value(0);
    constexpr std::uint64_t block = 1024;
    const std::uint64_t blocks = (units + block - 1) / block;
    std::vector<double> s1(blocks), s2(blocks);
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t b = next++; b < blocks; b = next++) {
            double a = 0.0, q = 0.0;
            const std::uint64_t end = std::min(units, (b + 1) * block);
            for (std::uint64_t u = b * block; u < end; ++u) {
                const double d = unit_value(u) - ref;
                a += d;
                q += d * d;
            }
            s1[b] = a;
            s2[b] = q;
        }
    };
    unsigned nt = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    nt = static_cast<unsigned>(std::min<std::uint64_t>(nt, blocks));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    // Kahan over block partials.
    double sum = 0.0, c = 0.0, sq = 0.0, cq = 0.0;
    for (std::uint64_t b = 0; b < blocks; ++b) {
        double y = s1[b] - c, t = sum + y;
        c = (t - sum) - y;
        sum = t;
        y = s2[b] - cq;
        t = sq + y;
        cq = (t - sq) - y;
        sq = t;
    }
    const double n = static_cast<double>(units);
    const double mean_shift = sum / n;
    const double var = std::max(0.0, (sq - sum * mean_shift) / (n - 1.0));
    return {ref + mean_shift, std::sqrt(var / n), cfg.n_paths};
}

}  // namespace

McEstimate price_mixing_mc(const ModelSpec& m, const PiecewiseParams& p, double log_strike, double T,
                           const McConfig& cfg) {
    const PathEngine eng(m, p, T, cfg);
    const double rd = p.integrated_rd(T), rf = p.integrated_rf(T), x0 = std::log(p.s0);
    return accumulate(cfg, [&](std::uint64_t path, double sign) {
        const auto s = eng.run(path, sign);
        return put_price({x0 - 0.5 * s.rho2_v2 + s.rho_v_db, s.comp_v2, log_strike, rd, rf});
    });
}

McEstimate price_mixing_mc(const PiecewiseParams& p, double log_strike, double T, const McConfig& cfg) {
    return price_mixing_mc(verhulst_model(), p, log_strike, T, cfg);
}

McEstimate price_plain_mc(const ModelSpec& m, const PiecewiseParams& p, double log_strike, double T,
                          const McConfig& cfg) {
    const PathEngine eng(m, p, T, cfg);
    const double disc = std::exp(-p.integrated_rd(T));
    const double K = std::exp(log_strike);
    return accumulate(cfg, [&](std::uint64_t path, double sign) {
        const auto s = eng.run(path, sign);
        return disc * std::max(K - std::exp(s.x_T), 0.0);
    });
}

McEstimate price_plain_mc(const PiecewiseParams& p, double log_strike, double T, const McConfig& cfg) {
    return price_plain_mc(verhulst_model(), p, log_strike, T, cfg);
}

McEstimate price_mc(const ModelSpec& m, const PiecewiseParams& p, double log_strike, double T, const McConfig& cfg) {
    return cfg.estimator == Estimator::mixing ? price_mixing_mc(m, p, log_strike, T, cfg)
                                              : price_plain_mc(m, p, log_strike, T, cfg);
}

McEstimate forward_ratio_mc(const ModelSpec& m, const PiecewiseParams& p, double T, const McConfig& cfg) {
    const PathEngine eng(m, p, T, cfg);
    const double carry = p.integrated_rd(T) - p.integrated_rf(T);
    return accumulate(cfg, [&](std::uint64_t path, double sign) {
        const auto s = eng.run(path, sign);
        return std::exp(s.x_T - carry) / p.s0;
    });
}

}  // namespace xgbm
