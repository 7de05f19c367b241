#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "testagg/core.hpp"

namespace testagg {

// ---------------------------------------------------------------------------
// PRNG: SplitMix64 with counter-based substreams. Stream (seed, id) is a
// pure function of its key, so Monte Carlo sample i and simulated
// individual i draw identical values no matter how work is partitioned
// across threads.
// ---------------------------------------------------------------------------

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static SplitMix64 substream(std::uint64_t seed, std::uint64_t id) {
        return SplitMix64(mix64(seed ^ mix64(id + 0x9e3779b97f4a7c15ULL)));
    }

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        return mix64(z);
    }

    // uniform on [0,1)
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform on (0,1], safe under log()
    double uniform_pos() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    double normal() {
        // Box-Muller; the sine branch is discarded to keep the stream layout
        // independent of call parity.
        const double u1 = uniform_pos();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Marsaglia-Tsang for shape >= 1, boosted for shape < 1.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Beta distribution.
// ---------------------------------------------------------------------------

struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;

    void validate() const {
        if (!(alpha > 0.0) || !(beta > 0.0))
            throw ValidationError("beta shape parameters must be positive");
    }
};

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz).
inline double beta_cont_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(alpha, beta) == CDF of Beta(alpha, beta).
inline double beta_cdf(double x, const BetaParams& p) {
    p.validate();
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = p.alpha, b = p.beta;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                            std::lgamma(b) + a * std::log(x) +
                            b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_cont_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_cont_fraction(b, a, 1.0 - x) / b;
}

inline Rate beta_cdf(Rate x, const BetaParams& p) {
    return Rate(beta_cdf(x.value(), p));
}

// Ratio of two gamma draws; stable across the full shape range we fit.
inline double sample_beta(SplitMix64& rng, const BetaParams& p) {
    p.validate();
    const double x = rng.gamma(p.alpha);
    const double y = rng.gamma(p.beta);
    if (x + y <= 0.0) return 0.5;  // both underflowed; vanishing probability
    return x / (x + y);
}

// ---------------------------------------------------------------------------
// Nelder-Mead simplex (2-D), minimizing in (log alpha, log beta) space.
// ---------------------------------------------------------------------------

namespace detail {

template <typename F>
std::array<double, 2> nelder_mead_2d(F&& f, std::array<double, 2> start,
                                     double step, int max_iter, double ftol) {
    struct Vertex {
        std::array<double, 2> x;
        double fx;
    };
    std::array<Vertex, 3> s;
    s[0] = {start, f(start)};
    for (int i = 0; i < 2; ++i) {
        auto x = start;
        x[i] += step;
        s[i + 1] = {x, f(x)};
    }
    const auto by_value = [](const Vertex& a, const Vertex& b) {
        return a.fx < b.fx;
    };
    for (int iter = 0; iter < max_iter; ++iter) {
        std::sort(s.begin(), s.end(), by_value);
        if (std::fabs(s[2].fx - s[0].fx) <=
            ftol * (std::fabs(s[0].fx) + std::fabs(s[2].fx)) + 1e-300)
            break;
        const std::array<double, 2> centroid = {
            0.5 * (s[0].x[0] + s[1].x[0]), 0.5 * (s[0].x[1] + s[1].x[1])};
        const auto blend = [&](double coef) {
            return std::array<double, 2>{
                centroid[0] + coef * (centroid[0] - s[2].x[0]),
                centroid[1] + coef * (centroid[1] - s[2].x[1])};
        };
        const auto reflected = blend(1.0);
        const double fr = f(reflected);
        if (fr < s[0].fx) {
            const auto expanded = blend(2.0);
            const double fe = f(expanded);
            s[2] = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
        } else if (fr < s[1].fx) {
            s[2] = {reflected, fr};
        } else {
            const auto contracted = blend(fr < s[2].fx ? 0.5 : -0.5);
            const double fc = f(contracted);
            if (fc < std::min(fr, s[2].fx)) {
                s[2] = {contracted, fc};
            } else {
                // shrink toward the best vertex
                for (int i = 1; i < 3; ++i) {
                    for (int d = 0; d < 2; ++d)
                        s[i].x[d] = s[0].x[d] + 0.5 * (s[i].x[d] - s[0].x[d]);
                    s[i].fx = f(s[i].x);
                }
            }
        }
    }
    std::sort(s.begin(), s.end(), by_value);
    return s[0].x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Quantile fit: find Beta(alpha, beta) whose CDF passes through the
// empirical (2.5%, 50%, 97.5%) quantiles. Targets sitting exactly on 0 or 1
// are nudged 1e-6 inward first (a beta CDF cannot place interior quantile
// levels at the boundary); such boundary-origin targets stay in the
// objective but are excluded from the goodness-of-fit check, which no beta
// could pass for them.
// ---------------------------------------------------------------------------

inline constexpr std::array<double, 3> kFitQuantiles = {0.025, 0.5, 0.975};

struct BetaFit {
    BetaParams params;
    double residual = 0.0;           // SSQ over all three targets
    double interior_residual = 0.0;  // SSQ over targets not at a boundary
};

inline BetaFit fit_beta_detailed(Rate median, Rate lo, Rate hi) {
    const double raw[3] = {lo.value(), median.value(), hi.value()};
    if (!(raw[0] <= raw[1] && raw[1] <= raw[2]))
        throw ValidationError("quantile targets must satisfy lo <= median <= hi");
    if (raw[0] == raw[2])
        throw NumericError(
            "degenerate (zero-width) interval cannot be fitted; treat the "
            "rate as exact");

    constexpr double kNudge = 1e-6;
    double x[3];
    bool interior[3];
    for (int i = 0; i < 3; ++i) {
        interior[i] = raw[i] > 0.0 && raw[i] < 1.0;
        x[i] = std::clamp(raw[i], kNudge, 1.0 - kNudge);
    }

    const auto objective = [&](std::array<double, 2> log_ab) {
        // cap the exponent range so the optimizer cannot wander into overflow
        const double a = std::exp(std::clamp(log_ab[0], -30.0, 30.0));
        const double b = std::exp(std::clamp(log_ab[1], -30.0, 30.0));
        double ssq = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double d = beta_cdf(x[i], BetaParams{a, b}) - kFitQuantiles[i];
            ssq += d * d;
        }
        return ssq;
    };

    // moment-matched start: mean ~ median, sd ~ CI width / 3.92
    const double m = std::clamp(x[1], 1e-4, 1.0 - 1e-4);
    const double sd = std::max((x[2] - x[0]) / 3.92, 1e-4);
    const double nu = std::max(m * (1.0 - m) / (sd * sd) - 1.0, 0.5);

    BetaFit best;
    double best_obj = -1.0;
    for (const double scale : {1.0, 2.718281828459045, 0.36787944117144233}) {
        const std::array<double, 2> start = {
            std::log(std::max(m * nu * scale, 1e-3)),
            std::log(std::max((1.0 - m) * nu * scale, 1e-3))};
        const auto log_ab =
            detail::nelder_mead_2d(objective, start, 0.25, 2000, 1e-12);
        const double obj = objective(log_ab);
        if (best_obj < 0.0 || obj < best_obj) {
            best_obj = obj;
            best.params = {std::exp(std::clamp(log_ab[0], -30.0, 30.0)),
                           std::exp(std::clamp(log_ab[1], -30.0, 30.0))};
        }
    }

    best.residual = 0.0;
    best.interior_residual = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d =
            beta_cdf(x[i], best.params) - kFitQuantiles[i];
        best.residual += d * d;
        if (interior[i]) best.interior_residual += d * d;
    }
    if (best.interior_residual > 1e-2)
        throw NumericError(
            "beta quantile fit failed: interior residual " +
            std::to_string(best.interior_residual) + " after restarts");
    return best;
}

inline BetaParams fit_beta(Rate median, Rate lo, Rate hi) {
    return fit_beta_detailed(median, lo, hi).params;
}

// ---------------------------------------------------------------------------
// Monte Carlo propagation.
// ---------------------------------------------------------------------------

struct MonteCarloConfig {
    long long n_samples = 1'000'000;
    std::uint64_t seed = 0;
    std::array<double, 3> quantiles = kFitQuantiles;
    unsigned threads = 0;  // 0 = hardware concurrency; results do not depend on it

    void validate() const {
        if (n_samples < 1)
            throw ValidationError("n_samples must be >= 1");
    }
};

// Empirical quantile with linear interpolation between order statistics
// (same convention as numpy's default). `sorted` must be ascending.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ValidationError("quantile of empty sample");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto idx = static_cast<std::size_t>(h);
    if (idx + 1 >= sorted.size()) return sorted.back();
    if (sorted[idx] == sorted[idx + 1]) return sorted[idx];
    const double frac = h - static_cast<double>(idx);
    return sorted[idx] + frac * (sorted[idx + 1] - sorted[idx]);
}

namespace detail {

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(begin, end) over a partition of [0, total) on `threads` workers.
// Partitioning must not affect results; callers key all randomness by the
// global element index. The first worker exception is rethrown here.
template <typename F>
void parallel_ranges(long long total, unsigned threads, F&& fn) {
    threads = resolve_threads(threads);
    const long long want =
        std::min<long long>(threads, std::max<long long>(total, 1));
    if (want <= 1) {
        fn(0, total);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(want));
    const long long chunk = (total + want - 1) / want;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (long long t = 0; t < want; ++t) {
        const long long begin = t * chunk;
        const long long end = std::min(total, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

// One sampled input per CI-bearing RateEstimate; exact rates stay fixed at
// their medians. The estimator sees the draws in input order and may reject
// a sample (nullopt), in which case the same per-sample stream is drawn
// again. Returns the configured empirical quantiles.
struct PropagationResult {
    RateEstimate estimate;
    long long rejected_draws = 0;  // redraws forced by estimator rejection
};

inline PropagationResult propagate_ci_detailed(
    std::span<const RateEstimate> inputs,
    const std::function<std::optional<double>(std::span<const double>)>&
        estimator,
    const MonteCarloConfig& mc) {
    mc.validate();
    constexpr int kMaxRedraws = 100;

    struct InputModel {
        double fixed = 0.0;
        std::optional<BetaParams> dist;
    };
    std::vector<InputModel> models;
    models.reserve(inputs.size());
    for (const auto& in : inputs) {
        in.validate();
        InputModel m;
        m.fixed = in.median.value();
        if (in.has_nondegenerate_ci())
            m.dist = fit_beta(in.median, *in.ci_low, *in.ci_high);
        models.push_back(m);
    }

    std::vector<double> samples(static_cast<std::size_t>(mc.n_samples));
    std::atomic<long long> rejected_count{0};

    detail::parallel_ranges(mc.n_samples, mc.threads, [&](long long begin,
                                                          long long end) {
        std::vector<double> draws(models.size());
        long long rejected = 0;
        for (long long i = begin; i < end; ++i) {
            auto rng = SplitMix64::substream(mc.seed, static_cast<std::uint64_t>(i));
            std::optional<double> value;
            for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
                for (std::size_t k = 0; k < models.size(); ++k)
                    draws[k] = models[k].dist
                                   ? sample_beta(rng, *models[k].dist)
                                   : models[k].fixed;
                value = estimator(draws);
                if (value.has_value()) break;
                ++rejected;
            }
            if (!value.has_value())
                throw NumericError(
                    "Monte Carlo sample rejected " +
                    std::to_string(kMaxRedraws) +
                    " times; estimator domain too small");
            samples[static_cast<std::size_t>(i)] = *value;
        }
        rejected_count.fetch_add(rejected, std::memory_order_relaxed);
    });

    const long long rejected_total = rejected_count.load();
    if (rejected_total > mc.n_samples / 100)
        throw NumericError("Monte Carlo rejection rate above 1% (" +
                           std::to_string(rejected_total) + " redraws)");

    std::sort(samples.begin(), samples.end());
    PropagationResult result;
    result.rejected_draws = rejected_total;
    result.estimate = RateEstimate(
        Rate::clamped(quantile_sorted(samples, mc.quantiles[1])),
        Rate::clamped(quantile_sorted(samples, mc.quantiles[0])),
        Rate::clamped(quantile_sorted(samples, mc.quantiles[2])));
    return result;
}

inline RateEstimate propagate_ci(
    std::span<const RateEstimate> inputs,
    const std::function<std::optional<double>(std::span<const double>)>&
        estimator,
    const MonteCarloConfig& mc) {
    return propagate_ci_detailed(inputs, estimator, mc).estimate;
}

}  // namespace testagg
