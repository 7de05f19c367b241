#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "testagg/aggregation.hpp"
#include "testagg/core.hpp"
#include "testagg/uncertainty.hpp"

namespace testagg {

// ---------------------------------------------------------------------------
// Aggregation-aware prevalence correction and outbreak severity ratios.
// ---------------------------------------------------------------------------

// Minimum Youden index (TPR_S + TNR_S - 1) below which the correction
// divides by a vanishing quantity; such Monte Carlo draws are redrawn.
inline constexpr double kMinYouden = 1e-9;

struct StratumRecord {
    std::string label;  // e.g. an age interval
    long long population = 0;
    std::optional<long long> deaths;            // cumulative, if recorded
    std::optional<long long> hospitalizations;  // cumulative, if recorded
    RateEstimate apparent;  // measured prevalence under the aggregate protocol

    void validate() const {
        if (label.empty()) throw ValidationError("stratum label is empty");
        if (population < 0)
            throw ValidationError("stratum population must be non-negative");
        if (deaths && (*deaths < 0 || *deaths > population))
            throw ValidationError("stratum deaths outside [0, population]");
        if (hospitalizations &&
            (*hospitalizations < 0 || *hospitalizations > population))
            throw ValidationError(
                "stratum hospitalizations outside [0, population]");
        apparent.validate();
    }
};

struct PrevalenceResult {
    RateEstimate apparent;
    RateEstimate corrected;
    bool clamped = false;        // some raw estimate fell outside [0,1]
    double clamp_fraction = 0.0; // share of Monte Carlo samples clamped
    long long rejected_samples = 0;  // redraws due to vanishing Youden index
};

// Measured prevalence implied by a true prevalence under an aggregate
// protocol: positives among the diseased plus false positives among the
// healthy.
inline Rate apparent_prevalence(Rate f, const AggregateCharacteristics& agg) {
    return Rate::clamped(f.value() * agg.tpr.value() +
                         (1.0 - f.value()) * (1.0 - agg.tnr.value()));
}

namespace detail {

inline double rogan_gladen_raw(double apparent, double tpr, double tnr) {
    return (apparent + tnr - 1.0) / (tpr + tnr - 1.0);
}

}  // namespace detail

// Point correction. Inverts apparent_prevalence and clamps to [0,1],
// flagging when clamping occurred.
inline PrevalenceResult rogan_gladen(Rate apparent,
                                     const AggregateCharacteristics& agg) {
    const double youden = agg.tpr.value() + agg.tnr.value() - 1.0;
    if (std::fabs(youden) < kMinYouden)
        throw NumericError(
            "prevalence correction undefined: aggregate TPR + TNR = 1 "
            "(no discriminatory power)");
    const double raw = detail::rogan_gladen_raw(
        apparent.value(), agg.tpr.value(), agg.tnr.value());
    PrevalenceResult result;
    result.apparent = RateEstimate(apparent);
    result.clamped = raw < 0.0 || raw > 1.0;
    result.clamp_fraction = result.clamped ? 1.0 : 0.0;
    result.corrected = RateEstimate(Rate(std::clamp(raw, 0.0, 1.0)));
    return result;
}

// Monte Carlo correction: per sample, draw the apparent prevalence and
// every CI-bearing test rate from their fitted betas (exact rates stay at
// their medians), aggregate, correct, clamp. Reports (2.5, 50, 97.5)%
// quantiles. Fixed seed gives bit-identical results at any thread count;
// sample i's draws depend only on (seed, i). When `samples_out` is given,
// the per-sample corrected values are retained in sample order.
inline PrevalenceResult rogan_gladen_ci(
    const RateEstimate& apparent, const TestSet& tests,
    const AggregationRule& rule, const MonteCarloConfig& mc,
    std::vector<double>* samples_out = nullptr) {
    mc.validate();
    if (rule.n != tests.size())
        throw ValidationError("rule arity does not match test count");

    // Fail fast if the medians themselves give a vanishing Youden index.
    const auto at_medians = aggregate(tests, rule);
    if (std::fabs(at_medians.tpr.value() + at_medians.tnr.value() - 1.0) <
        kMinYouden)
        throw NumericError(
            "prevalence correction undefined: aggregate TPR + TNR = 1 at "
            "the median rates");

    // Draw layout per sample: [apparent, tpr_1, tnr_1, ..., tpr_n, tnr_n].
    struct Model {
        double fixed;
        std::optional<BetaParams> dist;
    };
    std::vector<Model> models;
    const auto add_model = [&](const RateEstimate& est) {
        est.validate();
        Model m{est.median.value(), std::nullopt};
        if (est.has_nondegenerate_ci())
            m.dist = fit_beta(est.median, *est.ci_low, *est.ci_high);
        models.push_back(m);
    };
    add_model(apparent);
    for (const auto& t : tests) {
        add_model(t.tpr);
        add_model(t.tnr);
    }

    const int n = tests.size();
    const auto corrected_from =
        [&](std::span<const double> draws) -> std::optional<double> {
        double tpr_s = 0.0, tnr_s = 0.0;
        for (int j = 0; j < (1 << n); ++j) {
            double p = 1.0, q = 1.0;
            for (int i = 1; i <= n; ++i) {
                const double tpr_i = draws[2 * i - 1];
                const double tnr_i = draws[2 * i];
                if (outcome_bit(j, n, i)) {
                    p *= tpr_i;
                    q *= 1.0 - tnr_i;
                } else {
                    p *= 1.0 - tpr_i;
                    q *= tnr_i;
                }
            }
            if (rule.output(j))
                tpr_s += p;
            else
                tnr_s += q;
        }
        if (std::fabs(tpr_s + tnr_s - 1.0) < kMinYouden) return std::nullopt;
        return detail::rogan_gladen_raw(draws[0], tpr_s, tnr_s);
    };

    std::vector<double> samples(static_cast<std::size_t>(mc.n_samples));
    std::atomic<long long> clamped_count{0};
    std::atomic<long long> rejected_count{0};
    constexpr int kMaxRedraws = 100;

    detail::parallel_ranges(mc.n_samples, mc.threads, [&](long long begin,
                                                          long long end) {
        std::vector<double> draws(models.size());
        long long clamped = 0, rejected = 0;
        for (long long i = begin; i < end; ++i) {
            auto rng =
                SplitMix64::substream(mc.seed, static_cast<std::uint64_t>(i));
            std::optional<double> raw;
            for (int attempt = 0; attempt < kMaxRedraws && !raw; ++attempt) {
                for (std::size_t k = 0; k < models.size(); ++k)
                    draws[k] = models[k].dist
                                   ? sample_beta(rng, *models[k].dist)
                                   : models[k].fixed;
                raw = corrected_from(draws);
                if (!raw) ++rejected;
            }
            if (!raw)
                throw NumericError(
                    "prevalence correction: sample rejected " +
                    std::to_string(kMaxRedraws) +
                    " times (aggregate stuck at TPR + TNR = 1)");
            if (*raw < 0.0 || *raw > 1.0) ++clamped;
            samples[static_cast<std::size_t>(i)] = std::clamp(*raw, 0.0, 1.0);
        }
        clamped_count.fetch_add(clamped, std::memory_order_relaxed);
        rejected_count.fetch_add(rejected, std::memory_order_relaxed);
    });

    if (rejected_count.load() > mc.n_samples / 100)
        throw NumericError("prevalence correction: rejection rate above 1%");

    if (samples_out) *samples_out = samples;
    std::sort(samples.begin(), samples.end());

    PrevalenceResult result;
    result.apparent = apparent;
    result.corrected = RateEstimate(
        Rate::clamped(quantile_sorted(samples, mc.quantiles[1])),
        Rate::clamped(quantile_sorted(samples, mc.quantiles[0])),
        Rate::clamped(quantile_sorted(samples, mc.quantiles[2])));
    result.clamped = clamped_count.load() > 0;
    result.clamp_fraction = static_cast<double>(clamped_count.load()) /
                            static_cast<double>(mc.n_samples);
    result.rejected_samples = rejected_count.load();
    return result;
}

// ---------------------------------------------------------------------------
// Outbreak severity: deaths / hospitalizations per estimated infection.
// Unlike prevalences these ratios are not confined to [0,1] (counts are
// divided by an *estimated* infected pool), so they are plain non-negative
// reals.
// ---------------------------------------------------------------------------

struct SeverityRatio {
    double median = 0.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
};

struct SeverityEstimate {
    SeverityRatio ifr;  // infection fatality ratio
    SeverityRatio ihr;  // infection hospitalization ratio
};

namespace detail {

inline SeverityRatio ratio_estimate(
    double count, double population, const RateEstimate& prevalence,
    std::span<const double> prevalence_samples) {
    const auto ratio_at = [&](double f) {
        if (count == 0.0) return 0.0;
        return count / (f * population);
    };
    SeverityRatio ratio;
    if (prevalence_samples.empty() || count == 0.0) {
        // monotone decreasing map: prevalence quantiles transform directly,
        // with the CI endpoints swapping roles
        ratio.median = ratio_at(prevalence.median.value());
        if (prevalence.has_ci()) {
            ratio.ci_low = ratio_at(prevalence.ci_high->value());
            ratio.ci_high = ratio_at(prevalence.ci_low->value());
        }
        return ratio;
    }
    std::vector<double> ratios;
    ratios.reserve(prevalence_samples.size());
    for (double f : prevalence_samples) ratios.push_back(ratio_at(f));
    std::sort(ratios.begin(), ratios.end());
    ratio.median = quantile_sorted(ratios, 0.5);
    ratio.ci_low = quantile_sorted(ratios, 0.025);
    ratio.ci_high = quantile_sorted(ratios, 0.975);
    return ratio;
}

}  // namespace detail

// IFR and IHR from a corrected prevalence. When per-sample prevalence
// draws are supplied the CIs come from propagating them through the
// ratio; otherwise the prevalence CI endpoints are transformed.
inline SeverityEstimate severity_ratios(
    long long population, long long deaths, long long hospitalizations,
    const PrevalenceResult& corrected,
    std::span<const double> prevalence_samples = {}) {
    if (population <= 0)
        throw ValidationError("population must be positive");
    if (deaths < 0 || deaths > population || hospitalizations < 0 ||
        hospitalizations > population)
        throw ValidationError("counts must lie in [0, population]");
    if (corrected.corrected.median.value() <= 0.0)
        throw NumericError(
            "severity ratios undefined at zero corrected prevalence");
    SeverityEstimate severity;
    severity.ifr = detail::ratio_estimate(
        static_cast<double>(deaths), static_cast<double>(population),
        corrected.corrected, prevalence_samples);
    severity.ihr = detail::ratio_estimate(
        static_cast<double>(hospitalizations), static_cast<double>(population),
        corrected.corrected, prevalence_samples);
    return severity;
}

inline SeverityEstimate severity_ratios(
    const StratumRecord& stratum, const PrevalenceResult& corrected,
    std::span<const double> prevalence_samples = {}) {
    return severity_ratios(stratum.population, stratum.deaths.value_or(0),
                           stratum.hospitalizations.value_or(0), corrected,
                           prevalence_samples);
}

}  // namespace testagg
