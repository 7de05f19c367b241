#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <mutex>
#include <span>
#include <vector>

#include "testagg/core.hpp"
#include "testagg/metrics.hpp"
#include "testagg/rules.hpp"
#include "testagg/uncertainty.hpp"

namespace testagg {

// ---------------------------------------------------------------------------
// Brute-force stochastic simulator. Shares only the core types, the rule
// evaluation machinery, and the PRNG with the analytic modules, so its
// tallies independently validate every closed-form result.
// ---------------------------------------------------------------------------

struct SimulationReport {
    long long n_individuals = 0;
    long long true_positives = 0;
    long long false_positives = 0;
    long long true_negatives = 0;
    long long false_negatives = 0;
    long long tests_administered = 0;
    double empirical_tpr = 0.0;   // NaN when no diseased individuals occur
    double empirical_fpr = 0.0;   // NaN when no healthy individuals occur
    double empirical_apparent_prevalence = 0.0;
};

// Simulates `n_individuals` people: disease status ~ Bernoulli(f), then
// tests are drawn lazily in administration order. Under the series
// protocol (short_circuit = true) drawing stops once the rule output is
// forced; the parallel protocol administers all n tests. Accuracy tallies
// agree between the two, only tests_administered differs. Individual i's
// draws depend only on (seed, i), so results are identical at any thread
// count.
inline SimulationReport simulate(Rate f, const TestSet& tests,
                                 const AggregationRule& rule,
                                 std::span<const int> order,
                                 long long n_individuals, std::uint64_t seed,
                                 unsigned threads = 0,
                                 bool short_circuit = true) {
    if (rule.n != tests.size())
        throw ValidationError("rule arity does not match test count");
    detail::check_order(order, rule.n);
    if (n_individuals < 1)
        throw ValidationError("need at least one individual");

    const int n = rule.n;
    std::vector<double> pos_if_diseased, pos_if_healthy;
    for (const auto& t : tests) {
        pos_if_diseased.push_back(t.tpr.median.value());
        pos_if_healthy.push_back(1.0 - t.tnr.median.value());
    }

    // Memoized stop-or-continue decision for every (prefix depth, drawn
    // outcomes) state reachable in administration order.
    // State: depth d in [0, n], outcome bits of the first d tests packed
    // into index-space positions. Encoded as offset[d] + packed bits.
    std::vector<int> state_offset(n + 2, 0);
    for (int d = 0; d <= n; ++d)
        state_offset[d + 1] = state_offset[d] + (1 << d);
    // -1 undetermined, else the forced output
    std::vector<signed char> forced(state_offset[n + 1], -1);
    for (int d = n; d >= 0; --d) {
        for (int bits = 0; bits < (1 << d); ++bits) {
            int known_mask = 0, known_values = 0;
            for (int k = 0; k < d; ++k) {
                const int test_index = order[k];
                const int bit = 1 << (n - test_index);
                known_mask |= bit;
                if ((bits >> k) & 1) known_values |= bit;
            }
            const auto out =
                rule_output_if_determined(rule, known_mask, known_values);
            forced[state_offset[d] + bits] =
                out ? static_cast<signed char>(*out ? 1 : 0) : -1;
        }
    }

    struct Tally {
        long long tp = 0, fp = 0, tn = 0, fn = 0, tests = 0;
    };
    std::vector<Tally> partial;
    std::mutex partial_mutex;

    detail::parallel_ranges(n_individuals, threads, [&](long long begin,
                                                        long long end) {
        Tally t;
        for (long long i = begin; i < end; ++i) {
            auto rng =
                SplitMix64::substream(seed, static_cast<std::uint64_t>(i));
            const bool diseased = rng.uniform01() < f.value();
            const auto& p_pos = diseased ? pos_if_diseased : pos_if_healthy;
            int depth = 0, bits = 0;
            signed char out = forced[state_offset[0]];
            while (short_circuit ? out < 0 : depth < n) {
                const int test_index = order[depth];
                const bool positive =
                    rng.uniform01() < p_pos[test_index - 1];
                ++t.tests;
                bits |= (positive ? 1 : 0) << depth;
                ++depth;
                out = forced[state_offset[depth] + bits];
            }
            const bool called_positive = out == 1;
            if (diseased)
                (called_positive ? t.tp : t.fn) += 1;
            else
                (called_positive ? t.fp : t.tn) += 1;
        }
        const std::lock_guard<std::mutex> lock(partial_mutex);
        partial.push_back(t);
    });

    SimulationReport report;
    report.n_individuals = n_individuals;
    for (const auto& t : partial) {
        report.true_positives += t.tp;
        report.false_positives += t.fp;
        report.true_negatives += t.tn;
        report.false_negatives += t.fn;
        report.tests_administered += t.tests;
    }
    const double diseased_count = static_cast<double>(
        report.true_positives + report.false_negatives);
    const double healthy_count = static_cast<double>(
        report.false_positives + report.true_negatives);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.empirical_tpr =
        diseased_count > 0 ? report.true_positives / diseased_count : nan;
    report.empirical_fpr =
        healthy_count > 0 ? report.false_positives / healthy_count : nan;
    report.empirical_apparent_prevalence =
        static_cast<double>(report.true_positives + report.false_positives) /
        static_cast<double>(n_individuals);
    return report;
}

}  // namespace testagg
