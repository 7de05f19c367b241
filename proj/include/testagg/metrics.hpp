#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "testagg/aggregation.hpp"
#include "testagg/core.hpp"
#include "testagg/rules.hpp"

namespace testagg {

// ---------------------------------------------------------------------------
// Predictive values. TPR/TNR here are the rates of the whole (possibly
// aggregated) protocol. Degenerate configurations raise instead of being
// coerced to 0/1 conventions, so callers can skip those grid points.
// ---------------------------------------------------------------------------

// true positives over positive calls
inline Rate ppv(Rate f, Rate tpr, Rate tnr) {
    const double num = f.value() * tpr.value();
    const double den = num + (1.0 - f.value()) * (1.0 - tnr.value());
    if (den <= 0.0)
        throw NumericError("PPV undefined: no positive calls possible");
    return Rate::clamped(num / den);
}

// true negatives over negative calls
inline Rate npv(Rate f, Rate tpr, Rate tnr) {
    const double num = (1.0 - f.value()) * tnr.value();
    const double den = num + f.value() * (1.0 - tpr.value());
    if (den <= 0.0)
        throw NumericError("NPV undefined: no negative calls possible");
    return Rate::clamped(num / den);
}

// Prevalence above which PPV >= NPV.
inline Rate ppv_npv_crossing(Rate tpr, Rate tnr) {
    const double s_tnr = std::sqrt(tnr.value() * (1.0 - tnr.value()));
    const double s_tpr = std::sqrt(tpr.value() * (1.0 - tpr.value()));
    if (s_tnr + s_tpr <= 0.0)
        throw NumericError(
            "PPV/NPV crossing undefined for rates that are both 0 or 1");
    return Rate::clamped(s_tnr / (s_tnr + s_tpr));
}

// ---------------------------------------------------------------------------
// Test economy of series administration.
// ---------------------------------------------------------------------------

struct CostReport {
    double prevalence = 0.0;
    double expected_tests_series = 0.0;
    double tests_parallel = 0.0;           // always n
    double ratio = 1.0;                    // parallel / series; in [1, n]
                                           // unless the rule is constant
};

enum class SeriesKind { And, Or };

// Two-test closed form: the second test is needed iff the first is
// positive (AND) or negative (OR).
inline CostReport series_cost(Rate f, const TestCharacteristics& first_test,
                              SeriesKind kind) {
    const double tpr1 = first_test.tpr.median.value();
    const double tnr1 = first_test.tnr.median.value();
    const double p_second =
        kind == SeriesKind::And
            ? f.value() * tpr1 + (1.0 - f.value()) * (1.0 - tnr1)
            : f.value() * (1.0 - tpr1) + (1.0 - f.value()) * tnr1;
    CostReport report;
    report.prevalence = f.value();
    report.expected_tests_series = 1.0 + p_second;
    report.tests_parallel = 2.0;
    report.ratio = 2.0 / report.expected_tests_series;
    return report;
}

// Prevalence below which the AND series protocol uses fewer expected tests
// than the OR series protocol. Meaningful only for a first test with
// TNR >= 1/2 and discriminatory power.
inline Rate critical_prevalence(const TestCharacteristics& first_test) {
    const double tpr1 = first_test.tpr.median.value();
    const double tnr1 = first_test.tnr.median.value();
    if (tnr1 < 0.5)
        throw ValidationError(
            "critical prevalence requires first-test TNR >= 1/2");
    if (tpr1 + tnr1 <= 1.0)
        throw ValidationError(
            "critical prevalence requires a first test with discriminatory "
            "power (TPR + TNR > 1)");
    return Rate::clamped((2.0 * tnr1 - 1.0) /
                         (2.0 * (tpr1 + tnr1 - 1.0)));
}

namespace detail {

// Expected remaining tests given the outcomes drawn so far, recursing in
// administration order and stopping once the rule output is forced.
// Masks live in outcome-index bit space.
inline double expected_tests_from(const AggregationRule& rule,
                                  std::span<const double> p_positive,
                                  std::span<const int> order, int depth,
                                  int known_mask, int known_values) {
    if (rule_output_if_determined(rule, known_mask, known_values).has_value())
        return 0.0;
    const int test_index = order[depth];  // 1-based
    const int bit = 1 << (rule.n - test_index);
    const double p = p_positive[test_index - 1];
    return 1.0 +
           p * expected_tests_from(rule, p_positive, order, depth + 1,
                                   known_mask | bit, known_values | bit) +
           (1.0 - p) * expected_tests_from(rule, p_positive, order, depth + 1,
                                           known_mask | bit, known_values);
}

inline void check_order(std::span<const int> order, int n) {
    if (static_cast<int>(order.size()) != n)
        throw ValidationError("administration order must list all " +
                              std::to_string(n) + " tests");
    unsigned seen = 0;
    for (int idx : order) {
        if (idx < 1 || idx > n || (seen >> (idx - 1)) & 1u)
            throw ValidationError(
                "administration order must be a permutation of 1..n");
        seen |= 1u << (idx - 1);
    }
}

}  // namespace detail

// Exact expected tests per person under short-circuit series
// administration of an arbitrary rule, mixing over disease status.
inline CostReport series_cost_general(Rate f, const TestSet& tests,
                                      const AggregationRule& rule,
                                      std::span<const int> order) {
    if (rule.n != tests.size())
        throw ValidationError("rule arity does not match test count");
    detail::check_order(order, rule.n);

    std::vector<double> pos_if_diseased, pos_if_healthy;
    for (const auto& t : tests) {
        pos_if_diseased.push_back(t.tpr.median.value());
        pos_if_healthy.push_back(1.0 - t.tnr.median.value());
    }
    const double expected =
        f.value() * detail::expected_tests_from(rule, pos_if_diseased, order,
                                                0, 0, 0) +
        (1.0 - f.value()) * detail::expected_tests_from(
                                rule, pos_if_healthy, order, 0, 0, 0);

    CostReport report;
    report.prevalence = f.value();
    report.expected_tests_series = expected;
    report.tests_parallel = static_cast<double>(rule.n);
    report.ratio = expected > 0.0
                       ? report.tests_parallel / expected
                       : std::numeric_limits<double>::infinity();
    return report;
}

}  // namespace testagg
