#pragma once

#include <vector>

#include "testagg/core.hpp"
#include "testagg/rules.hpp"

namespace testagg {

// ---------------------------------------------------------------------------
// Exact aggregate sensitivity and specificity of a Boolean rule over n
// conditionally independent tests, evaluated at the median rates.
//
// Aggregate accuracy depends only on the rule, never on whether the tests
// are run in parallel or in series; administration order is therefore not
// part of this module's API (order enters only the cost metrics).
// ---------------------------------------------------------------------------

struct AggregateCharacteristics {
    Rate tpr;  // sensitivity of the aggregated protocol
    Rate tnr;  // specificity of the aggregated protocol
    AggregationRule rule;

    double fpr() const { return 1.0 - tnr.value(); }
};

// Probability of each joint outcome index, conditioned on disease status.
// diseased[j]  = P(outcome j | diseased)  from the tests' TPRs,
// healthy[j]   = P(outcome j | healthy)   from the tests' TNRs.
struct OutcomeDistribution {
    std::vector<double> diseased;
    std::vector<double> healthy;
};

inline OutcomeDistribution outcome_distribution(const TestSet& tests) {
    const int n = tests.size();
    if (n > kMaxRuleInputs)
        throw ValidationError("outcome enumeration limited to n <= " +
                              std::to_string(kMaxRuleInputs));
    const int r = 1 << n;
    OutcomeDistribution dist;
    dist.diseased.assign(r, 1.0);
    dist.healthy.assign(r, 1.0);
    for (int j = 0; j < r; ++j) {
        for (int i = 1; i <= n; ++i) {
            const double tpr = tests[i - 1].tpr.median.value();
            const double tnr = tests[i - 1].tnr.median.value();
            if (outcome_bit(j, n, i)) {
                dist.diseased[j] *= tpr;
                dist.healthy[j] *= 1.0 - tnr;
            } else {
                dist.diseased[j] *= 1.0 - tpr;
                dist.healthy[j] *= tnr;
            }
        }
    }
    return dist;
}

// Raw (tpr, tnr) sums for a truth table against precomputed outcome
// probabilities; the hot path of rule enumeration.
inline std::pair<double, double> aggregate_raw(
    const OutcomeDistribution& dist, std::uint64_t table) {
    double tpr = 0.0, tnr = 0.0;
    const int r = static_cast<int>(dist.diseased.size());
    for (int j = 0; j < r; ++j) {
        if ((table >> j) & 1u)
            tpr += dist.diseased[j];
        else
            tnr += dist.healthy[j];
    }
    return {tpr, tnr};
}

inline AggregateCharacteristics aggregate(const TestSet& tests,
                                          const AggregationRule& rule) {
    if (rule.n != tests.size())
        throw ValidationError("rule arity " + std::to_string(rule.n) +
                              " does not match test count " +
                              std::to_string(tests.size()));
    const auto dist = outcome_distribution(tests);
    const auto [tpr, tnr] = aggregate_raw(dist, rule.table);
    return {Rate::clamped(tpr), Rate::clamped(tnr), rule};
}

// Closed forms for the named protocols. These duplicate what aggregate()
// computes, on purpose: property tests pin them against each other.

inline AggregateCharacteristics aggregate_and(const TestSet& tests) {
    double tpr = 1.0, fpr = 1.0;
    for (const auto& t : tests) {
        tpr *= t.tpr.median.value();
        fpr *= 1.0 - t.tnr.median.value();
    }
    return {Rate::clamped(tpr), Rate::clamped(1.0 - fpr),
            named_rule(RuleKind::And, tests.size())};
}

inline AggregateCharacteristics aggregate_or(const TestSet& tests) {
    double fnr = 1.0, tnr = 1.0;
    for (const auto& t : tests) {
        fnr *= 1.0 - t.tpr.median.value();
        tnr *= t.tnr.median.value();
    }
    return {Rate::clamped(1.0 - fnr), Rate::clamped(tnr),
            named_rule(RuleKind::Or, tests.size())};
}

// 2-of-3 majority: pairwise products minus twice the triple product.
inline AggregateCharacteristics aggregate_majority3(const TestSet& tests) {
    if (tests.size() != 3)
        throw ValidationError("majority closed form requires exactly 3 tests");
    const auto maj = [](double a, double b, double c) {
        return a * b + a * c + b * c - 2.0 * a * b * c;
    };
    const auto tprs = tests.tpr_medians();
    const auto tnrs = tests.tnr_medians();
    return {Rate::clamped(maj(tprs[0], tprs[1], tprs[2])),
            Rate::clamped(maj(tnrs[0], tnrs[1], tnrs[2])),
            named_rule(RuleKind::Majority, 3)};
}

}  // namespace testagg
