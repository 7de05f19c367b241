#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "testagg/aggregation.hpp"
#include "testagg/frontier.hpp"

using namespace testagg;
using testagg::testutil::antigen3;
using testagg::testutil::random_tests;
using Catch::Matchers::WithinAbs;

TEST_CASE("antigen trio reproduces the published aggregate rates",
          "[aggregation]") {
    const auto tests = antigen3();

    SECTION("(Y1&Y2)|Y3 -> TPR 84.6%, FPR 3.0e-3%") {
        const auto agg = aggregate(tests, parse_rule("(Y1&Y2)|Y3", 3));
        CHECK_THAT(agg.tpr.value(), WithinAbs(0.846, 5e-4));
        CHECK_THAT(agg.fpr(), WithinAbs(3.0e-5, 1e-7));
    }
    SECTION("Y1|Y3 -> TPR 92.1%, FPR 0.3%") {
        const auto agg = aggregate(tests, parse_rule("Y1|Y3", 3));
        CHECK_THAT(agg.tpr.value(), WithinAbs(0.921, 5e-4));
        CHECK_THAT(agg.fpr(), WithinAbs(0.003, 1e-9));
    }
    SECTION("Y1|Y2|Y3 -> TPR 97.5%, FPR 1.3%") {
        const auto agg = aggregate(tests, parse_rule("Y1|Y2|Y3", 3));
        CHECK_THAT(agg.tpr.value(), WithinAbs(0.975, 5e-4));
        CHECK_THAT(agg.fpr(), WithinAbs(0.013, 5e-5));
    }
    SECTION("Y3 alone -> TPR 68.7%, FPR 0") {
        const auto agg = aggregate(tests, named_rule(RuleKind::Single, 3, 3));
        CHECK_THAT(agg.tpr.value(), WithinAbs(0.687, 1e-12));
        CHECK(agg.fpr() == 0.0);
    }
}

TEST_CASE("constant rules hit the ROC corners", "[aggregation]") {
    SplitMix64 rng(11);
    const auto tests = random_tests(rng, 3);
    const auto all_pos = aggregate(tests, named_rule(RuleKind::AllPos, 3));
    CHECK(all_pos.tpr.value() == 1.0);
    CHECK(all_pos.tnr.value() == 0.0);
    const auto all_neg = aggregate(tests, named_rule(RuleKind::AllNeg, 3));
    CHECK(all_neg.tpr.value() == 0.0);
    CHECK(all_neg.tnr.value() == 1.0);
}

TEST_CASE("closed-form AND", "[aggregation]") {
    SECTION("two 0.95/0.95 tests") {
        const TestSet tests({{"a", RateEstimate::exact(0.95),
                              RateEstimate::exact(0.95)},
                             {"b", RateEstimate::exact(0.95),
                              RateEstimate::exact(0.95)}});
        const auto agg = aggregate_and(tests);
        CHECK_THAT(agg.tpr.value(), WithinAbs(0.9025, 1e-12));
        CHECK_THAT(agg.tnr.value(), WithinAbs(0.9975, 1e-12));
    }
    SECTION("the Norrbotten serology pair") {
        const auto agg = aggregate_and(testutil::norrbotten_tests());
        CHECK_THAT(agg.tpr.value(), WithinAbs(0.831 * 0.911, 1e-12));
        CHECK(agg.tnr.value() == 1.0);
    }
    SECTION("n = 1 is the identity") {
        const TestSet one({{"a", RateEstimate::exact(0.8),
                            RateEstimate::exact(0.7)}});
        const auto agg = aggregate_and(one);
        CHECK(agg.tpr.value() == 0.8);
        CHECK(agg.tnr.value() == 0.7);
        const auto agg_or = aggregate_or(one);
        CHECK(agg_or.tpr.value() == 0.8);
        CHECK(agg_or.tnr.value() == 0.7);
    }
}

TEST_CASE("closed-form OR is the dual of AND", "[aggregation]") {
    const TestSet tests({{"a", RateEstimate::exact(0.95),
                          RateEstimate::exact(0.95)},
                         {"b", RateEstimate::exact(0.95),
                          RateEstimate::exact(0.95)}});
    const auto agg = aggregate_or(tests);
    CHECK_THAT(agg.tpr.value(), WithinAbs(0.9975, 1e-12));
    CHECK_THAT(agg.tnr.value(), WithinAbs(0.9025, 1e-12));

    const auto triple = aggregate_or(antigen3());
    const auto generic = aggregate(antigen3(), named_rule(RuleKind::Or, 3));
    CHECK_THAT(triple.tpr.value(), WithinAbs(generic.tpr.value(), 1e-12));
    CHECK_THAT(triple.tnr.value(), WithinAbs(generic.tnr.value(), 1e-12));
    CHECK_THAT(triple.tpr.value(), WithinAbs(0.975, 5e-4));
    CHECK_THAT(1.0 - triple.tnr.value(), WithinAbs(0.013, 5e-5));
}

TEST_CASE("closed-form 2-of-3 majority", "[aggregation]") {
    const auto uniform = [](double r) {
        return TestSet({{"a", RateEstimate::exact(r), RateEstimate::exact(r)},
                        {"b", RateEstimate::exact(r), RateEstimate::exact(r)},
                        {"c", RateEstimate::exact(r), RateEstimate::exact(r)}});
    };
    // 3 * 0.81 - 2 * 0.729 = 0.972
    CHECK_THAT(aggregate_majority3(uniform(0.9)).tpr.value(),
               WithinAbs(0.972, 1e-12));
    CHECK(aggregate_majority3(uniform(1.0)).tpr.value() == 1.0);

    // one perfect test, two coin flips: 0.5 + 0.5 + 0.25 - 2(0.25) = 0.75
    const TestSet mixed({{"a", RateEstimate::exact(1.0), RateEstimate::exact(1.0)},
                         {"b", RateEstimate::exact(0.5), RateEstimate::exact(0.5)},
                         {"c", RateEstimate::exact(0.5), RateEstimate::exact(0.5)}});
    CHECK_THAT(aggregate_majority3(mixed).tpr.value(), WithinAbs(0.75, 1e-12));

    const TestSet two({{"a", RateEstimate::exact(0.9), RateEstimate::exact(0.9)},
                       {"b", RateEstimate::exact(0.9), RateEstimate::exact(0.9)}});
    CHECK_THROWS_AS(aggregate_majority3(two), ValidationError);
}

TEST_CASE("arity mismatch is rejected", "[aggregation]") {
    CHECK_THROWS_AS(aggregate(antigen3(), named_rule(RuleKind::And, 2)),
                    ValidationError);
}

TEST_CASE("closed forms equal generic aggregation on random test sets",
          "[aggregation][property]") {
    SplitMix64 rng(20250101);
    for (int n = 1; n <= 6; ++n) {
        for (int trial = 0; trial < 50; ++trial) {
            const auto tests = random_tests(rng, n, 0.05, 0.99);
            const auto want_and = aggregate(tests, named_rule(RuleKind::And, n));
            const auto got_and = aggregate_and(tests);
            CHECK_THAT(got_and.tpr.value(),
                       WithinAbs(want_and.tpr.value(), 1e-12));
            CHECK_THAT(got_and.tnr.value(),
                       WithinAbs(want_and.tnr.value(), 1e-12));
            const auto want_or = aggregate(tests, named_rule(RuleKind::Or, n));
            const auto got_or = aggregate_or(tests);
            CHECK_THAT(got_or.tpr.value(),
                       WithinAbs(want_or.tpr.value(), 1e-12));
            CHECK_THAT(got_or.tnr.value(),
                       WithinAbs(want_or.tnr.value(), 1e-12));
            if (n == 3) {
                const auto want_maj =
                    aggregate(tests, named_rule(RuleKind::Majority, 3));
                const auto got_maj = aggregate_majority3(tests);
                CHECK_THAT(got_maj.tpr.value(),
                           WithinAbs(want_maj.tpr.value(), 1e-12));
                CHECK_THAT(got_maj.tnr.value(),
                           WithinAbs(want_maj.tnr.value(), 1e-12));
            }
        }
    }
}

TEST_CASE("AND and OR bound every constituent test", "[aggregation][property]") {
    SplitMix64 rng(424242);
    for (int n : {2, 3, 4}) {
        for (int trial = 0; trial < 300; ++trial) {
            const auto tests = random_tests(rng, n, 0.05, 0.99);
            const auto agg_and = aggregate_and(tests);
            const auto agg_or = aggregate_or(tests);
            for (const auto& t : tests) {
                CHECK(agg_and.tpr.value() <= t.tpr.median.value() + 1e-12);
                CHECK(t.tpr.median.value() <= agg_or.tpr.value() + 1e-12);
                CHECK(agg_or.tnr.value() <= t.tnr.median.value() + 1e-12);
                CHECK(t.tnr.median.value() <= agg_and.tnr.value() + 1e-12);
            }
        }
    }
}

TEST_CASE("complement duality: rates sum to one", "[aggregation][property]") {
    SplitMix64 rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.next() % 4);
        const auto tests = random_tests(rng, n, 0.05, 0.99);
        const AggregationRule rule(
            n, rng.next() & AggregationRule(n, 0).table_mask());
        const auto agg = aggregate(tests, rule);
        const auto co = aggregate(tests, complement_rule(rule));
        CHECK_THAT(agg.tpr.value() + co.tpr.value(), WithinAbs(1.0, 1e-12));
        CHECK_THAT(agg.tnr.value() + co.tnr.value(), WithinAbs(1.0, 1e-12));
    }
}
