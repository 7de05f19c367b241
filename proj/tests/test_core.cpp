#include <catch2/catch_amalgamated.hpp>

#include "testagg/core.hpp"

using namespace testagg;

TEST_CASE("Rate enforces [0,1]", "[core]") {
    CHECK(Rate(0.0).value() == 0.0);
    CHECK(Rate(1.0).value() == 1.0);
    CHECK(Rate(0.748).value() == 0.748);
    CHECK_THROWS_AS(Rate(-0.001), ValidationError);
    CHECK_THROWS_AS(Rate(1.001), ValidationError);

    SECTION("clamped absorbs roundoff but not logic errors") {
        CHECK(Rate::clamped(1.0 + 1e-12).value() == 1.0);
        CHECK(Rate::clamped(-1e-12).value() == 0.0);
        CHECK_THROWS_AS(Rate::clamped(1.1), NumericError);
        CHECK_THROWS_AS(Rate::clamped(-0.1), NumericError);
    }
}

TEST_CASE("RateEstimate keeps lo <= median <= hi", "[core]") {
    const auto est = RateEstimate::with_ci(0.748, 0.676, 0.808);
    CHECK(est.has_ci());
    CHECK(est.has_nondegenerate_ci());

    CHECK_THROWS_AS(RateEstimate::with_ci(0.5, 0.6, 0.9), ValidationError);
    CHECK_THROWS_AS(RateEstimate::with_ci(0.5, 0.2, 0.4), ValidationError);

    SECTION("one-sided intervals are rejected") {
        RateEstimate bad(Rate(0.5));
        bad.ci_low = Rate(0.4);
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }

    SECTION("zero-width interval carries no uncertainty") {
        const auto exact = RateEstimate::with_ci(0.5, 0.5, 0.5);
        CHECK(exact.has_ci());
        CHECK_FALSE(exact.has_nondegenerate_ci());
    }
}

TEST_CASE("discriminatory power is TPR + TNR > 1", "[core]") {
    const auto make = [](double tpr, double tnr) {
        return TestCharacteristics{"t", RateEstimate::exact(tpr),
                                   RateEstimate::exact(tnr)};
    };
    CHECK(has_discriminatory_power(make(0.95, 0.95)));
    // exactly 1.0 is chance level, not discriminatory
    CHECK_FALSE(has_discriminatory_power(make(0.50, 0.50)));
    // Abbott antigen
    CHECK(has_discriminatory_power(make(0.748, 0.997)));
}

TEST_CASE("TestSet validation", "[core]") {
    CHECK_THROWS_AS(TestSet({}), ValidationError);

    std::vector<TestCharacteristics> dup{
        {"a", RateEstimate::exact(0.9), RateEstimate::exact(0.9)},
        {"a", RateEstimate::exact(0.8), RateEstimate::exact(0.8)}};
    CHECK_THROWS_AS(TestSet(dup), ValidationError);

    std::vector<TestCharacteristics> anon{
        {"", RateEstimate::exact(0.9), RateEstimate::exact(0.9)}};
    CHECK_THROWS_AS(TestSet(anon), ValidationError);

    const TestSet ok({{"a", RateEstimate::exact(0.9), RateEstimate::exact(0.8)},
                      {"b", RateEstimate::exact(0.7), RateEstimate::exact(0.6)}});
    CHECK(ok.size() == 2);
    CHECK(ok.tpr_medians() == std::vector<double>{0.9, 0.7});
    CHECK(ok.tnr_medians() == std::vector<double>{0.8, 0.6});
}
