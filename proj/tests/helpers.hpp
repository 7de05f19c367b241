#pragma once

#include "testagg/core.hpp"
#include "testagg/uncertainty.hpp"

namespace testagg::testutil {

// The three antigen tests used throughout: Abbott Panbio, Innova, Siemens
// CLINITEST (median sensitivity/specificity with 95% CIs).
inline TestSet antigen3() {
    return TestSet({
        {"Abbott Panbio COVID-19 Ag", RateEstimate::with_ci(0.748, 0.676, 0.808),
         RateEstimate::with_ci(0.997, 0.996, 0.998)},
        {"Innova SARS-CoV-2 Ag", RateEstimate::with_ci(0.681, 0.472, 0.836),
         RateEstimate::with_ci(0.990, 0.985, 0.993)},
        {"Siemens CLINITEST Rapid COVID-19 Ag",
         RateEstimate::with_ci(0.687, 0.480, 0.838),
         RateEstimate::with_ci(1.000, 0.980, 1.000)},
    });
}

// The Norrbotten serology pair: Abbott SARS-CoV-2 IgG (specificity exact)
// and Euroimmun Anti-SARS-CoV-2 ELISA IgG, combined with AND.
inline TestSet norrbotten_tests() {
    return TestSet({
        {"Abbott SARS-CoV-2 IgG", RateEstimate::with_ci(0.831, 0.754, 1.000),
         RateEstimate::exact(1.000)},
        {"Euroimmun Anti-SARS-CoV-2 ELISA IgG",
         RateEstimate::with_ci(0.911, 0.807, 0.961),
         RateEstimate::with_ci(1.000, 0.965, 1.000)},
    });
}

inline double uniform_in(SplitMix64& rng, double lo, double hi) {
    return lo + (hi - lo) * rng.uniform01();
}

// Random test set with rates in a band; discriminatory by construction
// when lo + lo > 1.
inline TestSet random_tests(SplitMix64& rng, int n, double lo = 0.55,
                            double hi = 0.99) {
    std::vector<TestCharacteristics> tests;
    for (int i = 0; i < n; ++i)
        tests.push_back({"t" + std::to_string(i + 1),
                         RateEstimate::exact(uniform_in(rng, lo, hi)),
                         RateEstimate::exact(uniform_in(rng, lo, hi))});
    return TestSet(std::move(tests));
}

}  // namespace testagg::testutil
