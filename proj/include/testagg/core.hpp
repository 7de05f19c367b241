#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace testagg {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes (parse 2, validation 3,
// numeric 4), so library code should throw the most specific one.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

// Syntax error in an expression or input file; `position` is a 0-based
// byte offset into the offending text.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    explicit ParseError(const std::string& what) : Error(what), position_(0) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

// ---------------------------------------------------------------------------
// Rate: a probability in [0,1]. Immutable once constructed.
// ---------------------------------------------------------------------------

class Rate {
public:
    Rate() = default;

    explicit Rate(double value) : value_(value) {
        if (!(value >= 0.0 && value <= 1.0))
            throw ValidationError("rate " + std::to_string(value) +
                                  " outside [0,1]");
    }

    // Snaps floating-point excursions of polynomial arithmetic back into
    // [0,1]; anything beyond `tol` is a logic error, not roundoff.
    static Rate clamped(double value, double tol = 1e-9) {
        if (value < 0.0) {
            if (value < -tol)
                throw NumericError("rate " + std::to_string(value) +
                                   " below 0 beyond roundoff tolerance");
            value = 0.0;
        } else if (value > 1.0) {
            if (value > 1.0 + tol)
                throw NumericError("rate " + std::to_string(value) +
                                   " above 1 beyond roundoff tolerance");
            value = 1.0;
        }
        return Rate(value);
    }

    double value() const { return value_; }

    friend bool operator==(Rate a, Rate b) { return a.value_ == b.value_; }
    friend bool operator<(Rate a, Rate b) { return a.value_ < b.value_; }

private:
    double value_ = 0.0;
};

// ---------------------------------------------------------------------------
// RateEstimate: median with optional equal-tailed 95% CI. A missing CI
// means the value is treated as exact wherever uncertainty is propagated.
// ---------------------------------------------------------------------------

struct RateEstimate {
    Rate median;
    std::optional<Rate> ci_low;
    std::optional<Rate> ci_high;

    RateEstimate() = default;

    explicit RateEstimate(Rate med) : median(med) {}

    RateEstimate(Rate med, Rate lo, Rate hi)
        : median(med), ci_low(lo), ci_high(hi) {
        validate();
    }

    static RateEstimate exact(double v) { return RateEstimate(Rate(v)); }

    static RateEstimate with_ci(double med, double lo, double hi) {
        return RateEstimate(Rate(med), Rate(lo), Rate(hi));
    }

    bool has_ci() const { return ci_low.has_value() && ci_high.has_value(); }

    // Zero-width intervals carry no uncertainty.
    bool has_nondegenerate_ci() const {
        return has_ci() && ci_low->value() < ci_high->value();
    }

    void validate() const {
        if (ci_low.has_value() != ci_high.has_value())
            throw ValidationError("one-sided CI: both bounds or neither");
        if (has_ci() &&
            !(ci_low->value() <= median.value() &&
              median.value() <= ci_high->value()))
            throw ValidationError("CI bounds must satisfy lo <= median <= hi");
    }
};

// ---------------------------------------------------------------------------
// Tests and test sets.
// ---------------------------------------------------------------------------

struct TestCharacteristics {
    std::string name;
    RateEstimate tpr;  // sensitivity
    RateEstimate tnr;  // specificity
};

// TPR + TNR > 1: the test is informative beyond chance.
inline bool has_discriminatory_power(const TestCharacteristics& test) {
    return test.tpr.median.value() + test.tnr.median.value() > 1.0;
}

// Ordered list of tests; index order is administration order. The order
// matters for series-testing economics, never for aggregate accuracy.
class TestSet {
public:
    explicit TestSet(std::vector<TestCharacteristics> tests)
        : tests_(std::move(tests)) {
        if (tests_.empty())
            throw ValidationError("test set must contain at least one test");
        for (std::size_t i = 0; i < tests_.size(); ++i) {
            if (tests_[i].name.empty())
                throw ValidationError("test " + std::to_string(i + 1) +
                                      " has an empty name");
            tests_[i].tpr.validate();
            tests_[i].tnr.validate();
            for (std::size_t j = 0; j < i; ++j)
                if (tests_[j].name == tests_[i].name)
                    throw ValidationError("duplicate test name '" +
                                          tests_[i].name + "'");
        }
    }

    int size() const { return static_cast<int>(tests_.size()); }
    const TestCharacteristics& operator[](int i) const { return tests_[i]; }
    const std::vector<TestCharacteristics>& tests() const { return tests_; }
    auto begin() const { return tests_.begin(); }
    auto end() const { return tests_.end(); }

    std::vector<double> tpr_medians() const {
        std::vector<double> v;
        v.reserve(tests_.size());
        for (const auto& t : tests_) v.push_back(t.tpr.median.value());
        return v;
    }

    std::vector<double> tnr_medians() const {
        std::vector<double> v;
        v.reserve(tests_.size());
        for (const auto& t : tests_) v.push_back(t.tnr.median.value());
        return v;
    }

private:
    std::vector<TestCharacteristics> tests_;
};

}  // namespace testagg
