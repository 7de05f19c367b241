#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "testagg/rules.hpp"
#include "testagg/uncertainty.hpp"

using namespace testagg;

namespace {

std::vector<bool> outcomes(std::initializer_list<int> bits) {
    std::vector<bool> v;
    for (int b : bits) v.push_back(b != 0);
    return v;
}

}  // namespace

TEST_CASE("named rules have the expected truth tables", "[rules]") {
    // AND(2): only (+,+) i.e. j=3 maps to +
    CHECK(named_rule(RuleKind::And, 2).table == 0b1000);
    // OR(2): only (-,-) i.e. j=0 maps to -
    CHECK(named_rule(RuleKind::Or, 2).table == 0b1110);
    // MAJORITY(3): + for popcount(j) >= 2, i.e. j in {3,5,6,7}
    CHECK(named_rule(RuleKind::Majority, 3).table == 0b11101000);
    CHECK(named_rule(RuleKind::AllPos, 2).table == 0xF);
    CHECK(named_rule(RuleKind::AllNeg, 2).table == 0x0);
    CHECK(named_rule(RuleKind::KOfN, 3, 2) == named_rule(RuleKind::Majority, 3));
    CHECK(named_rule(RuleKind::KOfN, 3, 1) == named_rule(RuleKind::Or, 3));

    CHECK_THROWS_AS(named_rule(RuleKind::Majority, 2), ValidationError);
    CHECK_THROWS_AS(named_rule(RuleKind::Majority, 4), ValidationError);
    CHECK_THROWS_AS(named_rule(RuleKind::KOfN, 3, 0), ValidationError);
    CHECK_THROWS_AS(named_rule(RuleKind::KOfN, 3, 4), ValidationError);
    CHECK_THROWS_AS(named_rule(RuleKind::Single, 3, 4), ValidationError);
    CHECK_THROWS_AS(named_rule(RuleKind::And, 7), ValidationError);
}

TEST_CASE("outcome indexing puts test 1 in the most significant bit",
          "[rules]") {
    // (+,-,...,-) must make SINGLE(1) fire and SINGLE(n) stay negative
    for (int n = 1; n <= 6; ++n) {
        std::vector<bool> first_positive(n, false);
        first_positive[0] = true;
        CHECK(evaluate_rule(named_rule(RuleKind::Single, n, 1),
                            first_positive));
        if (n > 1)
            CHECK_FALSE(evaluate_rule(named_rule(RuleKind::Single, n, n),
                                      first_positive));
    }
}

TEST_CASE("evaluate_rule matches the rule definitions", "[rules]") {
    CHECK_FALSE(evaluate_rule(named_rule(RuleKind::And, 2), outcomes({1, 0})));
    CHECK(evaluate_rule(named_rule(RuleKind::Or, 2), outcomes({1, 0})));
    CHECK(evaluate_rule(named_rule(RuleKind::Majority, 3),
                        outcomes({1, 0, 1})));
    CHECK_THROWS_AS(
        evaluate_rule(named_rule(RuleKind::And, 2), outcomes({1, 0, 1})),
        ValidationError);
}

TEST_CASE("parse_rule handles the grammar", "[rules]") {
    CHECK(parse_rule("Y1&Y2", 2) == named_rule(RuleKind::And, 2));
    CHECK(parse_rule(" Y1 | Y2 ", 2) == named_rule(RuleKind::Or, 2));
    CHECK(parse_rule("!Y1", 1).table == 0b01);

    SECTION("(Y1&Y2)|Y3 evaluated exhaustively") {
        // independent oracle: direct evaluation over all 8 assignments
        const auto rule = parse_rule("(Y1&Y2)|Y3", 3);
        std::uint64_t expected = 0;
        for (int j = 0; j < 8; ++j) {
            const bool y1 = (j >> 2) & 1, y2 = (j >> 1) & 1, y3 = j & 1;
            if ((y1 && y2) || y3) expected |= std::uint64_t{1} << j;
        }
        CHECK(rule.table == expected);
        CHECK(expected == 0b11101010);  // + at j in {1,3,5,6,7}
    }

    SECTION("precedence: ! binds tighter than &, & tighter than |") {
        CHECK(parse_rule("!Y1&Y2", 2) == parse_rule("(!Y1)&Y2", 2));
        CHECK(parse_rule("Y1|Y2&Y3", 3) == parse_rule("Y1|(Y2&Y3)", 3));
    }

    SECTION("unicode operator aliases") {
        CHECK(parse_rule("Y1∧Y2", 2) == named_rule(RuleKind::And, 2));
        CHECK(parse_rule("Y1∨Y2", 2) == named_rule(RuleKind::Or, 2));
        CHECK(parse_rule("¬Y1", 1).table == 0b01);
    }

    SECTION("parse agrees with named rules for chains") {
        for (int n = 1; n <= 6; ++n) {
            std::string conj = "Y1", disj = "Y1";
            for (int i = 2; i <= n; ++i) {
                conj += "&Y" + std::to_string(i);
                disj += "|Y" + std::to_string(i);
            }
            CHECK(parse_rule(conj, n) == named_rule(RuleKind::And, n));
            CHECK(parse_rule(disj, n) == named_rule(RuleKind::Or, n));
        }
    }

    SECTION("errors carry positions") {
        CHECK_THROWS_AS(parse_rule("", 2), ParseError);
        CHECK_THROWS_AS(parse_rule("Y1 &", 2), ParseError);
        CHECK_THROWS_AS(parse_rule("(Y1|Y2", 2), ParseError);
        CHECK_THROWS_AS(parse_rule("Y1 Y2", 2), ParseError);
        CHECK_THROWS_AS(parse_rule("Z1", 2), ParseError);
        try {
            parse_rule("Y1&Y9", 3);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.position() == 3);  // the 'Y' of the offending variable
        }
    }
}

TEST_CASE("complement flips every output", "[rules]") {
    CHECK(complement_rule(named_rule(RuleKind::AllPos, 2)) ==
          named_rule(RuleKind::AllNeg, 2));
    CHECK(complement_rule(named_rule(RuleKind::And, 2)).table == 0b0111);

    SECTION("involution and pointwise negation on random rules") {
        SplitMix64 rng(20240831);
        for (int trial = 0; trial < 200; ++trial) {
            const int n = 1 + static_cast<int>(rng.next() % 6);
            const AggregationRule rule(
                n, rng.next() & AggregationRule(n, 0).table_mask());
            CHECK(complement_rule(complement_rule(rule)) == rule);
            const int j = static_cast<int>(rng.next() % (1u << n));
            CHECK(complement_rule(rule).output(j) == !rule.output(j));
        }
    }
}

TEST_CASE("is_monotone", "[rules]") {
    for (int n : {2, 3, 4}) {
        if (n % 2 == 1) CHECK(is_monotone(named_rule(RuleKind::Majority, n)));
        CHECK(is_monotone(named_rule(RuleKind::And, n)));
        CHECK(is_monotone(named_rule(RuleKind::Or, n)));
    }
    CHECK_FALSE(is_monotone(parse_rule("!Y1", 1)));

    SECTION("agrees with a pairwise brute-force oracle on all n=2 tables") {
        int monotone_count = 0;
        for (std::uint64_t table = 0; table < 16; ++table) {
            const AggregationRule rule(2, table);
            bool oracle = true;
            for (int u = 0; u < 4; ++u)
                for (int v = 0; v < 4; ++v)
                    if ((u & v) == u && rule.output(u) > rule.output(v))
                        oracle = false;
            CHECK(is_monotone(rule) == oracle);
            monotone_count += oracle ? 1 : 0;
        }
        CHECK(monotone_count == 6);  // Dedekind M(2)
    }
}

TEST_CASE("rule serialization round-trips", "[rules]") {
    CHECK(rule_from_spec("and", 3) == named_rule(RuleKind::And, 3));
    CHECK(rule_from_spec("or", 3) == named_rule(RuleKind::Or, 3));
    CHECK(rule_from_spec("majority", 3) == named_rule(RuleKind::Majority, 3));
    CHECK(rule_from_spec("kofn:2", 3) == named_rule(RuleKind::KOfN, 3, 2));
    CHECK(rule_from_spec("single:3", 3) == named_rule(RuleKind::Single, 3, 3));
    CHECK(rule_from_spec("table:0xea", 3) == parse_rule("(Y1&Y2)|Y3", 3));
    CHECK(rule_from_spec(" (Y1&Y2)|Y3 ", 3) == parse_rule("(Y1&Y2)|Y3", 3));

    CHECK(rule_to_string(named_rule(RuleKind::And, 3)) == "and");
    CHECK(rule_to_string(named_rule(RuleKind::Single, 3, 3)) == "single:3");
    CHECK(rule_to_string(parse_rule("(Y1&Y2)|Y3", 3)) == "table:0xea");

    SECTION("canonical string parses back to the same rule") {
        SplitMix64 rng(7);
        for (int trial = 0; trial < 100; ++trial) {
            const int n = 1 + static_cast<int>(rng.next() % 6);
            const AggregationRule rule(
                n, rng.next() & AggregationRule(n, 0).table_mask());
            CHECK(rule_from_spec(rule_to_string(rule), n) == rule);
        }
    }

    SECTION("bad specs") {
        CHECK_THROWS_AS(rule_from_spec("", 2), ParseError);
        CHECK_THROWS_AS(rule_from_spec("table:0xzz", 2), ParseError);
        // table bits beyond 2^n entries
        CHECK_THROWS_AS(rule_from_spec("table:0x1f", 2), ValidationError);
        CHECK_THROWS_AS(rule_from_spec("kofn:", 3), ParseError);
        CHECK_THROWS_AS(rule_from_spec("single:9", 3), ValidationError);
    }
}

TEST_CASE("rule_output_if_determined", "[rules]") {
    const auto and3 = named_rule(RuleKind::And, 3);
    // nothing known: undetermined for AND
    CHECK_FALSE(rule_output_if_determined(and3, 0, 0).has_value());
    // test 1 negative (index bit 2) forces a negative output
    const auto forced = rule_output_if_determined(and3, 0b100, 0b000);
    REQUIRE(forced.has_value());
    CHECK(*forced == false);
    // test 1 positive alone decides nothing
    CHECK_FALSE(rule_output_if_determined(and3, 0b100, 0b100).has_value());
    // constant rules are determined a priori
    CHECK(rule_output_if_determined(named_rule(RuleKind::AllPos, 3), 0, 0) ==
          std::optional<bool>(true));
}

TEST_CASE("rule_to_dnf lists positive outcomes", "[rules]") {
    CHECK(rule_to_dnf(named_rule(RuleKind::AllNeg, 2)) == "false");
    CHECK(rule_to_dnf(named_rule(RuleKind::AllPos, 2)) == "true");
    CHECK(rule_to_dnf(named_rule(RuleKind::And, 2)) == "(Y1&Y2)");
    // re-parsing the DNF reproduces the rule
    SplitMix64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.next() % 4);
        const AggregationRule rule(
            n, rng.next() & AggregationRule(n, 0).table_mask());
        if (rule.table == 0 || rule.table == rule.table_mask()) continue;
        CHECK(parse_rule(rule_to_dnf(rule), n) == rule);
    }
}
