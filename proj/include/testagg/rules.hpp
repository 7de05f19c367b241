#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "testagg/core.hpp"

namespace testagg {

// ---------------------------------------------------------------------------
// An aggregation rule is an n-input Boolean function stored as a truth
// table in a machine word (n <= 6, so at most 64 table bits).
//
// Outcome indexing: for test outcomes (y_1, ..., y_n) with y_i in {0,1},
// index j = sum_i y_i * 2^(n-i). Test 1 is the most significant bit:
// j = 0 is all-negative, j = 2^n - 1 is all-positive, and the first test
// varies slowest when counting j upward.
// ---------------------------------------------------------------------------

inline constexpr int kMaxRuleInputs = 6;

struct AggregationRule {
    int n = 1;            // number of test inputs
    std::uint64_t table = 0;  // bit j = aggregate output for outcome index j

    AggregationRule() = default;

    AggregationRule(int n_inputs, std::uint64_t truth_table)
        : n(n_inputs), table(truth_table) {
        if (n < 1 || n > kMaxRuleInputs)
            throw ValidationError("rule arity " + std::to_string(n) +
                                  " outside [1," +
                                  std::to_string(kMaxRuleInputs) + "]");
        if (n < kMaxRuleInputs && (table >> (1u << n)) != 0)
            throw ValidationError("truth table has bits beyond 2^n entries");
    }

    int num_outcomes() const { return 1 << n; }

    bool output(int outcome_index) const {
        return (table >> outcome_index) & 1u;
    }

    std::uint64_t table_mask() const {
        return n == kMaxRuleInputs ? ~std::uint64_t{0}
                                   : (std::uint64_t{1} << (1u << n)) - 1;
    }

    friend bool operator==(const AggregationRule& a, const AggregationRule& b) {
        return a.n == b.n && a.table == b.table;
    }
};

// Index of the outcome vector under the MSB-first convention above.
// Accepts any sized range of bool-convertible values (std::vector<bool>
// included, which cannot bind to a span).
template <typename BoolRange>
int outcome_index(const BoolRange& outcomes) {
    int j = 0;
    for (bool y : outcomes) j = (j << 1) | (y ? 1 : 0);
    return j;
}

// Outcome of test i (1-based) within outcome index j.
inline bool outcome_bit(int j, int n, int test_index) {
    return (j >> (n - test_index)) & 1;
}

enum class RuleKind { And, Or, Majority, KOfN, Single, AllPos, AllNeg };

// Builds the named threshold/projection rules. `arg` is k for KOfN and the
// 1-based test index for Single; ignored otherwise.
inline AggregationRule named_rule(RuleKind kind, int n, int arg = 0) {
    if (n < 1 || n > kMaxRuleInputs)
        throw ValidationError("rule arity " + std::to_string(n) +
                              " outside [1," + std::to_string(kMaxRuleInputs) +
                              "]");
    int threshold = 0;
    switch (kind) {
        case RuleKind::And: threshold = n; break;
        case RuleKind::Or: threshold = 1; break;
        case RuleKind::Majority:
            if (n % 2 == 0)
                throw ValidationError("majority rule requires odd n");
            threshold = (n + 1) / 2;
            break;
        case RuleKind::KOfN:
            if (arg < 1 || arg > n)
                throw ValidationError("k-of-n threshold k=" +
                                      std::to_string(arg) + " outside [1,n]");
            threshold = arg;
            break;
        case RuleKind::Single: {
            if (arg < 1 || arg > n)
                throw ValidationError("test index " + std::to_string(arg) +
                                      " outside [1,n]");
            std::uint64_t table = 0;
            for (int j = 0; j < (1 << n); ++j)
                if (outcome_bit(j, n, arg)) table |= std::uint64_t{1} << j;
            return AggregationRule(n, table);
        }
        case RuleKind::AllPos:
            return AggregationRule(n, AggregationRule(n, 0).table_mask());
        case RuleKind::AllNeg:
            return AggregationRule(n, 0);
    }
    std::uint64_t table = 0;
    for (int j = 0; j < (1 << n); ++j)
        if (std::popcount(static_cast<unsigned>(j)) >= threshold)
            table |= std::uint64_t{1} << j;
    return AggregationRule(n, table);
}

template <typename BoolRange>
bool evaluate_rule(const AggregationRule& rule, const BoolRange& outcomes) {
    if (static_cast<int>(std::size(outcomes)) != rule.n)
        throw ValidationError("outcome vector length " +
                              std::to_string(std::size(outcomes)) +
                              " does not match rule arity " +
                              std::to_string(rule.n));
    return rule.output(outcome_index(outcomes));
}

inline AggregationRule complement_rule(const AggregationRule& rule) {
    return AggregationRule(rule.n, ~rule.table & rule.table_mask());
}

// Bit masks over table-index space: entry k selects the table positions
// whose outcome index has bit k set (kitty-style variable masks).
inline constexpr std::uint64_t kIndexBitMask[6] = {
    0xaaaaaaaaaaaaaaaaULL, 0xccccccccccccccccULL, 0xf0f0f0f0f0f0f0f0ULL,
    0xff00ff00ff00ff00ULL, 0xffff0000ffff0000ULL, 0xffffffff00000000ULL,
};

// True iff flipping any input 0 -> 1 never flips the output 1 -> 0.
inline bool is_monotone(const AggregationRule& rule) {
    for (int k = 0; k < rule.n; ++k) {
        const std::uint64_t hi = rule.table & kIndexBitMask[k];
        const std::uint64_t lo = rule.table & ~kIndexBitMask[k];
        // every table bit set at index-bit-k = 0 must also be set at 1
        if ((lo << (1 << k)) & ~hi & kIndexBitMask[k]) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Partial evaluation, used by series-testing cost and the simulator.
// `known_mask` / `known_values` live in outcome-index bit space (test i at
// bit n-i). Returns the rule output if it is already determined for every
// completion of the unknown tests, nullopt otherwise.
// ---------------------------------------------------------------------------

inline std::optional<bool> rule_output_if_determined(
    const AggregationRule& rule, int known_mask, int known_values) {
    const int free_mask = ~known_mask & ((1 << rule.n) - 1);
    bool first = rule.output((known_values & known_mask) | 0);
    // walk all submasks of the free bits
    for (int sub = free_mask;; sub = (sub - 1) & free_mask) {
        if (rule.output((known_values & known_mask) | sub) != first)
            return std::nullopt;
        if (sub == 0) break;
    }
    return first;
}

// ---------------------------------------------------------------------------
// Expression parser. Grammar (whitespace ignored):
//   expr   := term ('|' term)*
//   term   := factor ('&' factor)*
//   factor := '!'? atom
//   atom   := 'Y' integer | '(' expr ')'
// Unicode aliases for the operators are accepted too.
// ---------------------------------------------------------------------------

namespace detail {

struct ExprNode {
    enum class Op { Var, Not, And, Or } op;
    int var = 0;  // 1-based, Op::Var only
    std::unique_ptr<ExprNode> lhs, rhs;

    bool eval(int j, int n) const {
        switch (op) {
            case Op::Var: return outcome_bit(j, n, var);
            case Op::Not: return !lhs->eval(j, n);
            case Op::And: return lhs->eval(j, n) && rhs->eval(j, n);
            case Op::Or: return lhs->eval(j, n) || rhs->eval(j, n);
        }
        return false;
    }
};

class RuleParser {
public:
    RuleParser(std::string_view text, int n) : text_(text), n_(n) {}

    std::unique_ptr<ExprNode> parse() {
        auto node = parse_or();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("unexpected trailing input", pos_);
        return node;
    }

private:
    std::unique_ptr<ExprNode> parse_or() {
        auto lhs = parse_and();
        while (accept_symbol('|', "∨")) {  // ∨
            auto node = std::make_unique<ExprNode>();
            node->op = ExprNode::Op::Or;
            node->lhs = std::move(lhs);
            node->rhs = parse_and();
            lhs = std::move(node);
        }
        return lhs;
    }

    std::unique_ptr<ExprNode> parse_and() {
        auto lhs = parse_factor();
        while (accept_symbol('&', "∧")) {  // ∧
            auto node = std::make_unique<ExprNode>();
            node->op = ExprNode::Op::And;
            node->lhs = std::move(lhs);
            node->rhs = parse_factor();
            lhs = std::move(node);
        }
        return lhs;
    }

    std::unique_ptr<ExprNode> parse_factor() {
        if (accept_symbol('!', "¬")) {  // ¬
            auto node = std::make_unique<ExprNode>();
            node->op = ExprNode::Op::Not;
            node->lhs = parse_factor();
            return node;
        }
        return parse_atom();
    }

    std::unique_ptr<ExprNode> parse_atom() {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of expression", pos_);
        if (text_[pos_] == '(') {
            ++pos_;
            auto node = parse_or();
            skip_ws();
            if (pos_ >= text_.size() || text_[pos_] != ')')
                throw ParseError("expected ')'", pos_);
            ++pos_;
            return node;
        }
        if (text_[pos_] == 'Y' || text_[pos_] == 'y') {
            const std::size_t var_pos = pos_++;
            int index = 0;
            bool any_digit = false;
            while (pos_ < text_.size() && std::isdigit(
                       static_cast<unsigned char>(text_[pos_]))) {
                index = std::min(index * 10 + (text_[pos_] - '0'), 1000);
                ++pos_;
                any_digit = true;
            }
            if (!any_digit)
                throw ParseError("expected test index after 'Y'", pos_);
            if (index < 1 || index > n_)
                throw ParseError("test index Y" + std::to_string(index) +
                                     " outside 1.." + std::to_string(n_),
                                 var_pos);
            auto node = std::make_unique<ExprNode>();
            node->op = ExprNode::Op::Var;
            node->var = index;
            return node;
        }
        throw ParseError(std::string("unexpected character '") +
                             text_[pos_] + "'",
                         pos_);
    }

    bool accept_symbol(char ascii, std::string_view utf8_alias) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ascii) {
            ++pos_;
            return true;
        }
        if (text_.substr(pos_).starts_with(utf8_alias)) {
            pos_ += utf8_alias.size();
            return true;
        }
        return false;
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    std::string_view text_;
    int n_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline AggregationRule parse_rule(std::string_view expr, int n) {
    if (n < 1 || n > kMaxRuleInputs)
        throw ValidationError("rule arity " + std::to_string(n) +
                              " outside [1," + std::to_string(kMaxRuleInputs) +
                              "]");
    detail::RuleParser parser(expr, n);
    auto ast = parser.parse();
    std::uint64_t table = 0;
    for (int j = 0; j < (1 << n); ++j)
        if (ast->eval(j, n)) table |= std::uint64_t{1} << j;
    return AggregationRule(n, table);
}

// ---------------------------------------------------------------------------
// Rule serialization: named keyword, expression, or `table:0x<hex>` under
// the index convention above.
// ---------------------------------------------------------------------------

inline AggregationRule rule_from_spec(std::string_view spec, int n) {
    // trim
    while (!spec.empty() && std::isspace(static_cast<unsigned char>(spec.front())))
        spec.remove_prefix(1);
    while (!spec.empty() && std::isspace(static_cast<unsigned char>(spec.back())))
        spec.remove_suffix(1);
    if (spec.empty()) throw ParseError("empty rule");

    if (spec == "and") return named_rule(RuleKind::And, n);
    if (spec == "or") return named_rule(RuleKind::Or, n);
    if (spec == "majority") return named_rule(RuleKind::Majority, n);
    if (spec == "all_pos") return named_rule(RuleKind::AllPos, n);
    if (spec == "all_neg") return named_rule(RuleKind::AllNeg, n);
    if (spec.starts_with("kofn:") || spec.starts_with("single:")) {
        const bool kofn = spec.starts_with("kofn:");
        const auto num = spec.substr(spec.find(':') + 1);
        int arg = 0;
        for (char c : num) {
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw ParseError("expected integer in rule spec '" +
                                 std::string(spec) + "'");
            arg = arg * 10 + (c - '0');
            if (arg > 1000) break;
        }
        if (num.empty())
            throw ParseError("missing integer in rule spec '" +
                             std::string(spec) + "'");
        return named_rule(kofn ? RuleKind::KOfN : RuleKind::Single, n, arg);
    }
    if (spec.starts_with("table:")) {
        auto hex = spec.substr(6);
        if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
        if (hex.empty() || hex.size() > 16)
            throw ParseError("bad truth-table literal '" + std::string(spec) +
                             "'");
        std::uint64_t table = 0;
        for (char c : hex) {
            int digit;
            if (c >= '0' && c <= '9') digit = c - '0';
            else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
            else
                throw ParseError("bad hex digit in truth-table literal");
            table = (table << 4) | static_cast<std::uint64_t>(digit);
        }
        return AggregationRule(n, table);  // rejects overflow bits
    }
    return parse_rule(spec, n);
}

inline std::string rule_to_string(const AggregationRule& rule) {
    const int n = rule.n;
    if (rule == named_rule(RuleKind::AllNeg, n)) return "all_neg";
    if (rule == named_rule(RuleKind::AllPos, n)) return "all_pos";
    for (int i = 1; i <= n; ++i)
        if (rule == named_rule(RuleKind::Single, n, i))
            return "single:" + std::to_string(i);
    if (rule == named_rule(RuleKind::And, n)) return "and";
    if (rule == named_rule(RuleKind::Or, n)) return "or";
    if (n % 2 == 1 && n >= 3 && rule == named_rule(RuleKind::Majority, n))
        return "majority";
    for (int k = 2; k < n; ++k)
        if (rule == named_rule(RuleKind::KOfN, n, k))
            return "kofn:" + std::to_string(k);
    char buf[32];
    std::snprintf(buf, sizeof buf, "table:0x%llx",
                  static_cast<unsigned long long>(rule.table));
    return buf;
}

// Disjunction of positive-outcome minterms, e.g. "(Y1&!Y2)|(Y1&Y2)".
// Purely cosmetic output; no simplification is attempted.
inline std::string rule_to_dnf(const AggregationRule& rule) {
    if (rule.table == 0) return "false";
    if (rule.table == rule.table_mask()) return "true";
    std::string out;
    for (int j = 0; j < rule.num_outcomes(); ++j) {
        if (!rule.output(j)) continue;
        if (!out.empty()) out += "|";
        out += "(";
        for (int i = 1; i <= rule.n; ++i) {
            if (i > 1) out += "&";
            if (!outcome_bit(j, rule.n, i)) out += "!";
            out += "Y" + std::to_string(i);
        }
        out += ")";
    }
    return out;
}

}  // namespace testagg
