#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "testagg/core.hpp"
#include "testagg/prevalence.hpp"

namespace testagg {

// ---------------------------------------------------------------------------
// File formats.
//
// Test sets (JSON):
//   [{"name": str, "tpr": {"median": x, "lo": x?, "hi": x?}, "tnr": {...}}]
// Test sets (CSV):
//   name,tpr,tpr_lo,tpr_hi,tnr,tnr_lo,tnr_hi      (empty cell = no CI)
// Strata (CSV):
//   label,population,deaths,hospitalizations,apparent,apparent_lo,apparent_hi
//   (empty deaths/hospitalizations = not recorded; empty lo/hi = no CI)
// ---------------------------------------------------------------------------

// Shortest decimal that round-trips a double.
inline std::string format_double(double v) {
    char buf[40];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace detail {

inline RateEstimate rate_estimate_from_json(const nlohmann::json& j,
                                            const std::string& context) {
    if (!j.is_object() || !j.contains("median"))
        throw ParseError(context + ": expected {\"median\": ...}");
    RateEstimate est;
    try {
        est.median = Rate(j.at("median").get<double>());
        const bool has_lo = j.contains("lo") && !j.at("lo").is_null();
        const bool has_hi = j.contains("hi") && !j.at("hi").is_null();
        if (has_lo != has_hi)
            throw ValidationError(context + ": one-sided CI");
        if (has_lo) {
            est.ci_low = Rate(j.at("lo").get<double>());
            est.ci_high = Rate(j.at("hi").get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(context + ": " + e.what());
    }
    est.validate();
    return est;
}

inline nlohmann::json rate_estimate_to_json(const RateEstimate& est) {
    nlohmann::json j{{"median", est.median.value()}};
    if (est.has_ci()) {
        j["lo"] = est.ci_low->value();
        j["hi"] = est.ci_high->value();
    }
    return j;
}

// Splits one CSV line; the formats above never quote or embed commas.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    for (auto& s : cells) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
            s.erase(s.begin());
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
            s.pop_back();
    }
    return cells;
}

inline double parse_double_cell(const std::string& cell,
                                const std::string& context) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw ParseError(context + ": expected a number, got '" + cell + "'");
    return v;
}

inline long long parse_count_cell(const std::string& cell,
                                  const std::string& context) {
    char* end = nullptr;
    const long long v = std::strtoll(cell.c_str(), &end, 10);
    if (end == cell.c_str() || *end != '\0')
        throw ParseError(context + ": expected an integer, got '" + cell +
                         "'");
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace detail

// ---- test sets -------------------------------------------------------------

inline TestSet parse_test_set_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("test-set JSON: ") + e.what(),
                         e.byte);
    }
    if (!doc.is_array())
        throw ParseError("test-set JSON: expected a top-level array");
    std::vector<TestCharacteristics> tests;
    for (const auto& entry : doc) {
        TestCharacteristics t;
        if (!entry.is_object() || !entry.contains("name") ||
            !entry.at("name").is_string())
            throw ParseError("test-set JSON: each entry needs a \"name\"");
        t.name = entry.at("name").get<std::string>();
        t.tpr = detail::rate_estimate_from_json(entry.value("tpr", nlohmann::json()),
                                                "test '" + t.name + "' tpr");
        t.tnr = detail::rate_estimate_from_json(entry.value("tnr", nlohmann::json()),
                                                "test '" + t.name + "' tnr");
        tests.push_back(std::move(t));
    }
    return TestSet(std::move(tests));
}

inline std::string test_set_to_json(const TestSet& tests) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& t : tests)
        doc.push_back({{"name", t.name},
                       {"tpr", detail::rate_estimate_to_json(t.tpr)},
                       {"tnr", detail::rate_estimate_to_json(t.tnr)}});
    return doc.dump(2) + "\n";
}

inline TestSet parse_test_set_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<TestCharacteristics> tests;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = detail::split_csv_line(line);
        if (!header_seen) {
            header_seen = true;
            if (!cells.empty() && cells[0] == "name") continue;  // header row
        }
        const std::string context = "test-set CSV line " +
                                    std::to_string(line_no);
        if (cells.size() != 7)
            throw ParseError(context + ": expected 7 columns, got " +
                             std::to_string(cells.size()));
        TestCharacteristics t;
        t.name = cells[0];
        const auto estimate = [&](int median_col) {
            RateEstimate est;
            est.median = Rate(detail::parse_double_cell(cells[median_col],
                                                        context));
            const bool has_lo = !cells[median_col + 1].empty();
            const bool has_hi = !cells[median_col + 2].empty();
            if (has_lo != has_hi)
                throw ValidationError(context + ": one-sided CI");
            if (has_lo) {
                est.ci_low = Rate(detail::parse_double_cell(
                    cells[median_col + 1], context));
                est.ci_high = Rate(detail::parse_double_cell(
                    cells[median_col + 2], context));
            }
            est.validate();
            return est;
        };
        t.tpr = estimate(1);
        t.tnr = estimate(4);
        tests.push_back(std::move(t));
    }
    return TestSet(std::move(tests));
}

inline std::string test_set_to_csv(const TestSet& tests) {
    std::string out = "name,tpr,tpr_lo,tpr_hi,tnr,tnr_lo,tnr_hi\n";
    const auto cells = [](const RateEstimate& est) {
        std::string s = format_double(est.median.value()) + ",";
        if (est.has_ci())
            s += format_double(est.ci_low->value()) + "," +
                 format_double(est.ci_high->value());
        else
            s += ",";
        return s;
    };
    for (const auto& t : tests)
        out += t.name + "," + cells(t.tpr) + "," + cells(t.tnr) + "\n";
    return out;
}

// Dispatches on extension: .json or .csv.
inline TestSet load_test_set(const std::string& path) {
    const auto text = detail::read_file(path);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
        return parse_test_set_json(text);
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
        return parse_test_set_csv(text);
    // fall back on sniffing
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '[' ? parse_test_set_json(text) : parse_test_set_csv(text);
    }
    throw ParseError("empty test-set file '" + path + "'");
}

// ---- strata ----------------------------------------------------------------

inline std::vector<StratumRecord> parse_strata_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<StratumRecord> strata;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = detail::split_csv_line(line);
        if (!header_seen) {
            header_seen = true;
            if (!cells.empty() && cells[0] == "label") continue;
        }
        const std::string context = "strata CSV line " + std::to_string(line_no);
        if (cells.size() != 7)
            throw ParseError(context + ": expected 7 columns, got " +
                             std::to_string(cells.size()));
        StratumRecord s;
        s.label = cells[0];
        s.population = detail::parse_count_cell(cells[1], context);
        if (!cells[2].empty())
            s.deaths = detail::parse_count_cell(cells[2], context);
        if (!cells[3].empty())
            s.hospitalizations = detail::parse_count_cell(cells[3], context);
        s.apparent.median = Rate(detail::parse_double_cell(cells[4], context));
        const bool has_lo = !cells[5].empty();
        const bool has_hi = !cells[6].empty();
        if (has_lo != has_hi)
            throw ValidationError(context + ": one-sided CI");
        if (has_lo) {
            s.apparent.ci_low =
                Rate(detail::parse_double_cell(cells[5], context));
            s.apparent.ci_high =
                Rate(detail::parse_double_cell(cells[6], context));
        }
        s.validate();
        strata.push_back(std::move(s));
    }
    if (strata.empty()) throw ParseError("strata CSV contains no rows");
    return strata;
}

inline std::vector<StratumRecord> load_strata_csv(const std::string& path) {
    return parse_strata_csv(detail::read_file(path));
}

}  // namespace testagg
