// testagg: design and evaluate repeated-diagnostic-test protocols.
//
// Subcommands: aggregate, frontier, prevalence, cost, predictive, simulate.
// Machine-readable output (fractions) goes to stdout as JSON or CSV; a short
// human summary (percentages) goes to stderr. Every output carries a run
// manifest so results can be reproduced exactly.

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "testagg/testagg.hpp"

using nlohmann::json;
using namespace testagg;

namespace {

// exit codes: 2 parse, 3 arity/validity, 4 numerical failure
constexpr int kExitParse = 2;
constexpr int kExitValidity = 3;
constexpr int kExitNumeric = 4;

std::string iso8601_timestamp() {
    std::time_t t;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
        t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    else
        t = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

struct GlobalOptions {
    std::uint64_t seed = 0;
    long long samples = 1'000'000;
    unsigned threads = 0;
    std::string format = "json";
};

json make_manifest(const std::string& command, const json& inputs,
                   const GlobalOptions& global) {
    return json{{"command", command},
                {"inputs", inputs},
                {"seed", global.seed},
                {"samples", global.samples},
                {"threads", global.threads},
                {"tool_version", kVersion},
                {"timestamp", iso8601_timestamp()}};
}

void emit_json(const json& doc) { std::cout << doc.dump(2) << "\n"; }

void emit_csv_manifest(const json& manifest) {
    std::cout << "# manifest: " << manifest.dump() << "\n";
}

json rate_estimate_json(const RateEstimate& est) {
    json j{{"median", est.median.value()}};
    if (est.has_ci()) {
        j["lo"] = est.ci_low->value();
        j["hi"] = est.ci_high->value();
    }
    return j;
}

json severity_json(const SeverityRatio& r) {
    json j{{"median", r.median}};
    if (r.ci_low) j["lo"] = *r.ci_low;
    if (r.ci_high) j["hi"] = *r.ci_high;
    return j;
}

MonteCarloConfig mc_config(const GlobalOptions& global) {
    MonteCarloConfig mc;
    mc.n_samples = global.samples;
    mc.seed = global.seed;
    mc.threads = global.threads;
    return mc;
}

std::vector<int> parse_order(const std::string& text, int n) {
    std::vector<int> order;
    if (text.empty()) {
        for (int i = 1; i <= n; ++i) order.push_back(i);
        return order;
    }
    std::string cell;
    const auto flush = [&] {
        if (cell.empty())
            throw ParseError("empty entry in administration order");
        order.push_back(
            static_cast<int>(std::strtol(cell.c_str(), nullptr, 10)));
        cell.clear();
    };
    for (char c : text) {
        if (c == ',')
            flush();
        else if (!std::isspace(static_cast<unsigned char>(c)))
            cell += c;
    }
    flush();
    return order;
}

// ---- aggregate --------------------------------------------------------------

int cmd_aggregate(const GlobalOptions& global, const std::string& tests_path,
                  const std::string& rule_spec, bool with_ci) {
    const auto tests = load_test_set(tests_path);
    const auto rule = rule_from_spec(rule_spec, tests.size());
    const auto agg = aggregate(tests, rule);

    json result{{"rule", rule_to_string(rule)},
                {"dnf", rule_to_dnf(rule)},
                {"n_tests", tests.size()},
                {"tpr", agg.tpr.value()},
                {"tnr", agg.tnr.value()},
                {"fpr", agg.fpr()}};

    bool any_ci = false;
    for (const auto& t : tests)
        any_ci |= t.tpr.has_nondegenerate_ci() || t.tnr.has_nondegenerate_ci();
    if (with_ci && any_ci) {
        std::vector<RateEstimate> inputs;
        for (const auto& t : tests) {
            inputs.push_back(t.tpr);
            inputs.push_back(t.tnr);
        }
        const int n = tests.size();
        const auto sampled_rates = [&](std::span<const double> draws,
                                       bool want_tpr) {
            double tpr_s = 0.0, tnr_s = 0.0;
            for (int j = 0; j < (1 << n); ++j) {
                double p = 1.0, q = 1.0;
                for (int i = 1; i <= n; ++i) {
                    const double tpr_i = draws[2 * (i - 1)];
                    const double tnr_i = draws[2 * (i - 1) + 1];
                    if (outcome_bit(j, n, i)) {
                        p *= tpr_i;
                        q *= 1.0 - tnr_i;
                    } else {
                        p *= 1.0 - tpr_i;
                        q *= tnr_i;
                    }
                }
                if (rule.output(j))
                    tpr_s += p;
                else
                    tnr_s += q;
            }
            return want_tpr ? tpr_s : tnr_s;
        };
        const auto mc = mc_config(global);
        const auto tpr_ci = propagate_ci(
            inputs,
            [&](std::span<const double> d) {
                return std::clamp(sampled_rates(d, true), 0.0, 1.0);
            },
            mc);
        const auto tnr_ci = propagate_ci(
            inputs,
            [&](std::span<const double> d) {
                return std::clamp(sampled_rates(d, false), 0.0, 1.0);
            },
            mc);
        result["ci"] = {{"tpr", rate_estimate_json(tpr_ci)},
                        {"tnr", rate_estimate_json(tnr_ci)},
                        {"fpr",
                         {{"median", 1.0 - tnr_ci.median.value()},
                          {"lo", 1.0 - tnr_ci.ci_high->value()},
                          {"hi", 1.0 - tnr_ci.ci_low->value()}}}};
    }

    const json manifest = make_manifest(
        "aggregate",
        {{"tests", tests_path}, {"rule", rule_spec}, {"ci", with_ci}}, global);
    std::fprintf(stderr, "TPR_S = %.4g%%  TNR_S = %.6g%%  FPR_S = %.4g%%\n",
                 agg.tpr.value() * 100, agg.tnr.value() * 100,
                 agg.fpr() * 100);
    if (global.format == "csv") {
        emit_csv_manifest(manifest);
        std::cout << "metric,median,lo,hi\n";
        const auto row = [&](const char* name, double v, const json* ci) {
            std::cout << name << "," << format_double(v);
            if (ci) {
                std::cout << "," << format_double((*ci)["lo"].get<double>())
                          << "," << format_double((*ci)["hi"].get<double>());
            } else {
                std::cout << ",,";
            }
            std::cout << "\n";
        };
        const json* tpr_ci = result.contains("ci") ? &result["ci"]["tpr"] : nullptr;
        const json* tnr_ci = result.contains("ci") ? &result["ci"]["tnr"] : nullptr;
        const json* fpr_ci = result.contains("ci") ? &result["ci"]["fpr"] : nullptr;
        row("tpr", agg.tpr.value(), tpr_ci);
        row("tnr", agg.tnr.value(), tnr_ci);
        row("fpr", agg.fpr(), fpr_ci);
    } else {
        result["manifest"] = manifest;
        emit_json(result);
    }
    return 0;
}

// ---- frontier ---------------------------------------------------------------

int cmd_frontier(const GlobalOptions& global, const std::string& tests_path,
                 bool monotone, bool exhaustive, bool cloud, bool pareto) {
    const auto tests = load_test_set(tests_path);
    FrontierOptions options;
    options.monotone_only = monotone;
    options.exhaustive = exhaustive;
    options.threads = global.threads;

    std::vector<RocPoint> points;
    std::string mode = "frontier";
    if (cloud) {
        mode = "cloud";
        points = roc_cloud(tests, monotone);
    } else if (pareto) {
        mode = "pareto";
        points = pareto_set(tests, options);
    } else {
        points = roc_frontier(tests, options).points;
    }

    const json manifest = make_manifest("frontier",
                                        {{"tests", tests_path},
                                         {"monotone", monotone},
                                         {"exhaustive", exhaustive},
                                         {"mode", mode}},
                                        global);
    std::fprintf(stderr, "%s: %zu points over %llu rules (n = %d)\n",
                 mode.c_str(), points.size(),
                 static_cast<unsigned long long>(
                     rule_count(tests.size(), monotone)),
                 tests.size());
    if (global.format == "csv") {
        emit_csv_manifest(manifest);
        std::cout << "fpr,tpr,rule\n";
        for (const auto& p : points)
            std::cout << format_double(p.fpr) << "," << format_double(p.tpr)
                      << "," << rule_to_string(p.rule) << "\n";
    } else {
        json arr = json::array();
        for (const auto& p : points)
            arr.push_back({{"fpr", p.fpr},
                           {"tpr", p.tpr},
                           {"rule", rule_to_string(p.rule)},
                           {"dnf", rule_to_dnf(p.rule)}});
        emit_json(json{{"manifest", manifest}, {"mode", mode},
                       {"points", arr}});
    }
    return 0;
}

// ---- prevalence -------------------------------------------------------------

json prevalence_report_for(const RateEstimate& apparent, const TestSet& tests,
                           const AggregationRule& rule,
                           const MonteCarloConfig& mc, const std::string& label,
                           long long population,
                           std::optional<long long> deaths,
                           std::optional<long long> hospitalizations) {
    json entry{{"label", label}};
    if (population > 0) entry["population"] = population;

    PrevalenceResult result;
    std::vector<double> samples;
    const bool needs_mc = apparent.has_nondegenerate_ci() ||
                          [&] {
                              for (const auto& t : tests)
                                  if (t.tpr.has_nondegenerate_ci() ||
                                      t.tnr.has_nondegenerate_ci())
                                      return true;
                              return false;
                          }();
    if (needs_mc) {
        result = rogan_gladen_ci(apparent, tests, rule, mc, &samples);
    } else {
        result = rogan_gladen(apparent.median, aggregate(tests, rule));
        result.apparent = apparent;
    }
    entry["apparent"] = rate_estimate_json(result.apparent);
    entry["corrected"] = rate_estimate_json(result.corrected);
    entry["clamped"] = result.clamped;
    entry["clamp_fraction"] = result.clamp_fraction;
    entry["rejected_samples"] = result.rejected_samples;

    if ((deaths || hospitalizations) && population > 0) {
        const auto severity =
            severity_ratios(population, deaths.value_or(0),
                            hospitalizations.value_or(0), result, samples);
        if (deaths) entry["ifr"] = severity_json(severity.ifr);
        if (hospitalizations) entry["ihr"] = severity_json(severity.ihr);
    }
    return entry;
}

int cmd_prevalence(const GlobalOptions& global, const std::string& tests_path,
                   const std::string& rule_spec, double apparent,
                   double apparent_lo, double apparent_hi,
                   const std::string& strata_path, long long population,
                   long long deaths, long long hospitalizations) {
    const auto tests = load_test_set(tests_path);
    const auto rule = rule_from_spec(rule_spec, tests.size());
    const auto agg = aggregate(tests, rule);
    const auto mc = mc_config(global);

    json strata_out = json::array();
    if (!strata_path.empty()) {
        for (const auto& stratum : load_strata_csv(strata_path))
            strata_out.push_back(prevalence_report_for(
                stratum.apparent, tests, rule, mc, stratum.label,
                stratum.population, stratum.deaths,
                stratum.hospitalizations));
    } else {
        if (apparent < 0)
            throw ValidationError(
                "either --apparent or --strata must be given");
        auto est = RateEstimate(Rate(apparent));
        if (apparent_lo >= 0 || apparent_hi >= 0) {
            if (apparent_lo < 0 || apparent_hi < 0)
                throw ValidationError(
                    "--apparent-lo and --apparent-hi go together");
            est = RateEstimate(Rate(apparent), Rate(apparent_lo),
                               Rate(apparent_hi));
        }
        strata_out.push_back(prevalence_report_for(
            est, tests, rule, mc, "overall", population,
            deaths >= 0 ? std::optional<long long>(deaths) : std::nullopt,
            hospitalizations >= 0
                ? std::optional<long long>(hospitalizations)
                : std::nullopt));
    }

    const json manifest = make_manifest("prevalence",
                                        {{"tests", tests_path},
                                         {"rule", rule_spec},
                                         {"strata", strata_path},
                                         {"apparent", apparent}},
                                        global);
    for (const auto& s : strata_out) {
        const double med = s["corrected"]["median"].get<double>() * 100;
        std::fprintf(stderr, "%-10s corrected prevalence %.3g%%",
                     s["label"].get<std::string>().c_str(), med);
        if (s["corrected"].contains("lo"))
            std::fprintf(stderr, " (%.3g -- %.3g%%)",
                         s["corrected"]["lo"].get<double>() * 100,
                         s["corrected"]["hi"].get<double>() * 100);
        std::fprintf(stderr, "\n");
    }
    emit_json(json{{"manifest", manifest},
                   {"rule", rule_to_string(rule)},
                   {"aggregate",
                    {{"tpr", agg.tpr.value()},
                     {"tnr", agg.tnr.value()},
                     {"fpr", agg.fpr()}}},
                   {"strata", strata_out}});
    return 0;
}

// ---- cost -------------------------------------------------------------------

int cmd_cost(const GlobalOptions& global, const std::string& tests_path,
             double tpr1, double tnr1, const std::string& kind_name,
             double step, const std::string& rule_spec,
             const std::string& order_text, double prevalence) {
    TestCharacteristics first{"first", RateEstimate::exact(0.0),
                              RateEstimate::exact(0.0)};
    std::optional<TestSet> tests;
    if (!tests_path.empty()) {
        tests = load_test_set(tests_path);
        first = (*tests)[0];
    } else {
        if (tpr1 < 0 || tnr1 < 0)
            throw ValidationError("need --tests or both --tpr1 and --tnr1");
        first = {"first", RateEstimate::exact(tpr1),
                 RateEstimate::exact(tnr1)};
    }

    const json manifest = make_manifest("cost",
                                        {{"tests", tests_path},
                                         {"kind", kind_name},
                                         {"rule", rule_spec},
                                         {"step", step}},
                                        global);

    if (!rule_spec.empty()) {
        // general mode: one exact report for an arbitrary rule and order
        if (!tests)
            throw ValidationError("--rule mode requires --tests");
        const auto rule = rule_from_spec(rule_spec, tests->size());
        const auto order = parse_order(order_text, tests->size());
        const auto report = series_cost_general(Rate(prevalence), *tests,
                                                rule, order);
        std::fprintf(stderr,
                     "expected %.4g tests/person (parallel %g, ratio %.4g)\n",
                     report.expected_tests_series, report.tests_parallel,
                     report.ratio);
        emit_json(json{{"manifest", manifest},
                       {"rule", rule_to_string(rule)},
                       {"prevalence", report.prevalence},
                       {"expected_tests_series", report.expected_tests_series},
                       {"tests_parallel", report.tests_parallel},
                       {"ratio", std::isfinite(report.ratio)
                                     ? json(report.ratio)
                                     : json()}});
        return 0;
    }

    const SeriesKind kind =
        kind_name == "or" ? SeriesKind::Or : SeriesKind::And;
    json rows = json::array();
    if (global.format == "csv") {
        emit_csv_manifest(manifest);
        std::cout << "f,expected_tests_series,ratio\n";
    }
    for (double f = 0.0; f <= 1.0 + 1e-12; f += step) {
        const auto report =
            series_cost(Rate(std::min(f, 1.0)), first, kind);
        if (global.format == "csv")
            std::cout << format_double(report.prevalence) << ","
                      << format_double(report.expected_tests_series) << ","
                      << format_double(report.ratio) << "\n";
        else
            rows.push_back({{"f", report.prevalence},
                            {"expected_tests_series",
                             report.expected_tests_series},
                            {"ratio", report.ratio}});
    }
    if (global.format != "csv")
        emit_json(json{{"manifest", manifest},
                       {"kind", kind_name},
                       {"critical_prevalence",
                        critical_prevalence(first).value()},
                       {"curve", rows}});
    else
        std::fprintf(stderr, "critical prevalence f_c = %.4g\n",
                     critical_prevalence(first).value());
    return 0;
}

// ---- predictive -------------------------------------------------------------

int cmd_predictive(const GlobalOptions& global, const std::string& tests_path,
                   const std::string& rule_spec, double tpr, double tnr,
                   double step) {
    double tpr_s = tpr, tnr_s = tnr;
    if (!tests_path.empty()) {
        const auto tests = load_test_set(tests_path);
        const auto rule = rule_from_spec(
            rule_spec.empty() ? "and" : rule_spec, tests.size());
        const auto agg = aggregate(tests, rule);
        tpr_s = agg.tpr.value();
        tnr_s = agg.tnr.value();
    } else if (tpr < 0 || tnr < 0) {
        throw ValidationError("need --tests or both --tpr and --tnr");
    }

    const json manifest = make_manifest("predictive",
                                        {{"tests", tests_path},
                                         {"rule", rule_spec},
                                         {"tpr", tpr_s},
                                         {"tnr", tnr_s},
                                         {"step", step}},
                                        global);
    json rows = json::array();
    if (global.format == "csv") {
        emit_csv_manifest(manifest);
        std::cout << "f,ppv,npv\n";
    }
    for (double f = 0.0; f <= 1.0 + 1e-12; f += step) {
        const Rate fr(std::min(f, 1.0));
        std::optional<double> p, n;
        try {
            p = ppv(fr, Rate(tpr_s), Rate(tnr_s)).value();
        } catch (const NumericError&) {
        }
        try {
            n = npv(fr, Rate(tpr_s), Rate(tnr_s)).value();
        } catch (const NumericError&) {
        }
        if (global.format == "csv") {
            std::cout << format_double(fr.value()) << ","
                      << (p ? format_double(*p) : "") << ","
                      << (n ? format_double(*n) : "") << "\n";
        } else {
            rows.push_back({{"f", fr.value()},
                            {"ppv", p ? json(*p) : json()},
                            {"npv", n ? json(*n) : json()}});
        }
    }
    if (global.format != "csv")
        emit_json(json{{"manifest", manifest}, {"curve", rows}});
    return 0;
}

// ---- simulate ---------------------------------------------------------------

int cmd_simulate(const GlobalOptions& global, const std::string& tests_path,
                 const std::string& rule_spec, double prevalence,
                 long long individuals, const std::string& order_text,
                 bool parallel) {
    const auto tests = load_test_set(tests_path);
    const auto rule = rule_from_spec(rule_spec, tests.size());
    const auto order = parse_order(order_text, tests.size());
    const auto report =
        simulate(Rate(prevalence), tests, rule, order, individuals,
                 global.seed, global.threads, !parallel);

    const json manifest = make_manifest("simulate",
                                        {{"tests", tests_path},
                                         {"rule", rule_spec},
                                         {"prevalence", prevalence},
                                         {"individuals", individuals},
                                         {"order", order_text},
                                         {"parallel", parallel}},
                                        global);
    std::fprintf(stderr,
                 "empirical TPR %.4g%%  FPR %.4g%%  tests/person %.4g\n",
                 report.empirical_tpr * 100, report.empirical_fpr * 100,
                 static_cast<double>(report.tests_administered) /
                     report.n_individuals);
    emit_json(json{
        {"manifest", manifest},
        {"report",
         {{"n_individuals", report.n_individuals},
          {"true_positives", report.true_positives},
          {"false_positives", report.false_positives},
          {"true_negatives", report.true_negatives},
          {"false_negatives", report.false_negatives},
          {"tests_administered", report.tests_administered},
          {"empirical_tpr", std::isfinite(report.empirical_tpr)
                                ? json(report.empirical_tpr)
                                : json()},
          {"empirical_fpr", std::isfinite(report.empirical_fpr)
                                ? json(report.empirical_fpr)
                                : json()},
          {"empirical_apparent_prevalence",
           report.empirical_apparent_prevalence}}}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"repeated-diagnostic-test protocol designer"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "PRNG seed (default 0)");
    app.add_option("--samples", global.samples,
                   "Monte Carlo sample count (default 1e6)");
    app.add_option("--threads", global.threads,
                   "worker cap; 0 = hardware (results are identical "
                   "regardless)");
    app.add_option("--format", global.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));

    // aggregate
    auto* agg_cmd = app.add_subcommand(
        "aggregate", "aggregate sensitivity/specificity of a rule");
    std::string agg_tests, agg_rule;
    bool agg_ci = false;
    agg_cmd->add_option("--tests", agg_tests, "test-set file (JSON or CSV)")
        ->required();
    agg_cmd->add_option("--rule", agg_rule, "rule spec")->required();
    agg_cmd->add_flag("--ci", agg_ci, "propagate 95% CIs by Monte Carlo");

    // frontier
    auto* fr_cmd =
        app.add_subcommand("frontier", "efficient ROC frontier of all rules");
    std::string fr_tests;
    bool fr_monotone = false, fr_exhaustive = false, fr_cloud = false,
         fr_pareto = false;
    fr_cmd->add_option("--tests", fr_tests, "test-set file")->required();
    fr_cmd->add_flag("--monotone", fr_monotone, "monotone rules only");
    fr_cmd->add_flag("--exhaustive", fr_exhaustive,
                     "opt in to the full n=5 scan (2^32 rules)");
    fr_cmd->add_flag("--cloud", fr_cloud, "dump every rule's ROC point");
    fr_cmd->add_flag("--pareto", fr_pareto,
                     "dump the full Pareto set incl. hull-collinear points");

    // prevalence
    auto* pr_cmd = app.add_subcommand(
        "prevalence", "aggregation-aware prevalence correction");
    std::string pr_tests, pr_rule, pr_strata;
    double pr_apparent = -1, pr_lo = -1, pr_hi = -1;
    long long pr_population = 0, pr_deaths = -1, pr_hosp = -1;
    pr_cmd->add_option("--tests", pr_tests, "test-set file")->required();
    pr_cmd->add_option("--rule", pr_rule, "rule spec")->required();
    pr_cmd->add_option("--apparent", pr_apparent, "measured prevalence");
    pr_cmd->add_option("--apparent-lo", pr_lo, "measured 2.5% quantile");
    pr_cmd->add_option("--apparent-hi", pr_hi, "measured 97.5% quantile");
    pr_cmd->add_option("--strata", pr_strata, "strata CSV file");
    pr_cmd->add_option("--population", pr_population, "population size");
    pr_cmd->add_option("--deaths", pr_deaths, "cumulative deaths");
    pr_cmd->add_option("--hospitalizations", pr_hosp,
                       "cumulative hospitalizations");

    // cost
    auto* cost_cmd = app.add_subcommand(
        "cost", "series-testing economy (parallel/series ratio curve)");
    std::string cost_tests, cost_kind = "and", cost_rule, cost_order;
    double cost_tpr1 = -1, cost_tnr1 = -1, cost_step = 0.001,
           cost_prevalence = 0.0;
    cost_cmd->add_option("--tests", cost_tests, "test-set file");
    cost_cmd->add_option("--tpr1", cost_tpr1, "first-test sensitivity");
    cost_cmd->add_option("--tnr1", cost_tnr1, "first-test specificity");
    cost_cmd->add_option("--kind", cost_kind, "aggregation kind")
        ->check(CLI::IsMember({"and", "or"}));
    cost_cmd->add_option("--step", cost_step, "prevalence grid step");
    cost_cmd->add_option("--rule", cost_rule,
                         "general mode: arbitrary rule spec");
    cost_cmd->add_option("--order", cost_order,
                         "general mode: administration order, e.g. 2,1,3");
    cost_cmd->add_option("--prevalence", cost_prevalence,
                         "general mode: prevalence");

    // predictive
    auto* pv_cmd = app.add_subcommand(
        "predictive", "PPV and NPV curves over prevalence");
    std::string pv_tests, pv_rule;
    double pv_tpr = -1, pv_tnr = -1, pv_step = 0.001;
    pv_cmd->add_option("--tests", pv_tests, "test-set file");
    pv_cmd->add_option("--rule", pv_rule, "rule spec (default and)");
    pv_cmd->add_option("--tpr", pv_tpr, "aggregate sensitivity");
    pv_cmd->add_option("--tnr", pv_tnr, "aggregate specificity");
    pv_cmd->add_option("--step", pv_step, "prevalence grid step");

    // simulate
    auto* sim_cmd = app.add_subcommand(
        "simulate", "stochastic per-individual simulation");
    std::string sim_tests, sim_rule, sim_order;
    double sim_prevalence = 0.0;
    long long sim_individuals = 1'000'000;
    bool sim_parallel = false;
    sim_cmd->add_option("--tests", sim_tests, "test-set file")->required();
    sim_cmd->add_option("--rule", sim_rule, "rule spec")->required();
    sim_cmd->add_option("--prevalence", sim_prevalence, "true prevalence")
        ->required();
    sim_cmd->add_option("--individuals", sim_individuals,
                        "population size (default 1e6)");
    sim_cmd->add_option("--order", sim_order, "administration order");
    sim_cmd->add_flag("--parallel", sim_parallel,
                      "administer every test (no short-circuit)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParse;
    }

    try {
        if (agg_cmd->parsed())
            return cmd_aggregate(global, agg_tests, agg_rule, agg_ci);
        if (fr_cmd->parsed())
            return cmd_frontier(global, fr_tests, fr_monotone, fr_exhaustive,
                                fr_cloud, fr_pareto);
        if (pr_cmd->parsed())
            return cmd_prevalence(global, pr_tests, pr_rule, pr_apparent,
                                  pr_lo, pr_hi, pr_strata, pr_population,
                                  pr_deaths, pr_hosp);
        if (cost_cmd->parsed())
            return cmd_cost(global, cost_tests, cost_tpr1, cost_tnr1,
                            cost_kind, cost_step, cost_rule, cost_order,
                            cost_prevalence);
        if (pv_cmd->parsed())
            return cmd_predictive(global, pv_tests, pv_rule, pv_tpr, pv_tnr,
                                  pv_step);
        if (sim_cmd->parsed())
            return cmd_simulate(global, sim_tests, sim_rule, sim_prevalence,
                                sim_individuals, sim_order, sim_parallel);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitParse;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidity;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
