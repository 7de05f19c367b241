#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "testagg/aggregation.hpp"
#include "testagg/core.hpp"
#include "testagg/rules.hpp"
#include "testagg/uncertainty.hpp"

namespace testagg {

// ---------------------------------------------------------------------------
// Enumerate every aggregation rule for a test set, map each to its ROC
// point, and extract the efficient frontier as the upper-left convex hull
// chain from (0,0) to (1,1).
// ---------------------------------------------------------------------------

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    AggregationRule rule;
};

// Pareto-efficient hull vertices, ordered by increasing (fpr, tpr); the
// polyline is concave and spans (0,0) .. (1,1).
struct RocFrontier {
    std::vector<RocPoint> points;
};

struct FrontierOptions {
    bool monotone_only = false;
    // opt-in for the n=5 full scan (2^32 rules, streamed)
    bool exhaustive = false;
    unsigned threads = 0;  // 0 = hardware concurrency; results independent
};

// Hard limits: full enumeration materialized up to n=4 (65,536 rules),
// streamed up to n=5 behind the opt-in flag; monotone up to n=5.
inline constexpr int kMaxFullMaterialized = 4;
inline constexpr int kMaxFullStreamed = 5;
inline constexpr int kMaxMonotone = 5;

inline std::uint64_t full_rule_count(int n) {
    if (n < 1 || n > kMaxFullStreamed)
        throw ValidationError("full rule count overflows beyond n = " +
                              std::to_string(kMaxFullStreamed));
    return std::uint64_t{1} << (std::uint64_t{1} << n);
}

// Monotone truth tables for n-input functions, ascending. Built by the
// half-table recursion: f = (g, h) with g = f at y1=0, h = f at y1=1,
// monotone iff g and h are monotone and g <= h pointwise.
inline std::vector<std::uint64_t> monotone_tables(int n) {
    if (n < 0 || n > kMaxMonotone)
        throw ValidationError("monotone enumeration limited to n <= " +
                              std::to_string(kMaxMonotone));
    std::vector<std::uint64_t> tables = {0, 1};  // n = 0: the two constants
    for (int k = 1; k <= n; ++k) {
        std::vector<std::uint64_t> next;
        const int half_bits = 1 << (k - 1);
        for (std::uint64_t h : tables)
            for (std::uint64_t g : tables)
                if ((g & ~h) == 0) next.push_back(g | (h << half_bits));
        std::sort(next.begin(), next.end());
        tables = std::move(next);
    }
    return tables;
}

// Dedekind numbers M(n): how many monotone rules exist.
inline std::uint64_t monotone_rule_count(int n) {
    return monotone_tables(n).size();
}

namespace detail {

inline void check_enumeration_limits(int n, bool monotone_only,
                                     bool exhaustive, bool materialized) {
    if (monotone_only) {
        if (n > kMaxMonotone)
            throw ValidationError("monotone enumeration limited to n <= " +
                                  std::to_string(kMaxMonotone));
        return;
    }
    if (n <= kMaxFullMaterialized) return;
    if (materialized)
        throw ValidationError(
            "full enumeration at n = " + std::to_string(n) +
            " yields 2^" + std::to_string(1 << n) +
            " points and cannot be materialized; use the streaming frontier "
            "(with the exhaustive opt-in) or monotone enumeration");
    if (n > kMaxFullStreamed)
        throw ValidationError("full enumeration limited to n <= " +
                              std::to_string(kMaxFullStreamed));
    if (!exhaustive)
        throw ValidationError(
            "full enumeration at n = 5 scans 2^32 rules; pass the "
            "exhaustive opt-in or restrict to monotone rules");
}

}  // namespace detail

// Streams every rule exactly once, in ascending truth-table order.
template <typename Fn>
void for_each_rule(int n, bool monotone_only, Fn&& fn,
                   bool exhaustive = false) {
    detail::check_enumeration_limits(n, monotone_only, exhaustive,
                                     /*materialized=*/false);
    if (monotone_only) {
        for (std::uint64_t table : monotone_tables(n))
            fn(AggregationRule(n, table));
        return;
    }
    const std::uint64_t count = full_rule_count(n);
    for (std::uint64_t table = 0; table < count; ++table)
        fn(AggregationRule(n, table));
}

inline std::uint64_t rule_count(int n, bool monotone_only) {
    return monotone_only ? monotone_rule_count(n) : full_rule_count(n);
}

// One ROC point per enumerated rule. Materializes the cloud, so the n=5
// full scan is excluded (see roc_frontier for the streaming path).
inline std::vector<RocPoint> roc_cloud(const TestSet& tests,
                                       bool monotone_only = false) {
    const int n = tests.size();
    detail::check_enumeration_limits(n, monotone_only, /*exhaustive=*/false,
                                     /*materialized=*/true);
    const auto dist = outcome_distribution(tests);
    std::vector<RocPoint> cloud;
    cloud.reserve(static_cast<std::size_t>(rule_count(n, monotone_only)));
    for_each_rule(n, monotone_only, [&](const AggregationRule& rule) {
        const auto [tpr, tnr] = aggregate_raw(dist, rule.table);
        cloud.push_back({1.0 - tnr, tpr, rule});
    });
    return cloud;
}

// ---------------------------------------------------------------------------
// 2-D convex hull (Andrew's monotone chain). Returns hull vertices in
// counterclockwise order starting from the lexicographically smallest
// point; collinear interior points and duplicates are dropped.
// ---------------------------------------------------------------------------

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// Tolerance for treating three points as collinear.
inline constexpr double kHullCollinearTol = 1e-12;

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline std::vector<Point2> convex_hull(std::vector<Point2> points) {
    if (points.empty())
        throw ValidationError("convex hull of an empty point set");
    std::sort(points.begin(), points.end(),
              [](const Point2& a, const Point2& b) {
                  return a.x != b.x ? a.x < b.x : a.y < b.y;
              });
    points.erase(std::unique(points.begin(), points.end(),
                             [](const Point2& a, const Point2& b) {
                                 return a.x == b.x && a.y == b.y;
                             }),
                 points.end());
    const std::size_t m = points.size();
    if (m <= 2) return points;

    std::vector<Point2> hull(2 * m);
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i) {  // lower hull
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <=
                             kHullCollinearTol)
            --k;
        hull[k++] = points[i];
    }
    for (std::size_t i = m - 1, lower = k + 1; i-- > 0;) {  // upper hull
        while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <=
                                 kHullCollinearTol)
            --k;
        hull[k++] = points[i];
    }
    hull.resize(k - 1);  // last point repeats the first
    return hull;
}

// ---------------------------------------------------------------------------
// Pareto staircase: the undominated (fpr, tpr) points, fpr and tpr both
// strictly increasing. Exact coordinate ties keep the smallest truth
// table, which makes results deterministic however the scan is split.
// ---------------------------------------------------------------------------

namespace detail {

class ParetoStaircase {
public:
    void insert(double fpr, double tpr, std::uint64_t table) {
        auto next = points_.lower_bound(fpr);  // first with fpr' >= fpr
        if (next != points_.end() && next->first == fpr) {
            if (tpr < next->second.tpr) return;  // dominated (same fpr)
            if (tpr == next->second.tpr) {       // exact tie: smallest table
                next->second.table = std::min(next->second.table, table);
                return;
            }
        } else if (next != points_.begin()) {
            auto prev = std::prev(next);
            if (prev->second.tpr >= tpr) return;  // dominated from the left
        }
        // dominates: erase points with fpr' >= fpr and tpr' <= tpr
        while (next != points_.end() && next->second.tpr <= tpr)
            next = points_.erase(next);
        points_[fpr] = Entry{tpr, table};
    }

    void merge(const ParetoStaircase& other) {
        for (const auto& [fpr, e] : other.points_) insert(fpr, e.tpr, e.table);
    }

    std::vector<RocPoint> to_points(int n) const {
        std::vector<RocPoint> out;
        out.reserve(points_.size());
        for (const auto& [fpr, e] : points_)
            out.push_back({fpr, e.tpr, AggregationRule(n, e.table)});
        return out;
    }

private:
    struct Entry {
        double tpr;
        std::uint64_t table;
    };
    std::map<double, Entry> points_;
};

// FPR sum for a table: healthy-outcome probability mass mapped positive.
inline double fpr_sum_direct(const OutcomeDistribution& dist,
                             std::uint64_t table) {
    double fpr = 0.0;
    const int r = static_cast<int>(dist.healthy.size());
    for (int j = 0; j < r; ++j)
        if ((table >> j) & 1u) fpr += dist.healthy[j];
    return fpr;
}

inline double tpr_sum_direct(const OutcomeDistribution& dist,
                             std::uint64_t table) {
    double tpr = 0.0;
    const int r = static_cast<int>(dist.diseased.size());
    for (int j = 0; j < r; ++j)
        if ((table >> j) & 1u) tpr += dist.diseased[j];
    return tpr;
}

// Scans rules in fixed-size index chunks (so results cannot depend on the
// thread count or scheduling) and keeps only each chunk's Pareto
// staircase; per-chunk results merge in index order. Per-rule sums are
// computed directly except for the n=5 full scan, which walks tables in
// Gray-code order inside a chunk and updates the two sums incrementally
// per flipped bit (drift < 1e-12 over a chunk, reset at chunk starts).
inline ParetoStaircase pareto_scan(const TestSet& tests, bool monotone_only,
                                   bool exhaustive, unsigned threads,
                                   std::uint64_t chunk_size = 0,
                                   bool force_incremental = false) {
    const int n = tests.size();
    detail::check_enumeration_limits(n, monotone_only, exhaustive,
                                     /*materialized=*/false);
    const auto dist = outcome_distribution(tests);
    const std::uint64_t total = rule_count(n, monotone_only);
    const std::uint64_t kChunk =
        chunk_size != 0 ? chunk_size : std::uint64_t{1} << 20;
    const std::uint64_t n_chunks = (total + kChunk - 1) / kChunk;
    const bool incremental =
        !monotone_only && (n > kMaxFullMaterialized || force_incremental);

    std::vector<std::uint64_t> monotone_storage;
    if (monotone_only) monotone_storage = monotone_tables(n);

    std::vector<ParetoStaircase> chunk_results(
        static_cast<std::size_t>(n_chunks));
    std::atomic<std::uint64_t> next_chunk{0};

    const auto worker = [&] {
        for (;;) {
            const std::uint64_t c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            const std::uint64_t begin = c * kChunk;
            const std::uint64_t end = std::min(total, begin + kChunk);
            ParetoStaircase stairs;
            if (monotone_only) {
                for (std::uint64_t idx = begin; idx < end; ++idx) {
                    const std::uint64_t table = monotone_storage[idx];
                    stairs.insert(fpr_sum_direct(dist, table),
                                  tpr_sum_direct(dist, table), table);
                }
            } else if (!incremental) {
                for (std::uint64_t table = begin; table < end; ++table)
                    stairs.insert(fpr_sum_direct(dist, table),
                                  tpr_sum_direct(dist, table), table);
            } else {
                std::uint64_t table = begin ^ (begin >> 1);
                double tpr_sum = tpr_sum_direct(dist, table);
                double fpr_sum = fpr_sum_direct(dist, table);
                stairs.insert(fpr_sum, tpr_sum, table);
                for (std::uint64_t idx = begin + 1; idx < end; ++idx) {
                    const std::uint64_t gray = idx ^ (idx >> 1);
                    const std::uint64_t flipped = gray ^ table;
                    const int j = std::countr_zero(flipped);
                    if (gray & flipped) {  // outcome j flipped to positive
                        tpr_sum += dist.diseased[j];
                        fpr_sum += dist.healthy[j];
                    } else {
                        tpr_sum -= dist.diseased[j];
                        fpr_sum -= dist.healthy[j];
                    }
                    table = gray;
                    stairs.insert(fpr_sum, tpr_sum, table);
                }
            }
            chunk_results[static_cast<std::size_t>(c)] = std::move(stairs);
        }
    };

    const unsigned n_threads = static_cast<unsigned>(std::min<std::uint64_t>(
        detail::resolve_threads(threads), n_chunks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (unsigned t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                try {
                    worker();
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    ParetoStaircase merged;
    for (const auto& stairs : chunk_results) merged.merge(stairs);
    return merged;
}

}  // namespace detail

// Every Pareto-efficient (fpr, tpr) point with its smallest-table witness,
// including hull-collinear efficient points.
inline std::vector<RocPoint> pareto_set(const TestSet& tests,
                                        const FrontierOptions& options = {}) {
    return detail::pareto_scan(tests, options.monotone_only,
                               options.exhaustive, options.threads)
        .to_points(tests.size());
}

// Upper-left convex hull chain of the ROC cloud, from (0,0) to (1,1).
inline RocFrontier roc_frontier(const TestSet& tests,
                                const FrontierOptions& options = {}) {
    const int n = tests.size();
    auto candidates = pareto_set(tests, options);

    // Anchor the chain: the all-negative rule sits at (0,0) and the
    // all-positive rule at (1,1) in every cloud. They are usually
    // dominated, so add them back explicitly.
    std::vector<RocPoint> pts;
    pts.push_back({0.0, 0.0, named_rule(RuleKind::AllNeg, n)});
    for (auto& p : candidates) pts.push_back(std::move(p));
    pts.push_back({1.0, 1.0, named_rule(RuleKind::AllPos, n)});

    std::sort(pts.begin(), pts.end(), [](const RocPoint& a, const RocPoint& b) {
        if (a.fpr != b.fpr) return a.fpr < b.fpr;
        if (a.tpr != b.tpr) return a.tpr < b.tpr;
        return a.rule.table < b.rule.table;
    });
    // exact duplicates keep the smallest table
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const RocPoint& a, const RocPoint& b) {
                              return a.fpr == b.fpr && a.tpr == b.tpr;
                          }),
              pts.end());

    // Concave chain: successive slopes strictly decreasing. cross >= -tol
    // means the middle point is below or on the segment, so it goes.
    std::vector<RocPoint> chain;
    for (const auto& p : pts) {
        while (chain.size() >= 2) {
            const auto& o = chain[chain.size() - 2];
            const auto& a = chain[chain.size() - 1];
            const double turn = (a.fpr - o.fpr) * (p.tpr - o.tpr) -
                                (a.tpr - o.tpr) * (p.fpr - o.fpr);
            if (turn >= -kHullCollinearTol)
                chain.pop_back();
            else
                break;
        }
        chain.push_back(p);
    }

    // ROC frontier points must not dip below the chance diagonal.
    RocFrontier frontier;
    for (const auto& p : chain)
        if (p.tpr >= p.fpr - kHullCollinearTol) frontier.points.push_back(p);
    return frontier;
}

}  // namespace testagg
