// Posterior salience attenuation metrics.
//
// The salience score at context length L is the mean reciprocal rank of the
// gold token over a query set, where rank = 1 + #{v : P(v) > P(gold)}.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pcd {

enum class Method { base, pcd };

std::string_view to_string(Method method);

struct QueryOutcome {
    std::size_t gold_rank = 1;       // >= 1
    std::size_t context_length = 0;  // L in tokens
    Method method = Method::base;
    bool gold_masked = false;  // gold fell outside the plausibility set
    std::size_t gold_distance = 0;
    std::size_t query_index = 0;

    bool correct() const { return gold_rank == 1; }
};

// Mean of 1 / gold_rank. The sum is accumulated per distinct rank in rank
// order so the result does not depend on the input order.
double salience_score(std::span<const QueryOutcome> outcomes);

// Gold-rank buckets: 1, 2-8, 9-100, >100.
struct RankHistogram {
    std::size_t top1 = 0;
    std::size_t top2_8 = 0;
    std::size_t top9_100 = 0;
    std::size_t over100 = 0;

    void add(std::size_t rank);
    std::size_t total() const { return top1 + top2_8 + top9_100 + over100; }
    bool operator==(const RankHistogram&) const = default;
};

enum class ReportFilter {
    all,
    incorrect_only,  // only failing queries (rank > 1)
};

struct SalienceReport {
    Method method = Method::base;
    ReportFilter filter = ReportFilter::all;
    std::vector<std::size_t> lengths;  // ascending
    std::vector<double> scores;        // S(L)
    std::vector<RankHistogram> histograms;
    std::vector<std::size_t> n_queries;

    bool operator==(const SalienceReport&) const = default;
};

// Groups outcomes by context length. All outcomes must share one method and
// at least two distinct lengths must remain after filtering.
SalienceReport build_report(std::span<const QueryOutcome> outcomes,
                            ReportFilter filter = ReportFilter::all);

struct TrendStatistic {
    double rho = 0.0;         // Spearman correlation of (length, S(L))
    bool degenerate = false;  // S(L) constant; rho reported as 0
};

TrendStatistic trend_statistic(const SalienceReport& report);

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

std::vector<QueryOutcome> select_method(std::span<const QueryOutcome> outcomes, Method method);

}  // namespace pcd
