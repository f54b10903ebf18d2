#include "pcd/psa.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "pcd/errors.hpp"

namespace pcd {

std::string_view to_string(Method method) { return method == Method::base ? "base" : "pcd"; }

double salience_score(std::span<const QueryOutcome> outcomes) {
    if (outcomes.empty()) throw InsufficientDataError("salience_score: empty outcome set");
    const std::size_t length = outcomes.front().context_length;
    std::map<std::size_t, std::size_t> rank_counts;
    for (const auto& o : outcomes) {
        if (o.context_length != length) {
            throw ConfigError("salience_score: outcomes span several context lengths");
        }
        if (o.gold_rank < 1) throw DomainError("salience_score: gold rank must be >= 1");
        ++rank_counts[o.gold_rank];
    }
    double acc = 0.0;
    for (const auto& [rank, count] : rank_counts) {
        acc += static_cast<double>(count) / static_cast<double>(rank);
    }
    return acc / static_cast<double>(outcomes.size());
}

void RankHistogram::add(std::size_t rank) {
    if (rank <= 1) ++top1;
    else if (rank <= 8) ++top2_8;
    else if (rank <= 100) ++top9_100;
    else ++over100;
}

SalienceReport build_report(std::span<const QueryOutcome> outcomes, ReportFilter filter) {
    if (outcomes.empty()) throw InsufficientDataError("build_report: no outcomes");
    SalienceReport report;
    report.method = outcomes.front().method;
    report.filter = filter;

    std::map<std::size_t, std::vector<QueryOutcome>> by_length;
    for (const auto& o : outcomes) {
        if (o.method != report.method) {
            throw ConfigError("build_report: outcomes mix base and pcd methods");
        }
        if (filter == ReportFilter::incorrect_only && o.correct()) continue;
        by_length[o.context_length].push_back(o);
    }
    if (by_length.size() < 2) {
        throw InsufficientDataError("build_report: need at least two distinct context lengths");
    }
    for (const auto& [length, group] : by_length) {
        report.lengths.push_back(length);
        report.scores.push_back(salience_score(group));
        RankHistogram hist;
        for (const auto& o : group) hist.add(o.gold_rank);
        report.histograms.push_back(hist);
        report.n_queries.push_back(group.size());
    }
    return report;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("spearman: input lengths differ");
    if (x.size() < 2) throw InsufficientDataError("spearman: need at least two points");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

TrendStatistic trend_statistic(const SalienceReport& report) {
    if (report.lengths.size() < 3) {
        throw InsufficientDataError("trend_statistic: need at least three context lengths");
    }
    const bool constant = std::all_of(report.scores.begin(), report.scores.end(),
                                      [&](double s) { return s == report.scores.front(); });
    if (constant) return {0.0, true};
    std::vector<double> lengths(report.lengths.begin(), report.lengths.end());
    return {spearman(lengths, report.scores), false};
}

std::vector<QueryOutcome> select_method(std::span<const QueryOutcome> outcomes, Method method) {
    std::vector<QueryOutcome> out;
    for (const auto& o : outcomes) {
        if (o.method == method) out.push_back(o);
    }
    return out;
}

}  // namespace pcd
