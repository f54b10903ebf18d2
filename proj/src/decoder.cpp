#include "pcd/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "pcd/errors.hpp"

namespace pcd {

namespace {

void check_scores(const std::vector<double>& scores, bool allow_neg_inf) {
    for (double s : scores) {
        if (std::isfinite(s)) continue;
        if (allow_neg_inf && s == -std::numeric_limits<double>::infinity()) continue;
        throw DomainError("logit scores must be finite");
    }
}

}  // namespace

LogitVector::LogitVector(std::vector<double> scores) : scores_(std::move(scores)) {
    check_scores(scores_, false);
}

LogitVector LogitVector::masked(std::vector<double> scores) {
    check_scores(scores, true);
    LogitVector out;
    out.scores_ = std::move(scores);
    return out;
}

void ContrastParams::validate(std::size_t vocab_size) const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw ConfigError("beta must be >= 0, got " + std::to_string(beta));
    }
    if (gamma < 1 || gamma > vocab_size) {
        throw ConfigError("gamma must lie in [1, |V|=" + std::to_string(vocab_size) + "], got " +
                          std::to_string(gamma));
    }
}

std::vector<std::size_t> top_gamma_set(const LogitVector& base, std::size_t gamma) {
    if (gamma > base.vocab_size()) {
        throw ConfigError("top_gamma_set: gamma " + std::to_string(gamma) + " exceeds |V| " +
                          std::to_string(base.vocab_size()));
    }
    std::vector<std::size_t> idx(base.vocab_size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto better = [&](std::size_t a, std::size_t b) {
        return base[a] > base[b] || (base[a] == base[b] && a < b);
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(gamma), idx.end(),
                      better);
    idx.resize(gamma);
    return idx;
}

LogitVector contrast_logits(const LogitVector& base, const LogitVector& perturbed,
                            const ContrastParams& params, OutsidePolicy policy) {
    if (base.vocab_size() != perturbed.vocab_size()) {
        throw DimensionError("contrast_logits: vocabulary sizes differ (" +
                             std::to_string(base.vocab_size()) + " vs " +
                             std::to_string(perturbed.vocab_size()) + ")");
    }
    params.validate(base.vocab_size());

    std::vector<double> out;
    if (policy == OutsidePolicy::keep_base) {
        out = base.scores();
    } else {
        out.assign(base.vocab_size(), -std::numeric_limits<double>::infinity());
    }
    for (std::size_t v : top_gamma_set(base, params.gamma)) {
        out[v] = (1.0 + params.beta) * base[v] - params.beta * perturbed[v];
    }
    return LogitVector::masked(std::move(out));
}

std::size_t argmax_token(const LogitVector& logits) {
    const auto& s = logits.scores();
    std::size_t best = s.size();
    for (std::size_t v = 0; v < s.size(); ++v) {
        if (s[v] == -std::numeric_limits<double>::infinity()) continue;
        if (best == s.size() || s[v] > s[best]) best = v;
    }
    if (best == s.size()) throw DomainError("argmax_token: every score is -inf");
    return best;
}

GoldRank gold_rank(const LogitVector& logits, std::size_t gold) {
    if (gold >= logits.vocab_size()) {
        throw DimensionError("gold_rank: gold token " + std::to_string(gold) +
                             " outside vocabulary of size " + std::to_string(logits.vocab_size()));
    }
    const double g = logits[gold];
    if (g == -std::numeric_limits<double>::infinity()) {
        return {logits.vocab_size(), true};
    }
    std::size_t above = 0;
    for (double s : logits.scores()) above += s > g ? 1 : 0;
    return {1 + above, false};
}

}  // namespace pcd
