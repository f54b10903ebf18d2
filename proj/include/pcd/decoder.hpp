// Positional contrastive decoding over a top-gamma plausibility set.
//
//     L~ = (1 + beta) L - beta L*
//
// L are the standard (long-aware) logits, L* the logits from the
// over-rotated (local-aware) pass. Only the gamma best tokens under L are
// eligible; everything else is masked to -inf unless the caller asks for the
// keep-base policy.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pcd {

class LogitVector {
public:
    LogitVector() = default;
    // All scores must be finite.
    explicit LogitVector(std::vector<double> scores);
    // Like the constructor, but -inf entries (masked tokens) are allowed.
    static LogitVector masked(std::vector<double> scores);

    std::size_t vocab_size() const { return scores_.size(); }
    const std::vector<double>& scores() const { return scores_; }
    double operator[](std::size_t token) const { return scores_[token]; }

private:
    std::vector<double> scores_;
};

struct ContrastParams {
    double beta = 2.5;       // contrast intensity, >= 0
    std::size_t gamma = 30;  // plausibility-set size, 1 <= gamma <= |V|

    void validate(std::size_t vocab_size) const;
};

enum class OutsidePolicy {
    mask,       // tokens outside the top-gamma set get -inf
    keep_base,  // tokens outside the set keep their standard score
};

// Indices of the gamma highest standard scores, best first; ties go to the
// lower token index.
std::vector<std::size_t> top_gamma_set(const LogitVector& base, std::size_t gamma);

LogitVector contrast_logits(const LogitVector& base, const LogitVector& perturbed,
                            const ContrastParams& params,
                            OutsidePolicy policy = OutsidePolicy::mask);

// Greedy selection; ties go to the lower index. Throws when every score is -inf.
std::size_t argmax_token(const LogitVector& logits);

struct GoldRank {
    std::size_t rank = 0;  // 1 + #{v : score_v > score_gold}
    bool masked = false;   // gold was -inf; rank is the |V| sentinel
};

GoldRank gold_rank(const LogitVector& logits, std::size_t gold);

}  // namespace pcd
