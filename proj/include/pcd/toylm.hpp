// Deterministic single-head retrieval model used to exhibit salience
// attenuation and the effect of positional contrastive decoding.
//
// Context layout (positions from 0):
//
//     k_1 v_1 k_2 v_2 ... k_n v_n SEP QM k_probe
//
// The head attends from the final position. Its query is the rotated content
// of the probe key; the key at position i is the rotated content of token
// i-1 (shifted keys), so the probe matches the *value* position of its pair
// directly. Attention weights are a softmax over temperature-scaled raw
// scores and the output is the weighted sum of value-position contents.
// Logits are inner products of that output with every token embedding.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pcd/decoder.hpp"
#include "pcd/psa.hpp"
#include "pcd/rope.hpp"

namespace pcd {

// Token ids: keys [0, n_keys), values [n_keys, n_keys + n_values), then the
// separator and the query marker.
struct ToyVocab {
    std::size_t n_keys = 4096;
    std::size_t n_values = 16;

    void validate() const;
    std::size_t size() const { return n_keys + n_values + 2; }
    std::size_t key(std::size_t i) const { return i; }
    std::size_t value(std::size_t i) const { return n_keys + i; }
    std::size_t separator() const { return n_keys + n_values; }
    std::size_t query_marker() const { return n_keys + n_values + 1; }
    bool is_key(std::size_t t) const { return t < n_keys; }
    bool is_value(std::size_t t) const { return t >= n_keys && t < n_keys + n_values; }
};

struct RetrievalTask {
    std::vector<std::size_t> tokens;
    std::size_t gold = 0;           // value token paired with the probe key
    std::size_t gold_position = 0;  // index of that value in `tokens`
    std::size_t gold_distance = 0;  // probe position - gold_position
    std::size_t probe_slot = 0;     // pair index of the probe

    std::size_t probe_position() const { return tokens.size() - 1; }
};

// Context length in tokens for n pairs, and the inverse (floor).
constexpr std::size_t task_length(std::size_t n_pairs) { return 2 * n_pairs + 3; }
constexpr std::size_t pairs_for_length(std::size_t length) {
    return length < 5 ? 0 : (length - 3) / 2;
}

// Keys are drawn without replacement, values with replacement. With no
// probe_slot the probed pair is drawn uniformly.
RetrievalTask generate_task(const ToyVocab& vocab, std::size_t n_pairs,
                            std::optional<std::size_t> probe_slot, std::uint64_t seed);

struct ToyModelConfig {
    RopeConfig rope{128, 1.0e4};
    double temperature = 10.0;  // tau, softmax inverse-temperature scale
    std::uint64_t embed_seed = 0;
    // Embeddings are rejection-sampled until every pair satisfies
    // |<e_a, e_b>| <= max_coherence.
    double max_coherence = 0.5;

    void validate() const;
};

struct LogitPair {
    LogitVector standard;
    LogitVector perturbed;
};

class ToyModel {
public:
    ToyModel(const ToyVocab& vocab, const ToyModelConfig& cfg);

    const ToyVocab& vocab() const { return vocab_; }
    const ToyModelConfig& config() const { return cfg_; }
    int dim() const { return cfg_.rope.dim; }
    std::span<const double> embedding(std::size_t token) const;

    // Largest |<e_a, e_b>| over distinct tokens.
    double max_coherence() const;

    LogitVector forward_logits(const RetrievalTask& task, const FrequencySchedule& sched) const;

    // Attention weights over positions 1..probe (index 0 of the result is
    // position 1).
    std::vector<double> attention_weights(const RetrievalTask& task,
                                          const FrequencySchedule& sched) const;

    // Un-scaled score between the probe query and the key at the gold value
    // position.
    double matched_score(const RetrievalTask& task, const FrequencySchedule& sched) const;

private:
    void check_task(const RetrievalTask& task, const FrequencySchedule& sched) const;

    ToyVocab vocab_;
    ToyModelConfig cfg_;
    std::vector<double> embed_;  // |V| x d, row-major
};

// Where the probe lands in each generated task.
struct ProbePlacement {
    // 0: uniform over all pairs. k > 0: uniform over the last k pairs
    // (gold distances 3, 5, ..., 2k+1).
    std::size_t nearest_slots = 0;
};

struct EvalConfig {
    std::vector<std::size_t> lengths{64, 128, 256, 512, 1024, 2048};
    std::size_t n_queries = 200;
    ContrastParams params{};
    OverRotationConfig over{};
    std::uint64_t seed = 0;
    bool base_only = false;
    ProbePlacement placement{};
    unsigned threads = 1;

    void validate(const ToyModel& model) const;
};

// Seed for query q at a given length; shared by evaluate() and the ablation
// driver so both see the same tasks.
std::uint64_t task_seed(std::uint64_t seed, std::size_t length, std::size_t query);

RetrievalTask make_eval_task(const ToyModel& model, const EvalConfig& cfg, std::size_t length,
                             std::size_t query);

// Runs base (standard schedule) and, unless base_only, PCD (contrast against
// the over-rotated schedule). Ordered by (length, query, method). Outcomes
// carry the requested length; the task itself has 2 * pairs_for_length + 3
// tokens, which is one fewer for even lengths.
std::vector<QueryOutcome> evaluate(const ToyModel& model, const EvalConfig& cfg);

}  // namespace pcd
