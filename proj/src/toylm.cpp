#include "pcd/toylm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "pcd/errors.hpp"
#include "pcd/random.hpp"

namespace pcd {

void ToyVocab::validate() const {
    if (n_keys < 2 || n_values < 2) {
        throw ConfigError("toy vocabulary needs at least 2 keys and 2 values");
    }
}

RetrievalTask generate_task(const ToyVocab& vocab, std::size_t n_pairs,
                            std::optional<std::size_t> probe_slot, std::uint64_t seed) {
    vocab.validate();
    if (n_pairs < 1) throw ConfigError("generate_task: need at least one key-value pair");
    if (n_pairs > vocab.n_keys) {
        throw ConfigError("generate_task: " + std::to_string(n_pairs) + " pairs exceed the " +
                          std::to_string(vocab.n_keys) + " available keys");
    }
    if (probe_slot && *probe_slot >= n_pairs) {
        throw ConfigError("generate_task: probe slot out of range");
    }
    Rng rng(seed);

    // Partial Fisher-Yates over the key ids.
    std::vector<std::size_t> keys(vocab.n_keys);
    std::iota(keys.begin(), keys.end(), std::size_t{0});
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const std::size_t j = i + rng.below(vocab.n_keys - i);
        std::swap(keys[i], keys[j]);
    }

    RetrievalTask task;
    task.tokens.reserve(task_length(n_pairs));
    std::vector<std::size_t> values(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        values[i] = vocab.value(rng.below(vocab.n_values));
        task.tokens.push_back(vocab.key(keys[i]));
        task.tokens.push_back(values[i]);
    }
    task.probe_slot = probe_slot ? *probe_slot : rng.below(n_pairs);
    task.tokens.push_back(vocab.separator());
    task.tokens.push_back(vocab.query_marker());
    task.tokens.push_back(vocab.key(keys[task.probe_slot]));

    task.gold = values[task.probe_slot];
    task.gold_position = 2 * task.probe_slot + 1;
    task.gold_distance = task.probe_position() - task.gold_position;
    return task;
}

void ToyModelConfig::validate() const {
    rope.validate();
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ConfigError("temperature tau must be > 0");
    }
    if (!(max_coherence > 0.0 && max_coherence < 1.0)) {
        throw ConfigError("max_coherence must lie in (0, 1)");
    }
}

ToyModel::ToyModel(const ToyVocab& vocab, const ToyModelConfig& cfg) : vocab_(vocab), cfg_(cfg) {
    vocab_.validate();
    cfg_.validate();
    const std::size_t d = static_cast<std::size_t>(cfg_.rope.dim);
    const std::size_t n = vocab_.size();
    embed_.assign(n * d, 0.0);

    Rng rng(derive_seed(cfg_.embed_seed, 0x656d626564ULL));
    std::vector<double> v(d);
    constexpr int kMaxAttempts = 10000;
    for (std::size_t t = 0; t < n; ++t) {
        int attempts = 0;
        for (;;) {
            if (++attempts > kMaxAttempts) {
                throw ConfigError("could not sample " + std::to_string(n) +
                                  " embeddings with coherence <= " +
                                  std::to_string(cfg_.max_coherence) + " in d=" +
                                  std::to_string(d));
            }
            double norm = 0.0;
            for (auto& x : v) {
                x = rng.normal();
                norm += x * x;
            }
            norm = std::sqrt(norm);
            for (auto& x : v) x /= norm;
            bool ok = true;
            for (std::size_t u = 0; u < t && ok; ++u) {
                const double* e = &embed_[u * d];
                double dot = 0.0;
                for (std::size_t i = 0; i < d; ++i) dot += e[i] * v[i];
                ok = std::abs(dot) <= cfg_.max_coherence;
            }
            if (ok) break;
        }
        std::copy(v.begin(), v.end(), embed_.begin() + static_cast<std::ptrdiff_t>(t * d));
    }
}

std::span<const double> ToyModel::embedding(std::size_t token) const {
    if (token >= vocab_.size()) throw DimensionError("unknown token " + std::to_string(token));
    const std::size_t d = static_cast<std::size_t>(cfg_.rope.dim);
    return {embed_.data() + token * d, d};
}

double ToyModel::max_coherence() const {
    const std::size_t d = static_cast<std::size_t>(cfg_.rope.dim);
    double worst = 0.0;
    for (std::size_t a = 0; a < vocab_.size(); ++a) {
        for (std::size_t b = a + 1; b < vocab_.size(); ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += embed_[a * d + i] * embed_[b * d + i];
            worst = std::max(worst, std::abs(dot));
        }
    }
    return worst;
}

void ToyModel::check_task(const RetrievalTask& task, const FrequencySchedule& sched) const {
    if (sched.dim() != cfg_.rope.dim) {
        throw DimensionError("schedule dimension does not match the model");
    }
    if (task.tokens.size() < 2) throw DimensionError("task too short");
    for (std::size_t t : task.tokens) {
        if (t >= vocab_.size()) throw DimensionError("unknown token " + std::to_string(t));
    }
}

std::vector<double> ToyModel::attention_weights(const RetrievalTask& task,
                                                const FrequencySchedule& sched) const {
    check_task(task, sched);
    const std::size_t m = task.probe_position();
    const std::size_t d = static_cast<std::size_t>(cfg_.rope.dim);
    const auto query = rotate(embedding(task.tokens[m]), static_cast<std::int64_t>(m), sched);

    std::vector<double> scores(m);
    std::vector<double> key(d);
    for (std::size_t i = 1; i <= m; ++i) {
        rotate_into(embedding(task.tokens[i - 1]), static_cast<std::int64_t>(i), sched, key);
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += query[c] * key[c];
        scores[i - 1] = cfg_.temperature * dot;
    }
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (auto& s : scores) {
        s = std::exp(s - top);
        total += s;
    }
    for (auto& s : scores) s /= total;
    return scores;
}

LogitVector ToyModel::forward_logits(const RetrievalTask& task,
                                     const FrequencySchedule& sched) const {
    const auto weights = attention_weights(task, sched);
    const std::size_t d = static_cast<std::size_t>(cfg_.rope.dim);
    std::vector<double> out(d, 0.0);
    for (std::size_t i = 1; i <= weights.size(); ++i) {
        const auto e = embedding(task.tokens[i]);
        const double w = weights[i - 1];
        for (std::size_t c = 0; c < d; ++c) out[c] += w * e[c];
    }
    std::vector<double> logits(vocab_.size());
    for (std::size_t t = 0; t < logits.size(); ++t) {
        const double* e = &embed_[t * d];
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += e[c] * out[c];
        logits[t] = dot;
    }
    return LogitVector(std::move(logits));
}

double ToyModel::matched_score(const RetrievalTask& task, const FrequencySchedule& sched) const {
    check_task(task, sched);
    const std::size_t m = task.probe_position();
    const std::size_t g = task.gold_position;
    const auto query = rotate(embedding(task.tokens[m]), static_cast<std::int64_t>(m), sched);
    const auto key = rotate(embedding(task.tokens[g - 1]), static_cast<std::int64_t>(g), sched);
    double dot = 0.0;
    for (std::size_t c = 0; c < query.size(); ++c) dot += query[c] * key[c];
    return dot;
}

void EvalConfig::validate(const ToyModel& model) const {
    if (lengths.empty()) throw ConfigError("evaluate: no context lengths given");
    if (n_queries == 0) throw ConfigError("evaluate: n_queries must be >= 1");
    for (std::size_t len : lengths) {
        const std::size_t pairs = pairs_for_length(len);
        if (pairs < 1) {
            throw ConfigError("context length " + std::to_string(len) +
                              " is too short (minimum 5 tokens)");
        }
        if (pairs > model.vocab().n_keys) {
            throw ConfigError("context length " + std::to_string(len) + " needs " +
                              std::to_string(pairs) + " distinct keys but the vocabulary has " +
                              std::to_string(model.vocab().n_keys));
        }
    }
    if (!base_only) {
        params.validate(model.vocab().size());
        over.validate(model.config().rope);
    }
}

std::uint64_t task_seed(std::uint64_t seed, std::size_t length, std::size_t query) {
    return derive_seed(seed, length, query);
}

RetrievalTask make_eval_task(const ToyModel& model, const EvalConfig& cfg, std::size_t length,
                             std::size_t query) {
    const std::size_t pairs = pairs_for_length(length);
    const std::uint64_t seed = task_seed(cfg.seed, length, query);
    std::optional<std::size_t> slot;
    if (cfg.placement.nearest_slots > 0) {
        const std::size_t k = std::min(cfg.placement.nearest_slots, pairs);
        slot = pairs - 1 - Rng(derive_seed(seed, 0x736c6f74ULL)).below(k);
    }
    return generate_task(model.vocab(), pairs, slot, seed);
}

namespace {

void evaluate_one(const ToyModel& model, const EvalConfig& cfg, const FrequencySchedule& std_sched,
                  const FrequencySchedule* over_sched, std::size_t length, std::size_t query,
                  QueryOutcome* out) {
    const auto task = make_eval_task(model, cfg, length, query);
    const auto base = model.forward_logits(task, std_sched);
    const auto base_rank = gold_rank(base, task.gold);
    out[0] = {base_rank.rank, length, Method::base, base_rank.masked,
              task.gold_distance, query};
    if (over_sched == nullptr) return;
    const auto perturbed = model.forward_logits(task, *over_sched);
    const auto contrasted = contrast_logits(base, perturbed, cfg.params);
    const auto pcd_rank = gold_rank(contrasted, task.gold);
    out[1] = {pcd_rank.rank, length, Method::pcd, pcd_rank.masked,
              task.gold_distance, query};
}

}  // namespace

std::vector<QueryOutcome> evaluate(const ToyModel& model, const EvalConfig& cfg) {
    cfg.validate(model);
    const auto std_sched = compute_frequencies(model.config().rope);
    std::optional<FrequencySchedule> over_sched;
    if (!cfg.base_only) over_sched = over_rotated_schedule(model.config().rope, cfg.over);

    const std::size_t per_query = cfg.base_only ? 1 : 2;
    const std::size_t jobs = cfg.lengths.size() * cfg.n_queries;
    std::vector<QueryOutcome> outcomes(jobs * per_query);
    const auto run = [&](std::size_t job) {
        const std::size_t length = cfg.lengths[job / cfg.n_queries];
        const std::size_t query = job % cfg.n_queries;
        evaluate_one(model, cfg, std_sched, over_sched ? &*over_sched : nullptr, length, query,
                     &outcomes[job * per_query]);
    };

    const unsigned workers = std::clamp<unsigned>(cfg.threads, 1u, static_cast<unsigned>(jobs));
    if (workers == 1) {
        for (std::size_t job = 0; job < jobs; ++job) run(job);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t job = w; job < jobs; job += workers) run(job);
            });
        }
    }
    // Each job writes its own slots, so the order is (length, query, method).
    return outcomes;
}

}  // namespace pcd
