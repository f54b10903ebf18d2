#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pcd/errors.hpp"
#include "pcd/psa.hpp"
#include "pcd/toylm.hpp"

namespace pcd {
namespace {

const ToyModel& default_model() {
    static const ToyModel model(ToyVocab{}, ToyModelConfig{});
    return model;
}

// Small model for the brute-force oracle.
const ToyModel& small_model() {
    static const ToyModel model(ToyVocab{40, 6}, ToyModelConfig{{16, 1.0e4}, 8.0, 3, 0.9});
    return model;
}

// Explicit d x d rotation for position p.
std::vector<std::vector<double>> rotation_matrix(const FrequencySchedule& sched, std::int64_t p) {
    const std::size_t d = 2 * sched.blocks();
    std::vector<std::vector<double>> r(d, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < sched.blocks(); ++j) {
        const double a = static_cast<double>(p) * sched.freqs[j];
        r[2 * j][2 * j] = std::cos(a);
        r[2 * j][2 * j + 1] = -std::sin(a);
        r[2 * j + 1][2 * j] = std::sin(a);
        r[2 * j + 1][2 * j + 1] = std::cos(a);
    }
    return r;
}

std::vector<double> matvec(const std::vector<std::vector<double>>& r, std::span<const double> v) {
    std::vector<double> out(r.size(), 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
        for (std::size_t c = 0; c < v.size(); ++c) out[i] += r[i][c] * v[c];
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

std::vector<double> reference_logits(const ToyModel& model, const RetrievalTask& task,
                                     const FrequencySchedule& sched) {
    const std::size_t m = task.probe_position();
    const auto q = matvec(rotation_matrix(sched, static_cast<std::int64_t>(m)),
                         model.embedding(task.tokens[m]));
    std::vector<double> w(m);
    for (std::size_t i = 1; i <= m; ++i) {
        const auto k = matvec(rotation_matrix(sched, static_cast<std::int64_t>(i)),
                             model.embedding(task.tokens[i - 1]));
        w[i - 1] = std::exp(model.config().temperature * dot(q, k));
    }
    double z = 0.0;
    for (double x : w) z += x;
    std::vector<double> out(static_cast<std::size_t>(model.dim()), 0.0);
    for (std::size_t i = 1; i <= m; ++i) {
        const auto e = model.embedding(task.tokens[i]);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[i - 1] / z * e[c];
    }
    std::vector<double> logits(model.vocab().size());
    for (std::size_t t = 0; t < logits.size(); ++t) logits[t] = dot(model.embedding(t), out);
    return logits;
}

TEST(ToyVocab, Layout) {
    const ToyVocab v{};
    EXPECT_EQ(v.size(), v.n_keys + v.n_values + 2);
    EXPECT_TRUE(v.is_key(v.key(0)));
    EXPECT_TRUE(v.is_value(v.value(v.n_values - 1)));
    EXPECT_FALSE(v.is_value(v.separator()));
    EXPECT_NE(v.separator(), v.query_marker());
    EXPECT_THROW((ToyVocab{1, 5}.validate()), ConfigError);
    EXPECT_THROW((ToyVocab{5, 1}.validate()), ConfigError);
}

TEST(GenerateTask, SinglePair) {
    const ToyVocab v{};
    const auto t = generate_task(v, 1, std::nullopt, 42);
    ASSERT_EQ(t.tokens.size(), 5u);
    EXPECT_EQ(t.tokens[0], t.tokens[4]);
    EXPECT_EQ(t.tokens[2], v.separator());
    EXPECT_EQ(t.tokens[3], v.query_marker());
    EXPECT_EQ(t.gold, t.tokens[1]);
    EXPECT_EQ(t.gold_distance, 3u);
}

TEST(GenerateTask, Deterministic) {
    const ToyVocab v{};
    const auto a = generate_task(v, 300, std::nullopt, 9);
    const auto b = generate_task(v, 300, std::nullopt, 9);
    EXPECT_EQ(a.tokens, b.tokens);
    EXPECT_EQ(a.gold, b.gold);
    EXPECT_NE(generate_task(v, 300, std::nullopt, 10).tokens, a.tokens);
}

TEST(GenerateTask, FirstSlotDistance) {
    const auto t = generate_task(ToyVocab{}, 64, 0, 1);
    EXPECT_EQ(t.gold_distance, 129u);
    EXPECT_EQ(t.gold_position, 1u);
}

TEST(GenerateTask, StructuralInvariants) {
    const ToyVocab v{};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::size_t n = 1 + seed * 13;
        const auto t = generate_task(v, n, std::nullopt, seed);
        ASSERT_EQ(t.tokens.size(), task_length(n));
        EXPECT_EQ(pairs_for_length(t.tokens.size()), n);
        std::size_t probe_hits = 0;
        std::vector<std::size_t> keys;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_TRUE(v.is_key(t.tokens[2 * i]));
            EXPECT_TRUE(v.is_value(t.tokens[2 * i + 1]));
            keys.push_back(t.tokens[2 * i]);
            probe_hits += t.tokens[2 * i] == t.tokens.back() ? 1 : 0;
        }
        EXPECT_EQ(probe_hits, 1u);
        std::sort(keys.begin(), keys.end());
        EXPECT_EQ(std::adjacent_find(keys.begin(), keys.end()), keys.end());
        EXPECT_GE(t.gold_distance, 2u);
        EXPECT_EQ(t.tokens[t.gold_position], t.gold);
        EXPECT_EQ(t.tokens[t.gold_position - 1], t.tokens.back());
    }
}

TEST(GenerateTask, Errors) {
    EXPECT_THROW(generate_task(ToyVocab{8, 4}, 9, std::nullopt, 0), ConfigError);
    EXPECT_THROW(generate_task(ToyVocab{8, 4}, 0, std::nullopt, 0), ConfigError);
    EXPECT_THROW(generate_task(ToyVocab{8, 4}, 4, 4, 0), ConfigError);
}

TEST(ToyModel, EmbeddingsUnitNormAndIncoherent) {
    const auto& model = default_model();
    for (std::size_t t = 0; t < model.vocab().size(); t += 97) {
        EXPECT_NEAR(std::sqrt(dot(model.embedding(t), model.embedding(t))), 1.0, 1e-12);
    }
    EXPECT_LE(model.max_coherence(), 0.5);
    EXPECT_THROW(model.embedding(model.vocab().size()), DimensionError);
}

TEST(ToyModel, ConfigErrors) {
    ToyModelConfig cfg;
    cfg.temperature = 0.0;
    EXPECT_THROW(ToyModel(ToyVocab{4, 4}, cfg), ConfigError);
    cfg = ToyModelConfig{};
    cfg.rope.dim = 7;
    EXPECT_THROW(ToyModel(ToyVocab{4, 4}, cfg), ConfigError);
    // 600 tokens cannot be pairwise near-orthogonal in 4 dimensions.
    cfg = ToyModelConfig{};
    cfg.rope.dim = 4;
    EXPECT_THROW(ToyModel(ToyVocab{594, 4}, cfg), ConfigError);
}

TEST(ForwardLogits, MatchesExplicitRotationMatrices) {
    const auto& model = small_model();
    const auto std_sched = compute_frequencies(model.config().rope);
    const auto over_sched = over_rotated_schedule(model.config().rope, {1.0e2, 0.2});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto task = generate_task(model.vocab(), 1 + seed % 20, std::nullopt, seed);
        for (const auto* sched : {&std_sched, &over_sched}) {
            const auto got = model.forward_logits(task, *sched);
            const auto want = reference_logits(model, task, *sched);
            for (std::size_t t = 0; t < want.size(); ++t) {
                EXPECT_NEAR(got[t], want[t], 1e-12) << "seed " << seed << " token " << t;
            }
        }
    }
}

TEST(ForwardLogits, AttentionWeightsFormDistribution) {
    const auto& model = small_model();
    const auto task = generate_task(model.vocab(), 12, std::nullopt, 4);
    const auto w = model.attention_weights(task, compute_frequencies(model.config().rope));
    ASSERT_EQ(w.size(), task.probe_position());
    double total = 0.0;
    for (double x : w) {
        EXPECT_GE(x, 0.0);
        total += x;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(ForwardLogits, Errors) {
    const auto& model = small_model();
    auto task = generate_task(model.vocab(), 3, std::nullopt, 0);
    EXPECT_THROW(model.forward_logits(task, compute_frequencies({32, 1.0e4})), DimensionError);
    task.tokens[1] = model.vocab().size();
    EXPECT_THROW(model.forward_logits(task, compute_frequencies(model.config().rope)),
                 DimensionError);
}

TEST(ForwardLogits, SinglePairSolved) {
    const auto& model = default_model();
    const auto sched = compute_frequencies(model.config().rope);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto task = generate_task(model.vocab(), 1, std::nullopt, seed);
        EXPECT_EQ(gold_rank(model.forward_logits(task, sched), task.gold).rank, 1u);
    }
}

TEST(ForwardLogits, ZeroBetaDecodeEqualsBase) {
    const auto& model = default_model();
    const auto std_sched = compute_frequencies(model.config().rope);
    const auto over_sched = over_rotated_schedule(model.config().rope, {});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto task = generate_task(model.vocab(), 100, std::nullopt, seed);
        const auto base = model.forward_logits(task, std_sched);
        const auto pcd =
            contrast_logits(base, model.forward_logits(task, over_sched), {0.0, model.vocab().size()});
        EXPECT_EQ(pcd.scores(), base.scores());
        EXPECT_EQ(gold_rank(pcd, task.gold).rank, gold_rank(base, task.gold).rank);
    }
}

RetrievalTask task_at_distance(const ToyModel& model, std::size_t distance, std::uint64_t seed) {
    const std::size_t n = 1024;
    return generate_task(model.vocab(), n, n - (distance - 1) / 2, seed);
}

TEST(MatchedScore, OverRotationLowersScore) {
    const auto& model = default_model();
    const auto std_sched = compute_frequencies(model.config().rope);
    const auto over_sched = over_rotated_schedule(model.config().rope, {});
    for (std::size_t distance : {3, 9, 17, 33, 65, 129, 257, 513, 1025}) {
        double mean_std = 0.0, mean_over = 0.0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const auto task = task_at_distance(model, distance, seed);
            ASSERT_EQ(task.gold_distance, distance);
            const double s = model.matched_score(task, std_sched);
            const double o = model.matched_score(task, over_sched);
            if (distance <= 65) EXPECT_LT(o, s) << "distance " << distance << " seed " << seed;
            mean_std += s;
            mean_over += o;
        }
        EXPECT_LT(mean_over, mean_std) << "distance " << distance;
    }
}

TEST(MatchedScore, DecaysWithDistance) {
    const auto& model = default_model();
    const auto sched = compute_frequencies(model.config().rope);
    // Log-uniform odd distances in [3, 2047].
    std::vector<double> distances, means;
    for (int i = 0; i < 24; ++i) {
        auto d = static_cast<std::size_t>(std::exp(std::log(3.0) + i * std::log(2047.0 / 3.0) / 23.0));
        d |= 1u;
        if (!distances.empty() && static_cast<double>(d) == distances.back()) continue;
        double acc = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            acc += model.matched_score(task_at_distance(model, d, seed), sched);
        }
        distances.push_back(static_cast<double>(d));
        means.push_back(acc / 100.0);
    }
    EXPECT_LE(spearman(distances, means), -0.8);
}

TEST(Evaluate, DeterministicAndThreadIndependent) {
    const auto& model = default_model();
    EvalConfig cfg;
    cfg.lengths = {64, 256};
    cfg.n_queries = 12;
    cfg.seed = 5;
    const auto a = evaluate(model, cfg);
    const auto b = evaluate(model, cfg);
    cfg.threads = 3;
    const auto c = evaluate(model, cfg);
    ASSERT_EQ(a.size(), 2u * 2u * 12u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].gold_rank, b[i].gold_rank);
        EXPECT_EQ(a[i].gold_rank, c[i].gold_rank);
        EXPECT_EQ(a[i].method, i % 2 == 0 ? Method::base : Method::pcd);
        EXPECT_EQ(a[i].query_index, (i / 2) % 12);
        EXPECT_EQ(a[i].context_length, i < 24 ? 64u : 256u);
    }
}

TEST(Evaluate, BaseOnlyAndErrors) {
    const auto& model = default_model();
    EvalConfig cfg;
    cfg.lengths = {64, 128};
    cfg.n_queries = 3;
    cfg.base_only = true;
    const auto out = evaluate(model, cfg);
    EXPECT_EQ(out.size(), 6u);
    for (const auto& o : out) EXPECT_EQ(o.method, Method::base);
    cfg.n_queries = 0;
    EXPECT_THROW(evaluate(model, cfg), ConfigError);
    cfg.n_queries = 3;
    cfg.lengths = {4};
    EXPECT_THROW(evaluate(model, cfg), ConfigError);
    cfg.lengths = {2 * 4096 + 5};
    EXPECT_THROW(evaluate(model, cfg), ConfigError);
}

TEST(Evaluate, NearestPlacement) {
    const auto& model = default_model();
    EvalConfig cfg;
    cfg.placement.nearest_slots = 3;
    for (std::size_t q = 0; q < 30; ++q) {
        const auto task = make_eval_task(model, cfg, 2048, q);
        EXPECT_TRUE(task.gold_distance == 3 || task.gold_distance == 5 || task.gold_distance == 7);
    }
}

TEST(Evaluate, PcdPreservesLocalRetrieval) {
    const auto& model = default_model();
    EvalConfig cfg;
    cfg.lengths = {2048};
    cfg.n_queries = 200;
    cfg.placement.nearest_slots = 3;
    const auto out = evaluate(model, cfg);
    std::size_t base = 0, pcd = 0;
    for (const auto& o : out) {
        ASSERT_LE(o.gold_distance, 8u);
        (o.method == Method::base ? base : pcd) += o.correct() ? 1 : 0;
    }
    EXPECT_GE(static_cast<double>(pcd) / 200.0, static_cast<double>(base) / 200.0 - 0.02);
}

}  // namespace
}  // namespace pcd
