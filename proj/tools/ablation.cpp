#include "ablation.hpp"

#include <algorithm>
#include <map>
#include <thread>
#include <utility>

#include "pcd/decoder.hpp"
#include "pcd/errors.hpp"
#include "pcd/psa.hpp"
#include "pcd/rope.hpp"

namespace pcd::cli {

namespace {

template <class T>
void require_nonempty(const std::vector<T>& values, const char* name) {
    if (values.empty()) throw ConfigError(std::string("ablation: empty ") + name + " list");
}

bool ratio_valid(double ratio, double base) {
    const double bp = ratio * base;
    return ratio > 0.0 && bp > 1.0 && bp < base;
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    const unsigned workers = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
}

double top1(const std::vector<QueryOutcome>& outcomes) {
    std::size_t hits = 0;
    for (const auto& o : outcomes) hits += o.correct() ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

}  // namespace

void AblationConfig::validate() const {
    vocab.validate();
    model.validate();
    if (length < 5) throw ConfigError("ablation: length must be >= 5");
    if (n_queries == 0) throw ConfigError("ablation: n_queries must be >= 1");
    require_nonempty(alphas, "alpha");
    require_nonempty(betas, "beta");
    require_nonempty(ratios, "ratio");
    require_nonempty(gammas, "gamma");
    const RopeConfig& rope = model.rope;
    for (const auto& row : ablation_points(*this)) {
        ContrastParams{row.point.beta, row.point.gamma}.validate(vocab.size());
        if (!(row.point.ratio > 0.0)) throw ConfigError("ablation: B'/B ratio must be > 0");
        if (row.valid) OverRotationConfig{row.base_prime, row.point.alpha}.validate(rope);
    }
}

std::vector<AblationRow> ablation_points(const AblationConfig& cfg) {
    std::vector<AblationRow> rows;
    const double base = cfg.model.rope.base;
    const auto push = [&](std::string varied, AblationPoint p) {
        AblationRow row;
        row.varied = std::move(varied);
        row.point = p;
        row.base_prime = p.ratio * base;
        row.valid = ratio_valid(p.ratio, base);
        rows.push_back(std::move(row));
    };
    if (cfg.mode == AblationMode::one_at_a_time) {
        for (double a : cfg.alphas) push("alpha", {a, cfg.center.beta, cfg.center.ratio, cfg.center.gamma});
        for (double b : cfg.betas) push("beta", {cfg.center.alpha, b, cfg.center.ratio, cfg.center.gamma});
        for (double r : cfg.ratios) push("ratio", {cfg.center.alpha, cfg.center.beta, r, cfg.center.gamma});
        for (std::size_t g : cfg.gammas) push("gamma", {cfg.center.alpha, cfg.center.beta, cfg.center.ratio, g});
    } else {
        for (double a : cfg.alphas)
            for (double b : cfg.betas)
                for (double r : cfg.ratios)
                    for (std::size_t g : cfg.gammas) push("grid", {a, b, r, g});
    }
    return rows;
}

AblationResult run_ablation(const AblationConfig& cfg) {
    cfg.validate();
    AblationResult result;
    result.rows = ablation_points(cfg);
    if (std::none_of(result.rows.begin(), result.rows.end(), [](const auto& r) { return r.valid; })) {
        throw ConfigError("ablation: no sweep point has a valid B' = ratio * B in (1, B)");
    }

    const ToyModel model(cfg.vocab, cfg.model);
    EvalConfig eval;
    eval.lengths = {cfg.length};
    eval.n_queries = cfg.n_queries;
    eval.seed = cfg.seed;

    const std::size_t n = cfg.n_queries;
    std::vector<RetrievalTask> tasks(n);
    std::vector<LogitVector> base(n);
    const auto std_sched = compute_frequencies(cfg.model.rope);
    parallel_for(n, cfg.threads, [&](std::size_t q) {
        tasks[q] = make_eval_task(model, eval, cfg.length, q);
        base[q] = model.forward_logits(tasks[q], std_sched);
    });

    std::vector<QueryOutcome> base_outcomes(n);
    for (std::size_t q = 0; q < n; ++q) {
        base_outcomes[q] = {gold_rank(base[q], tasks[q].gold).rank, cfg.length, Method::base, false,
                            tasks[q].gold_distance, q};
    }
    result.salience_base = salience_score(base_outcomes);
    result.top1_base = top1(base_outcomes);

    std::map<std::pair<double, double>, std::vector<LogitVector>> perturbed_cache;
    bool have_best = false;
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        AblationRow& row = result.rows[i];
        if (!row.valid) continue;
        const auto key = std::make_pair(row.point.alpha, row.point.ratio);
        auto it = perturbed_cache.find(key);
        if (it == perturbed_cache.end()) {
            const auto sched = over_rotated_schedule(cfg.model.rope, {row.base_prime, row.point.alpha});
            std::vector<LogitVector> pert(n);
            parallel_for(n, cfg.threads,
                         [&](std::size_t q) { pert[q] = model.forward_logits(tasks[q], sched); });
            it = perturbed_cache.emplace(key, std::move(pert)).first;
        }
        std::vector<QueryOutcome> outcomes(n);
        for (std::size_t q = 0; q < n; ++q) {
            const auto logits =
                contrast_logits(base[q], it->second[q], {row.point.beta, row.point.gamma});
            const auto r = gold_rank(logits, tasks[q].gold);
            outcomes[q] = {r.rank, cfg.length, Method::pcd, r.masked, tasks[q].gold_distance, q};
        }
        row.salience_pcd = salience_score(outcomes);
        row.top1_pcd = top1(outcomes);
        if (!have_best || row.salience_pcd > result.rows[result.best].salience_pcd) {
            result.best = i;
            have_best = true;
        }
    }
    return result;
}

}  // namespace pcd::cli
