#include <iostream>
#include <memory>

#include "commands.hpp"
#include "pcd/errors.hpp"
#include "pcd/psa.hpp"

namespace pcd::cli {

using nlohmann::ordered_json;

void add_common_options(CLI::App& sub, CommonOptions& opts) {
    sub.add_option("--out-dir", opts.out_dir,
                   "Output directory (default: $PCD_OUTPUT_DIR, else the current directory)");
    sub.add_option("--preset", opts.preset, "Named parameter set")
        ->check(CLI::IsMember(preset_names()));
    sub.add_option("--seed", opts.seed, "Random seed")->capture_default_str();
    sub.add_option("--threads", opts.threads, "Worker threads; results do not depend on it")
        ->capture_default_str()
        ->check(CLI::Range(1u, 256u));
}

void add_toy_options(CLI::App& sub, ToyOptions& opts) {
    sub.add_option("--d", opts.dim, "Toy model head dimension (default 128)");
    sub.add_option("--base", opts.base, "Toy model RoPE base (default 1e4)");
    sub.add_option("--tau", opts.temperature, "Attention temperature scale (default 10)");
    sub.add_option("--n-keys", opts.n_keys, "Key vocabulary size")->capture_default_str();
    sub.add_option("--n-values", opts.n_values, "Value vocabulary size")->capture_default_str();
}

ToyVocab toy_vocab(const ToyOptions& toy) { return {toy.n_keys, toy.n_values}; }

ToyModelConfig toy_model_config(const ToyOptions& toy, const Preset* preset, std::uint64_t seed) {
    const ToyModelConfig defaults;
    const Preset none{};
    const Preset& p = preset ? *preset : none;
    ToyModelConfig cfg;
    cfg.rope = {pick(toy.dim, p.dim, defaults.rope.dim), pick(toy.base, p.base, defaults.rope.base)};
    cfg.temperature = toy.temperature ? *toy.temperature : defaults.temperature;
    cfg.embed_seed = seed;
    return cfg;
}

namespace {

struct PsaOptions {
    CommonOptions common;
    ToyOptions toy;
    std::vector<std::size_t> lengths{64, 128, 256, 512, 1024, 2048};
    std::size_t n_queries = 200;
    std::optional<double> alpha;
    std::optional<double> base_prime;
    std::optional<double> beta;
    std::optional<std::size_t> gamma;
    std::string method = "both";
    std::size_t nearest_slots = 0;
    bool dump_tasks = false;
};

ordered_json report_json(const SalienceReport& r) {
    ordered_json hist = ordered_json::array();
    std::vector<double> top1;
    for (std::size_t i = 0; i < r.lengths.size(); ++i) {
        const auto& h = r.histograms[i];
        hist.push_back({{"top1", h.top1}, {"top2_8", h.top2_8}, {"top9_100", h.top9_100},
                        {"over100", h.over100}});
        top1.push_back(static_cast<double>(h.top1) / static_cast<double>(r.n_queries[i]));
    }
    ordered_json trend = nullptr;
    if (r.lengths.size() >= 3) {
        const auto t = trend_statistic(r);
        trend = {{"spearman_rho", t.rho}, {"degenerate", t.degenerate}};
    }
    return {{"method", std::string(to_string(r.method))},
            {"lengths", r.lengths},
            {"salience", r.scores},
            {"top1", top1},
            {"n_queries", r.n_queries},
            {"histograms", hist},
            {"trend", trend}};
}

// Lengths where every query was solved leave nothing to report.
ordered_json incorrect_json(std::span<const QueryOutcome> outcomes) {
    try {
        return report_json(build_report(outcomes, ReportFilter::incorrect_only));
    } catch (const InsufficientDataError&) {
        return nullptr;
    }
}

void append_rows(Csv& csv, const SalienceReport& r, std::string_view filter) {
    for (std::size_t i = 0; i < r.lengths.size(); ++i) {
        const auto& h = r.histograms[i];
        csv.cell(to_string(r.method)).cell(filter).cell(r.lengths[i]).cell(r.scores[i]);
        csv.cell(r.n_queries[i]).cell(h.top1).cell(h.top2_8).cell(h.top9_100).cell(h.over100);
        csv.end_row();
    }
}

void run_psa(const PsaOptions& o) {
    const Preset* preset = o.common.find();
    const Preset none{};
    const Preset& p = preset ? *preset : none;

    const ToyVocab vocab = toy_vocab(o.toy);
    const ToyModelConfig model_cfg = toy_model_config(o.toy, preset, o.common.seed);
    EvalConfig eval;
    eval.lengths = o.lengths;
    eval.n_queries = o.n_queries;
    eval.params = {pick(o.beta, p.beta, eval.params.beta), pick(o.gamma, p.gamma, eval.params.gamma)};
    eval.over = {pick(o.base_prime, p.base_prime, eval.over.base_prime),
                 pick(o.alpha, p.alpha, eval.over.alpha)};
    eval.seed = o.common.seed;
    eval.base_only = o.method == "base-only";
    eval.placement.nearest_slots = o.nearest_slots;
    eval.threads = o.common.threads;

    vocab.validate();
    model_cfg.validate();
    if (!eval.base_only) eval.over.validate(model_cfg.rope);
    const ToyModel model(vocab, model_cfg);
    eval.validate(model);

    const auto outcomes = evaluate(model, eval);
    const auto base = select_method(outcomes, Method::base);
    const auto base_report = build_report(base);

    ordered_json doc;
    doc["schema"] = "pcd.psa_report v1";
    doc["model"] = {{"kind", "toy single-head retrieval"},
                    {"d", model_cfg.rope.dim},
                    {"base", model_cfg.rope.base},
                    {"temperature", model_cfg.temperature},
                    {"n_keys", vocab.n_keys},
                    {"n_values", vocab.n_values},
                    {"embed_seed", model_cfg.embed_seed}};
    doc["config"] = {{"lengths", eval.lengths},
                     {"n_queries", eval.n_queries},
                     {"seed", eval.seed},
                     {"method", o.method},
                     {"alpha", eval.over.alpha},
                     {"base_prime", eval.over.base_prime},
                     {"beta", eval.params.beta},
                     {"gamma", eval.params.gamma},
                     {"nearest_slots", eval.placement.nearest_slots}};
    doc["reports"]["base"] = report_json(base_report);
    doc["incorrect_only"]["base"] = incorrect_json(base);

    Csv salience("pcd.psa_salience", 1,
                 {"method", "filter", "length", "salience", "n_queries", "top1", "top2_8",
                  "top9_100", "over100"});
    append_rows(salience, base_report, "all");

    if (!eval.base_only) {
        const auto pcd = select_method(outcomes, Method::pcd);
        const auto pcd_report = build_report(pcd);
        doc["reports"]["pcd"] = report_json(pcd_report);
        doc["incorrect_only"]["pcd"] = incorrect_json(pcd);
        ordered_json delta = ordered_json::array();
        for (std::size_t i = 0; i < base_report.lengths.size(); ++i) {
            const auto n = static_cast<double>(base_report.n_queries[i]);
            delta.push_back(
                {{"length", base_report.lengths[i]},
                 {"salience_delta", pcd_report.scores[i] - base_report.scores[i]},
                 {"top1_delta", (static_cast<double>(pcd_report.histograms[i].top1) -
                                 static_cast<double>(base_report.histograms[i].top1)) /
                                    n}});
        }
        doc["improvement"] = delta;
        append_rows(salience, pcd_report, "all");
    }

    Csv csv("pcd.psa_outcomes", 1,
            {"length", "query", "method", "gold_rank", "gold_distance", "gold_masked"});
    for (const auto& out : outcomes) {
        csv.cell(out.context_length).cell(out.query_index).cell(to_string(out.method));
        csv.cell(out.gold_rank).cell(out.gold_distance).cell(out.gold_masked ? 1 : 0);
        csv.end_row();
    }

    const auto dir = o.common.output_dir();
    write_file(dir / "psa_report.json", to_text(doc));
    write_file(dir / "psa_outcomes.csv", csv.text());
    write_file(dir / "psa_salience.csv", salience.text());
    if (o.dump_tasks) {
        // One task per line: header fields, then the token ids.
        std::string text = "# pcd.psa_tasks v1\n";
        for (std::size_t length : eval.lengths) {
            for (std::size_t q = 0; q < eval.n_queries; ++q) {
                const auto task = make_eval_task(model, eval, length, q);
                text += "length=" + std::to_string(length) + " query=" + std::to_string(q) +
                        " gold=" + std::to_string(task.gold) +
                        " gold_position=" + std::to_string(task.gold_position) +
                        " gold_distance=" + std::to_string(task.gold_distance) + " tokens=";
                for (std::size_t i = 0; i < task.tokens.size(); ++i) {
                    if (i > 0) text += ' ';
                    text += std::to_string(task.tokens[i]);
                }
                text += '\n';
            }
        }
        write_file(dir / "psa_tasks.txt", text);
    }
    std::cout << "wrote psa_report.json, psa_outcomes.csv and psa_salience.csv to "
              << dir.string() << "\n";
}

}  // namespace

void register_psa(CLI::App& app, Action& action) {
    auto opts = std::make_shared<PsaOptions>();
    auto* sub = app.add_subcommand(
        "psa", "Salience score versus context length on the toy retrieval model");
    add_common_options(*sub, opts->common);
    add_toy_options(*sub, opts->toy);
    sub->add_option("--lengths", opts->lengths, "Context lengths in tokens")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--queries", opts->n_queries, "Queries per length")->capture_default_str();
    sub->add_option("--alpha", opts->alpha, "Transition coefficient (default 0.2)");
    sub->add_option("--base-prime", opts->base_prime, "Perturbed base B' (default 1e2)");
    sub->add_option("--beta", opts->beta, "Contrast coefficient (default 2.5)");
    sub->add_option("--gamma", opts->gamma, "Plausibility set size (default 30)");
    sub->add_option("--method", opts->method, "Decoding methods to run")
        ->check(CLI::IsMember({"both", "base-only"}))
        ->capture_default_str();
    sub->add_option("--nearest-slots", opts->nearest_slots,
                    "Probe one of the last N pairs (0: any pair)")
        ->capture_default_str();
    sub->add_flag("--dump-tasks", opts->dump_tasks, "Also write per-task metadata");
    sub->callback([opts, &action] { action = [opts] { run_psa(*opts); }; });
}

}  // namespace pcd::cli
