#include <iostream>
#include <memory>

#include "ablation.hpp"
#include "commands.hpp"

namespace pcd::cli {

namespace {

using nlohmann::ordered_json;

struct AblateOptions {
    CommonOptions common;
    ToyOptions toy;
    std::string mode = "one-at-a-time";
    std::vector<double> alphas;
    std::vector<double> betas;
    std::vector<double> ratios;
    std::vector<std::size_t> gammas;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> ratio;
    std::optional<std::size_t> gamma;
    std::size_t length = 2048;
    std::size_t n_queries = 200;
};

ordered_json row_json(const AblationRow& row) {
    return {{"varied", row.varied},
            {"alpha", row.point.alpha},
            {"beta", row.point.beta},
            {"ratio", row.point.ratio},
            {"base_prime", row.base_prime},
            {"gamma", row.point.gamma},
            {"salience_pcd", row.salience_pcd},
            {"top1_pcd", row.top1_pcd}};
}

// Whether the best valid row of one swept parameter sits strictly between
// its smallest and largest valid values. Null when fewer than three valid
// points were swept.
ordered_json interior(const AblationResult& result, const std::string& varied) {
    std::vector<const AblationRow*> rows;
    for (const auto& r : result.rows) {
        if (r.varied == varied && r.valid) rows.push_back(&r);
    }
    if (rows.size() < 3) return nullptr;
    const auto value = [&](const AblationRow* r) {
        if (varied == "alpha") return r->point.alpha;
        if (varied == "beta") return r->point.beta;
        if (varied == "ratio") return r->point.ratio;
        return static_cast<double>(r->point.gamma);
    };
    const AblationRow* best = rows.front();
    double lo = value(rows.front());
    double hi = lo;
    for (const auto* r : rows) {
        if (r->salience_pcd > best->salience_pcd) best = r;
        lo = std::min(lo, value(r));
        hi = std::max(hi, value(r));
    }
    return {{"argmax", value(best)}, {"interior", value(best) > lo && value(best) < hi}};
}

void run_ablate(const AblateOptions& o) {
    const Preset* preset = o.common.find();
    const Preset none{};
    const Preset& p = preset ? *preset : none;

    AblationConfig cfg;
    cfg.vocab = toy_vocab(o.toy);
    cfg.model = toy_model_config(o.toy, preset, o.common.seed);
    cfg.length = o.length;
    cfg.n_queries = o.n_queries;
    cfg.seed = o.common.seed;
    cfg.threads = o.common.threads;
    cfg.mode = o.mode == "grid" ? AblationMode::grid : AblationMode::one_at_a_time;
    std::optional<double> preset_ratio;
    if (p.base_prime && p.base) preset_ratio = *p.base_prime / *p.base;
    cfg.center = {pick(o.alpha, p.alpha, cfg.center.alpha), pick(o.beta, p.beta, cfg.center.beta),
                  pick(o.ratio, preset_ratio, cfg.center.ratio),
                  pick(o.gamma, p.gamma, cfg.center.gamma)};
    if (!o.alphas.empty()) cfg.alphas = o.alphas;
    if (!o.betas.empty()) cfg.betas = o.betas;
    if (!o.ratios.empty()) cfg.ratios = o.ratios;
    if (!o.gammas.empty()) cfg.gammas = o.gammas;

    const auto result = run_ablation(cfg);

    Csv csv("pcd.ablate", 1,
            {"varied", "alpha", "beta", "ratio", "base_prime", "gamma", "valid", "salience_pcd",
             "top1_pcd", "salience_base", "top1_base"});
    for (const auto& row : result.rows) {
        csv.cell(row.varied).cell(row.point.alpha).cell(row.point.beta).cell(row.point.ratio);
        csv.cell(row.base_prime).cell(row.point.gamma).cell(row.valid ? 1 : 0);
        if (row.valid) {
            csv.cell(row.salience_pcd).cell(row.top1_pcd);
        } else {
            csv.cell(std::string_view()).cell(std::string_view());
        }
        csv.cell(result.salience_base).cell(result.top1_base);
        csv.end_row();
    }

    ordered_json doc;
    doc["schema"] = "pcd.ablate_summary v1";
    doc["model"] = {{"kind", "toy single-head retrieval"},
                    {"d", cfg.model.rope.dim},
                    {"base", cfg.model.rope.base},
                    {"temperature", cfg.model.temperature},
                    {"n_keys", cfg.vocab.n_keys},
                    {"n_values", cfg.vocab.n_values},
                    {"embed_seed", cfg.model.embed_seed}};
    doc["config"] = {{"mode", o.mode},
                     {"length", cfg.length},
                     {"n_queries", cfg.n_queries},
                     {"seed", cfg.seed},
                     {"center",
                      {{"alpha", cfg.center.alpha},
                       {"beta", cfg.center.beta},
                       {"ratio", cfg.center.ratio},
                       {"gamma", cfg.center.gamma}}},
                     {"alphas", cfg.alphas},
                     {"betas", cfg.betas},
                     {"ratios", cfg.ratios},
                     {"gammas", cfg.gammas}};
    doc["base"] = {{"salience", result.salience_base}, {"top1", result.top1_base}};
    doc["best"] = row_json(result.rows[result.best]);
    if (cfg.mode == AblationMode::one_at_a_time) {
        for (const char* name : {"alpha", "beta", "ratio", "gamma"}) {
            doc["sweeps"][name] = interior(result, name);
        }
    }

    const auto dir = o.common.output_dir();
    write_file(dir / "ablate.csv", csv.text());
    write_file(dir / "ablate_summary.json", to_text(doc));
    std::cout << "wrote ablate.csv and ablate_summary.json to " << dir.string() << "\n";
}

}  // namespace

void register_ablate(CLI::App& app, Action& action) {
    auto opts = std::make_shared<AblateOptions>();
    auto* sub = app.add_subcommand(
        "ablate", "Sweep alpha, beta, B'/B and gamma on the toy model at one context length");
    add_common_options(*sub, opts->common);
    add_toy_options(*sub, opts->toy);
    sub->add_option("--mode", opts->mode, "Vary one parameter at a time, or the full product")
        ->check(CLI::IsMember({"one-at-a-time", "grid"}))
        ->capture_default_str();
    sub->add_option("--alphas", opts->alphas, "Alpha values (default 0.1..0.5)")->delimiter(',');
    sub->add_option("--betas", opts->betas, "Beta values (default 1..4)")->delimiter(',');
    sub->add_option("--ratios", opts->ratios, "B'/B values (default 1e-6..1e-1)")->delimiter(',');
    sub->add_option("--gammas", opts->gammas, "Gamma values (default 10..200)")->delimiter(',');
    sub->add_option("--alpha", opts->alpha, "Center alpha (default 0.2)");
    sub->add_option("--beta", opts->beta, "Center beta (default 2.5)");
    sub->add_option("--ratio", opts->ratio, "Center B'/B (default 1e-2)");
    sub->add_option("--gamma", opts->gamma, "Center gamma (default 30)");
    sub->add_option("--length", opts->length, "Context length in tokens")->capture_default_str();
    sub->add_option("--queries", opts->n_queries, "Queries")->capture_default_str();
    sub->callback([opts, &action] { action = [opts] { run_ablate(*opts); }; });
}

}  // namespace pcd::cli
