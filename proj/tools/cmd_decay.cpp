#include <cmath>
#include <iostream>
#include <memory>

#include "commands.hpp"
#include "pcd/errors.hpp"
#include "pcd/spectral.hpp"

namespace pcd::cli {

namespace {

using nlohmann::ordered_json;

struct DecayOptions {
    CommonOptions common;
    std::vector<int> dims;
    std::optional<double> base;
    std::vector<double> base_primes;
    std::vector<double> alphas;
    std::vector<double> betas;
    std::optional<long long> seq_len;
    std::string vector_mode = "ones";
    int seeds = 32;
    std::optional<long long> k_min;
};

template <class T>
std::vector<T> pick_list(const std::vector<T>& flag, const std::optional<T>& preset, T fallback) {
    if (!flag.empty()) return flag;
    return {preset ? *preset : fallback};
}

std::int64_t default_k_min(const SimulationConfig& cfg) {
    return static_cast<std::int64_t>(std::ceil(std::pow(cfg.base, 2.0 / cfg.dim)));
}

ordered_json number_or_null(double x) {
    return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr);
}

struct SeriesStats {
    double slope = 0.0;
    double quartile = 0.0;
};

SeriesStats stats(const DecaySeries& s, std::int64_t k_min) {
    return {fit_decay_exponent(s, k_min), farthest_quartile_mean(s)};
}

ordered_json config_json(const SimulationConfig& cfg) {
    return {{"d", cfg.dim},
            {"base", cfg.base},
            {"base_prime", cfg.base_prime},
            {"alpha", cfg.alpha},
            {"seq_len", cfg.seq_len},
            {"vector_mode", std::string(to_string(cfg.vector_mode))},
            {"seeds", cfg.vector_mode == VectorMode::gaussian ? ordered_json(cfg.seeds)
                                                               : ordered_json(nullptr)},
            {"seed", cfg.seed}};
}

ordered_json bound_summary(const SimulationConfig& cfg, const DecaySimulation& sim) {
    SpectralComponents comp;
    DecaySeries series = sim.standard;
    std::string source;
    if (cfg.vector_mode == VectorMode::ones) {
        const std::vector<double> ones(static_cast<std::size_t>(cfg.dim), 1.0);
        comp = extract_components(ones, ones);
        source = "ones";
    } else {
        comp = gaussian_components(cfg, 0);
        const auto sched = compute_frequencies(cfg.rope());
        for (std::size_t i = 0; i < series.distances.size(); ++i) {
            series.values[i] = spectral_sum(comp, series.distances[i], sched);
        }
        source = "gaussian seed 0";
    }
    const auto diag = decay_bound_diagnostic(series, comp, cfg.rope());
    std::size_t applicable = 0;
    std::size_t holds = 0;
    for (const auto& p : diag.points) {
        applicable += p.applicable ? 1 : 0;
        holds += p.holds ? 1 : 0;
    }
    return {{"source", source},
            {"c1", diag.c1},
            {"c2", nullptr},
            {"points", diag.points.size()},
            {"applicable", applicable},
            {"holds", holds}};
}

// Gaussian mode averages |S_cd| per draw, so each beta needs its own pass.
std::vector<DecaySeries> contrastive_columns(const SimulationConfig& cfg, const DecaySimulation& sim,
                                             const std::vector<double>& betas) {
    std::vector<DecaySeries> out;
    for (double b : betas) {
        if (cfg.vector_mode == VectorMode::ones) {
            out.push_back(contrastive_series(sim.standard, sim.over_rotated, b));
        } else if (b == cfg.beta) {
            out.push_back(sim.contrastive);
        } else {
            SimulationConfig other = cfg;
            other.beta = b;
            out.push_back(simulate_decay(other).contrastive);
        }
    }
    return out;
}

void run_single(const DecayOptions& o, SimulationConfig cfg, const std::vector<double>& betas) {
    const auto out_dir = o.common.output_dir();
    const auto sim = simulate_decay(cfg);
    const std::int64_t k_min = o.k_min ? *o.k_min : default_k_min(cfg);

    const auto contrastive = contrastive_columns(cfg, sim, betas);

    std::vector<std::string> columns{"k", "s_std", "s_over"};
    for (double b : betas) columns.push_back("s_cd_beta_" + fmt(b));
    Csv csv("pcd.decay", 1, columns);
    for (std::size_t i = 0; i < sim.standard.distances.size(); ++i) {
        csv.cell(static_cast<long long>(sim.standard.distances[i]))
            .cell(sim.standard.values[i])
            .cell(sim.over_rotated.values[i]);
        for (const auto& c : contrastive) csv.cell(c.values[i]);
        csv.end_row();
    }

    const SeriesStats st = stats(sim.standard, k_min);
    const SeriesStats ov = stats(sim.over_rotated, k_min);
    const double predicted = std::pow(std::log(cfg.base_prime) / std::log(cfg.base), 2.0 / cfg.dim);

    ordered_json series = ordered_json::array();
    series.push_back({{"label", "standard"}, {"beta", nullptr}, {"slope", st.slope},
                      {"farthest_quartile_mean", st.quartile}});
    series.push_back({{"label", "over_rotated"}, {"beta", nullptr}, {"slope", ov.slope},
                      {"farthest_quartile_mean", ov.quartile}});
    ordered_json ordering = ordered_json::array();
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const SeriesStats cd = stats(contrastive[i], k_min);
        series.push_back({{"label", "contrastive"}, {"beta", betas[i]}, {"slope", cd.slope},
                          {"farthest_quartile_mean", cd.quartile}});
        ordering.push_back(
            {{"beta", betas[i]},
             {"slopes_over_le_std_le_cd", ov.slope <= st.slope && st.slope <= cd.slope},
             {"quartile_over_lt_std_lt_cd", ov.quartile < st.quartile && st.quartile < cd.quartile},
             {"slope_ratio_cd_to_std", number_or_null(cd.slope / st.slope)}});
    }

    ordered_json summary;
    summary["schema"] = "pcd.decay_summary v1";
    summary["config"] = config_json(cfg);
    summary["betas"] = betas;
    summary["k_min"] = k_min;
    summary["envelope_window"] = kEnvelopeWindow;
    summary["series"] = series;
    summary["ordering"] = ordering;
    summary["predicted_slope_ratio"] = predicted;
    summary["predicted_slope_ratio_inverse"] = 1.0 / predicted;
    summary["bound_diagnostic"] = bound_summary(cfg, sim);

    write_file(out_dir / "decay.csv", csv.text());
    write_file(out_dir / "decay_summary.json", to_text(summary));
    std::cout << "wrote " << (out_dir / "decay.csv").string() << " and "
              << (out_dir / "decay_summary.json").string() << "\n";
}

void run_grid(const DecayOptions& o, const std::vector<SimulationConfig>& configs,
              const std::vector<double>& betas) {
    Csv csv("pcd.decay_grid", 1,
            {"d", "base", "base_prime", "alpha", "beta", "k_min", "slope_std", "slope_over",
             "slope_cd", "quartile_std", "quartile_over", "quartile_cd", "slopes_ordered",
             "quartiles_ordered"});
    for (const auto& cfg : configs) {
        const auto sim = simulate_decay(cfg);
        const std::int64_t k_min = o.k_min ? *o.k_min : default_k_min(cfg);
        const SeriesStats st = stats(sim.standard, k_min);
        const SeriesStats ov = stats(sim.over_rotated, k_min);
        const auto contrastive = contrastive_columns(cfg, sim, betas);
        for (std::size_t i = 0; i < betas.size(); ++i) {
            const double b = betas[i];
            const SeriesStats cd = stats(contrastive[i], k_min);
            csv.cell(cfg.dim).cell(cfg.base).cell(cfg.base_prime).cell(cfg.alpha).cell(b);
            csv.cell(static_cast<long long>(k_min));
            csv.cell(st.slope).cell(ov.slope).cell(cd.slope);
            csv.cell(st.quartile).cell(ov.quartile).cell(cd.quartile);
            csv.cell(std::string_view(ov.slope <= st.slope && st.slope <= cd.slope ? "1" : "0"));
            csv.cell(std::string_view(ov.quartile < st.quartile && st.quartile < cd.quartile ? "1" : "0"));
            csv.end_row();
        }
    }
    const auto path = o.common.output_dir() / "decay_grid.csv";
    write_file(path, csv.text());
    std::cout << "wrote " << path.string() << "\n";
}

void run_decay(const DecayOptions& o) {
    const Preset* preset = o.common.find();
    const Preset none{};
    const Preset& p = preset ? *preset : none;
    const SimulationConfig defaults;

    const auto dims = pick_list(o.dims, p.dim, defaults.dim);
    const auto base_primes = pick_list(o.base_primes, p.base_prime, defaults.base_prime);
    const auto alphas = pick_list(o.alphas, p.alpha, defaults.alpha);
    const auto betas = pick_list(o.betas, p.beta, defaults.beta);

    std::vector<SimulationConfig> configs;
    for (int d : dims) {
        for (double a : alphas) {
            for (double bp : base_primes) {
                SimulationConfig cfg;
                cfg.dim = d;
                cfg.base = pick(o.base, p.base, defaults.base);
                cfg.base_prime = bp;
                cfg.alpha = a;
                cfg.beta = betas.front();
                cfg.seq_len = pick(o.seq_len, p.seq_len, static_cast<long long>(defaults.seq_len));
                cfg.vector_mode = parse_vector_mode(o.vector_mode);
                cfg.seeds = o.seeds;
                cfg.seed = o.common.seed;
                cfg.threads = o.common.threads;
                configs.push_back(cfg);
            }
        }
    }
    // Validate everything before any simulation runs.
    for (const auto& cfg : configs) {
        for (double b : betas) {
            SimulationConfig check = cfg;
            check.beta = b;
            check.validate();
        }
    }
    if (o.k_min && *o.k_min < 0) throw ConfigError("k-min must be >= 0");

    if (configs.size() == 1) {
        run_single(o, configs.front(), betas);
    } else {
        run_grid(o, configs, betas);
    }
}

}  // namespace

void register_simulate_decay(CLI::App& app, Action& action) {
    auto opts = std::make_shared<DecayOptions>();
    auto* sub = app.add_subcommand(
        "simulate-decay",
        "Raw attention score versus distance for standard, over-rotated and contrastive schedules");
    add_common_options(*sub, opts->common);
    sub->add_option("--d", opts->dims, "Head dimension(s); several values run a grid")
        ->delimiter(',');
    sub->add_option("--base", opts->base, "RoPE base B");
    sub->add_option("--base-prime", opts->base_primes, "Perturbed base(s) B'")->delimiter(',');
    sub->add_option("--alpha", opts->alphas, "Transition coefficient(s)")->delimiter(',');
    sub->add_option("--beta", opts->betas, "Contrast coefficient(s)")->delimiter(',');
    sub->add_option("--seq-len", opts->seq_len, "Largest distance");
    sub->add_option("--vector-mode", opts->vector_mode, "Query/key content")
        ->check(CLI::IsMember({"ones", "gaussian"}))
        ->capture_default_str();
    sub->add_option("--seeds", opts->seeds, "Gaussian draws averaged")->capture_default_str();
    sub->add_option("--k-min", opts->k_min,
                    "Smallest distance used in slope fits (default ceil(B^(2/d)))");
    sub->callback([opts, &action] { action = [opts] { run_decay(*opts); }; });
}

}  // namespace pcd::cli
