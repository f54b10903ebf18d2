#include <iostream>
#include <memory>

#include "commands.hpp"
#include "pcd/rope.hpp"

namespace pcd::cli {

namespace {

struct FreqsOptions {
    CommonOptions common;
    std::optional<int> dim;
    std::optional<double> base;
    std::optional<double> base_prime;
    std::optional<double> alpha;
    std::string band = "low";
};

void run_freqs(const FreqsOptions& o) {
    const Preset* preset = o.common.find();
    const Preset none{};
    const Preset& p = preset ? *preset : none;
    const RopeConfig rope{pick(o.dim, p.dim, 512), pick(o.base, p.base, 1.0e6)};
    const OverRotationConfig over{pick(o.base_prime, p.base_prime, 1.0e4),
                                  pick(o.alpha, p.alpha, 0.4),
                                  o.band == "high" ? PerturbationBand::high : PerturbationBand::low};
    rope.validate();
    over.validate(rope);

    const auto standard = compute_frequencies(rope);
    const auto perturbed = compute_frequencies({rope.dim, over.base_prime}, ScheduleKind::perturbed);
    const auto blended = blend_frequencies(standard, perturbed, over.alpha, over.band);

    Csv csv("pcd.freqs", 1, {"j", "theta_std", "theta_pert", "theta_blended"});
    for (std::size_t j = 0; j < standard.blocks(); ++j) {
        csv.cell(j + 1).cell(standard.freqs[j]).cell(perturbed.freqs[j]).cell(blended.freqs[j]);
        csv.end_row();
    }
    const auto path = o.common.output_dir() / "freqs.csv";
    write_file(path, csv.text());
    std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

void register_freqs(CLI::App& app, Action& action) {
    auto opts = std::make_shared<FreqsOptions>();
    auto* sub = app.add_subcommand("freqs", "Export standard, perturbed and blended RoPE schedules");
    add_common_options(*sub, opts->common);
    sub->add_option("--d", opts->dim, "Head dimension (even)");
    sub->add_option("--base", opts->base, "RoPE base B");
    sub->add_option("--base-prime", opts->base_prime, "Perturbed base B'");
    sub->add_option("--alpha", opts->alpha, "Transition coefficient");
    sub->add_option("--band", opts->band, "Perturbed end of the spectrum")
        ->check(CLI::IsMember({"low", "high"}))
        ->capture_default_str();
    sub->callback([opts, &action] { action = [opts] { run_freqs(*opts); }; });
}

}  // namespace pcd::cli
