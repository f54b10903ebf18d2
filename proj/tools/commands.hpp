#pragma once

#include <functional>
#include <optional>
#include <string>

#include "pcd/toylm.hpp"

#include <CLI11.hpp>

#include "cli_common.hpp"

namespace pcd::cli {

// Options every subcommand accepts.
struct CommonOptions {
    std::string out_dir;
    std::string preset;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    std::filesystem::path output_dir() const { return resolve_output_dir(out_dir); }
    const Preset* find() const { return preset.empty() ? nullptr : &find_preset(preset); }
};

void add_common_options(CLI::App& sub, CommonOptions& opts);

// Toy retrieval model parameters shared by psa and ablate.
struct ToyOptions {
    std::optional<int> dim;
    std::optional<double> base;
    std::optional<double> temperature;
    std::size_t n_keys = 4096;
    std::size_t n_values = 16;
};

void add_toy_options(CLI::App& sub, ToyOptions& opts);

// Explicit flag, else the preset's value, else the built-in default.
template <class T>
T pick(const std::optional<T>& flag, const std::optional<T>& preset, T fallback) {
    if (flag) return *flag;
    if (preset) return *preset;
    return fallback;
}

// Model parameters after applying the preset. The seed drives the embeddings.
ToyVocab toy_vocab(const ToyOptions& toy);
ToyModelConfig toy_model_config(const ToyOptions& toy, const Preset* preset, std::uint64_t seed);

using Action = std::function<void()>;

// Each registers a subcommand on `app`; when it is selected, `action` is set
// to the function that runs it.
void register_freqs(CLI::App& app, Action& action);
void register_simulate_decay(CLI::App& app, Action& action);
void register_psa(CLI::App& app, Action& action);
void register_ablate(CLI::App& app, Action& action);

}  // namespace pcd::cli
