// Hyperparameter sweep of PCD on the toy retrieval model at a single
// (tail) context length. Base logits are computed once per task; perturbed
// logits once per distinct (alpha, B'/B) pair.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pcd/toylm.hpp"

namespace pcd::cli {

struct AblationPoint {
    double alpha = 0.2;
    double beta = 2.5;
    double ratio = 1.0e-2;  // B' / B
    std::size_t gamma = 30;
};

enum class AblationMode { one_at_a_time, grid };

struct AblationConfig {
    ToyVocab vocab{};
    ToyModelConfig model{};
    std::size_t length = 2048;
    std::size_t n_queries = 200;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    AblationMode mode = AblationMode::one_at_a_time;
    AblationPoint center{};
    std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<double> betas{1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
    std::vector<double> ratios{1.0e-6, 1.0e-5, 1.0e-4, 1.0e-3, 1.0e-2, 1.0e-1};
    std::vector<std::size_t> gammas{10, 30, 50, 100, 200};

    void validate() const;
};

struct AblationRow {
    std::string varied;  // swept parameter, or "grid"
    AblationPoint point;
    double base_prime = 0.0;
    bool valid = true;  // false when B' = ratio * B is not in (1, B)
    double salience_pcd = 0.0;
    double top1_pcd = 0.0;
};

struct AblationResult {
    double salience_base = 0.0;
    double top1_base = 0.0;
    std::vector<AblationRow> rows;
    // Index into rows of the valid row with the highest PCD salience; ties
    // go to the earlier row.
    std::size_t best = 0;
};

// The sweep points in output order.
std::vector<AblationRow> ablation_points(const AblationConfig& cfg);

AblationResult run_ablation(const AblationConfig& cfg);

}  // namespace pcd::cli
