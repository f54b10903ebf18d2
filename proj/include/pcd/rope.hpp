// Rotary position embedding: geometric frequency schedules, the over-rotated
// (local-aware) blend, and blockwise rotation of embedding vectors.
//
// Block j (0-based here, 1-based in the usual notation) rotates coordinates
// (2j, 2j+1) by angle m * theta_j, with theta_j = base^(-2j/d). The blended
// schedule mixes the standard schedule with one built from a smaller base,
// weighted by the transition T(x) = 2 - exp(alpha * x) over the normalized
// block position x in [0, 1].
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pcd {

struct RopeConfig {
    int dim = 64;         // d, even and >= 2
    double base = 1.0e4;  // B > 1

    void validate() const;
    std::size_t blocks() const { return static_cast<std::size_t>(dim) / 2; }
};

enum class ScheduleKind { standard, perturbed, blended };

std::string_view to_string(ScheduleKind kind);

struct FrequencySchedule {
    std::vector<double> freqs;  // radians per position step, one per block
    ScheduleKind kind = ScheduleKind::standard;

    std::size_t blocks() const { return freqs.size(); }
    int dim() const { return static_cast<int>(2 * freqs.size()); }
};

// Which end of the spectrum the over-rotation touches. `low` is the normal
// mode (highest-frequency block untouched). `high` mirrors the block
// positions so the highest-frequency blocks take the strongest perturbation;
// it exists only as a diagnostic and is known to destabilize local modeling.
enum class PerturbationBand { low, high };

struct OverRotationConfig {
    double base_prime = 1.0e2;  // B', 1 < B' < B
    double alpha = 0.2;         // transition coefficient, > 0
    PerturbationBand band = PerturbationBand::low;

    // Throws ConfigError on violated invariants; warns (does not clamp) when
    // alpha >= ln 2 since the last block's weight T(1) becomes <= 0.
    void validate(const RopeConfig& rope) const;
};

// theta_j = base^(-2j/d), j = 0..d/2-1. `kind` may be standard or perturbed
// (the latter when cfg.base holds B').
FrequencySchedule compute_frequencies(const RopeConfig& cfg,
                                      ScheduleKind kind = ScheduleKind::standard);

// T(x) = 2 - exp(alpha * x); x must lie in [0, 1].
double transition(double x, double alpha);

// Normalized position of block j (0-based) among `blocks`: j / (blocks - 1),
// or 0 for a single block.
double block_position(std::size_t j, std::size_t blocks);

// theta*_j = T(x_j) theta_j + (1 - T(x_j)) theta'_j.
FrequencySchedule blend_frequencies(const FrequencySchedule& standard,
                                    const FrequencySchedule& perturbed, double alpha,
                                    PerturbationBand band = PerturbationBand::low);

// compute_frequencies(B) blended with compute_frequencies(B') after
// validating both configs.
FrequencySchedule over_rotated_schedule(const RopeConfig& rope, const OverRotationConfig& over);

// Applies the block-diagonal rotation R(m) pairwise. O(d), no d x d matrix.
std::vector<double> rotate(std::span<const double> v, std::int64_t position,
                           const FrequencySchedule& sched);
void rotate_into(std::span<const double> v, std::int64_t position,
                 const FrequencySchedule& sched, std::span<double> out);

}  // namespace pcd
