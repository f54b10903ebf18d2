// Raw (un-normalized) RoPE attention scores as functions of relative distance.
//
// For query/key content q, k the rotated inner product depends only on
// k = m - n and decomposes blockwise into a cosine sum
//
//     S(k) = sum_j A_j cos(k theta_j + phi_j)
//
// with A_j the product of block norms and phi_j the signed angle from the
// query block to the key block. The decay simulation evaluates S under the
// standard and over-rotated schedules and their contrastive combination
// S_cd = (1 + beta) S - beta S'.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pcd/rope.hpp"

namespace pcd {

struct SpectralComponents {
    std::vector<double> amplitudes;  // A_j >= 0
    std::vector<double> phases;      // phi_j, radians in (-pi, pi]
};

enum class SeriesLabel { standard, over_rotated, contrastive };

std::string_view to_string(SeriesLabel label);

struct DecaySeries {
    std::vector<std::int64_t> distances;  // strictly increasing, >= 0
    std::vector<double> values;
    SeriesLabel label = SeriesLabel::standard;
};

enum class VectorMode { ones, gaussian };

std::string_view to_string(VectorMode mode);
VectorMode parse_vector_mode(std::string_view text);

struct SimulationConfig {
    int dim = 512;
    double base = 1.0e6;
    double base_prime = 1.0e4;
    double alpha = 0.4;
    double beta = 0.6;
    std::int64_t seq_len = 16384;
    VectorMode vector_mode = VectorMode::ones;
    int seeds = 32;  // gaussian mode only
    std::uint64_t seed = 0;
    // Worker threads for gaussian seed averaging. Output does not depend on it.
    unsigned threads = 1;

    void validate() const;
    RopeConfig rope() const { return {dim, base}; }
    OverRotationConfig over_rotation() const { return {base_prime, alpha}; }
};

struct DecaySimulation {
    DecaySeries standard;
    DecaySeries over_rotated;
    DecaySeries contrastive;
};

// Per-distance check of |S(k)| <= C1 k^(-d/2) exp(-k^(2/d) ln B). Reported,
// never asserted: the right-hand side is far below |S| for typical inputs.
struct DecayBoundDiagnostic {
    struct Point {
        std::int64_t k = 0;
        bool applicable = false;  // k > B^(2/d)
        int j0 = 0;               // critical split index, 1-based, in [1, d/2]
        double lhs = 0.0;         // |S(k)|
        double log_rhs = 0.0;     // ln of the bound; rhs underflows for large d
        double rhs = 0.0;
        bool holds = false;
    };
    double c1 = 0.0;
    std::optional<double> c2;  // no closed form; left empty
    std::vector<Point> points;
};

// <rotate(q, m), rotate(k, n)>.
double attention_score(std::span<const double> q, std::span<const double> k, std::int64_t m,
                       std::int64_t n, const FrequencySchedule& sched);

// sum_j A_j cos(k theta_j + phi_j).
double spectral_sum(const SpectralComponents& comp, std::int64_t distance,
                    const FrequencySchedule& sched);

SpectralComponents extract_components(std::span<const double> q, std::span<const double> k);

// Every integer distance 0..seq_len up to 4096; above that a stride of
// seq_len / 4096 (the last point is always seq_len).
std::vector<std::int64_t> distance_grid(std::int64_t seq_len);

DecaySimulation simulate_decay(const SimulationConfig& cfg);

// Components of the standard-normal (q, k) pair drawn for gaussian seed
// `seed_index` of simulate_decay.
SpectralComponents gaussian_components(const SimulationConfig& cfg, int seed_index);

DecaySeries contrastive_series(const DecaySeries& standard, const DecaySeries& perturbed,
                               double beta);

DecayBoundDiagnostic decay_bound_diagnostic(const DecaySeries& series,
                                            const SpectralComponents& comp,
                                            const RopeConfig& cfg);

// Windowed maximum of |S|: distances >= k_min are grouped into
// non-overlapping windows [w*window, (w+1)*window) and each window yields
// (argmax distance, max |S|). Ties resolve to the smaller distance.
struct Envelope {
    std::vector<std::int64_t> distances;
    std::vector<double> values;
};

inline constexpr std::int64_t kEnvelopeWindow = 64;

Envelope envelope(const DecaySeries& series, std::int64_t k_min = 0,
                  std::int64_t window = kEnvelopeWindow);

// Least-squares slope of ln(envelope) against ln(distance) over envelope
// points with distance >= max(k_min, 1). Needs >= 8 positive points.
double fit_decay_exponent(const DecaySeries& series, std::int64_t k_min);

// Mean of the envelope normalized by |S(0)| over the windows lying in the
// farthest quarter of the distance range (distance >= 3/4 of the largest).
double farthest_quartile_mean(const DecaySeries& series);

}  // namespace pcd
