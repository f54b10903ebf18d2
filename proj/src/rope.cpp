#include "pcd/rope.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pcd/errors.hpp"

namespace pcd {

void RopeConfig::validate() const {
    if (dim < 2 || dim % 2 != 0) {
        throw ConfigError("embedding dimension d must be an even integer >= 2, got " +
                          std::to_string(dim));
    }
    if (!(base > 1.0) || !std::isfinite(base)) {
        throw ConfigError("rope base B must be a finite real > 1, got " + std::to_string(base));
    }
}

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::standard: return "standard";
        case ScheduleKind::perturbed: return "perturbed";
        case ScheduleKind::blended: return "blended";
    }
    return "unknown";
}

void OverRotationConfig::validate(const RopeConfig& rope) const {
    rope.validate();
    if (!(base_prime > 1.0) || !std::isfinite(base_prime)) {
        throw ConfigError("perturbed base B' must be a finite real > 1, got " +
                          std::to_string(base_prime));
    }
    if (!(base_prime < rope.base)) {
        throw ConfigError("perturbed base B' must be smaller than B (B'=" +
                          std::to_string(base_prime) + ", B=" + std::to_string(rope.base) + ")");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("transition coefficient alpha must be > 0, got " +
                          std::to_string(alpha));
    }
    if (alpha >= std::numbers::ln2) {
        warn("alpha >= ln 2: transition weight T(1) <= 0, blend extrapolates past the "
             "perturbed schedule");
    }
    if (band == PerturbationBand::high) {
        warn("high-frequency perturbation selected; this mode degrades local modeling and "
             "is meant for diagnostics only");
    }
}

FrequencySchedule compute_frequencies(const RopeConfig& cfg, ScheduleKind kind) {
    cfg.validate();
    if (kind == ScheduleKind::blended) {
        throw ConfigError("compute_frequencies builds standard or perturbed schedules only");
    }
    const std::size_t h = cfg.blocks();
    FrequencySchedule out;
    out.kind = kind;
    out.freqs.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        out.freqs[j] = std::pow(cfg.base, -2.0 * static_cast<double>(j) / cfg.dim);
    }
    return out;
}

double transition(double x, double alpha) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError("transition: x must lie in [0, 1], got " + std::to_string(x));
    }
    return 2.0 - std::exp(alpha * x);
}

double block_position(std::size_t j, std::size_t blocks) {
    if (blocks == 0 || j >= blocks) {
        throw DimensionError("block index out of range");
    }
    if (blocks == 1) return 0.0;
    return static_cast<double>(j) / static_cast<double>(blocks - 1);
}

FrequencySchedule blend_frequencies(const FrequencySchedule& standard,
                                    const FrequencySchedule& perturbed, double alpha,
                                    PerturbationBand band) {
    if (standard.blocks() != perturbed.blocks() || standard.blocks() == 0) {
        throw ConfigError("blend_frequencies: schedules must have the same non-zero length");
    }
    if (standard.kind != ScheduleKind::standard || perturbed.kind != ScheduleKind::perturbed) {
        throw ConfigError("blend_frequencies expects a standard and a perturbed schedule");
    }
    const std::size_t h = standard.blocks();
    FrequencySchedule out;
    out.kind = ScheduleKind::blended;
    out.freqs.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        double x = block_position(j, h);
        if (band == PerturbationBand::high) x = 1.0 - x;
        const double t = transition(x, alpha);
        out.freqs[j] = t * standard.freqs[j] + (1.0 - t) * perturbed.freqs[j];
    }
    return out;
}

FrequencySchedule over_rotated_schedule(const RopeConfig& rope, const OverRotationConfig& over) {
    over.validate(rope);
    const auto standard = compute_frequencies(rope, ScheduleKind::standard);
    const auto perturbed =
        compute_frequencies(RopeConfig{rope.dim, over.base_prime}, ScheduleKind::perturbed);
    return blend_frequencies(standard, perturbed, over.alpha, over.band);
}

void rotate_into(std::span<const double> v, std::int64_t position,
                 const FrequencySchedule& sched, std::span<double> out) {
    const std::size_t d = 2 * sched.blocks();
    if (v.size() != d || out.size() != d) {
        throw DimensionError("rotate: vector length " + std::to_string(v.size()) +
                             " does not match schedule dimension " + std::to_string(d));
    }
    const double m = static_cast<double>(position);
    for (std::size_t j = 0; j < sched.blocks(); ++j) {
        const double angle = m * sched.freqs[j];
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double x0 = v[2 * j];
        const double x1 = v[2 * j + 1];
        out[2 * j] = x0 * c - x1 * s;
        out[2 * j + 1] = x0 * s + x1 * c;
    }
}

std::vector<double> rotate(std::span<const double> v, std::int64_t position,
                           const FrequencySchedule& sched) {
    std::vector<double> out(v.size());
    rotate_into(v, position, sched, out);
    return out;
}

}  // namespace pcd
