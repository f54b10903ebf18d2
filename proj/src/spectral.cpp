#include "pcd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>

#include "pcd/errors.hpp"
#include "pcd/random.hpp"

namespace pcd {

std::string_view to_string(SeriesLabel label) {
    switch (label) {
        case SeriesLabel::standard: return "standard";
        case SeriesLabel::over_rotated: return "over_rotated";
        case SeriesLabel::contrastive: return "contrastive";
    }
    return "unknown";
}

std::string_view to_string(VectorMode mode) {
    return mode == VectorMode::ones ? "ones" : "gaussian";
}

VectorMode parse_vector_mode(std::string_view text) {
    if (text == "ones") return VectorMode::ones;
    if (text == "gaussian") return VectorMode::gaussian;
    throw ConfigError("vector mode must be 'ones' or 'gaussian', got '" + std::string(text) + "'");
}

void SimulationConfig::validate() const {
    over_rotation().validate(rope());
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw ConfigError("contrast coefficient beta must be >= 0, got " + std::to_string(beta));
    }
    if (seq_len < 2) {
        throw ConfigError("seq_len must be >= 2, got " + std::to_string(seq_len));
    }
    if (seeds < 1) {
        throw ConfigError("seeds must be >= 1, got " + std::to_string(seeds));
    }
}

double attention_score(std::span<const double> q, std::span<const double> k, std::int64_t m,
                       std::int64_t n, const FrequencySchedule& sched) {
    if (q.size() != k.size()) {
        throw DimensionError("attention_score: query and key lengths differ");
    }
    const auto rq = rotate(q, m, sched);
    const auto rk = rotate(k, n, sched);
    double acc = 0.0;
    for (std::size_t i = 0; i < rq.size(); ++i) acc += rq[i] * rk[i];
    return acc;
}

double spectral_sum(const SpectralComponents& comp, std::int64_t distance,
                    const FrequencySchedule& sched) {
    const std::size_t h = sched.blocks();
    if (comp.amplitudes.size() != h || comp.phases.size() != h) {
        throw DimensionError("spectral_sum: component count does not match schedule blocks");
    }
    const double k = static_cast<double>(distance);
    double acc = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
        acc += comp.amplitudes[j] * std::cos(k * sched.freqs[j] + comp.phases[j]);
    }
    return acc;
}

SpectralComponents extract_components(std::span<const double> q, std::span<const double> k) {
    if (q.size() != k.size() || q.size() % 2 != 0 || q.empty()) {
        throw DimensionError("extract_components: vectors must share one even, non-zero length");
    }
    const std::size_t h = q.size() / 2;
    SpectralComponents out;
    out.amplitudes.resize(h);
    out.phases.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        const double nq = std::hypot(q[2 * j], q[2 * j + 1]);
        const double nk = std::hypot(k[2 * j], k[2 * j + 1]);
        out.amplitudes[j] = nq * nk;
        if (nq == 0.0 || nk == 0.0) {
            out.amplitudes[j] = 0.0;
            out.phases[j] = 0.0;
            continue;
        }
        // Phase of the query block relative to the key block, so that
        // <R(m)q, R(n)k> = sum_j A_j cos((m - n) theta_j + phi_j).
        double phi = std::atan2(q[2 * j + 1], q[2 * j]) - std::atan2(k[2 * j + 1], k[2 * j]);
        if (phi > std::numbers::pi) phi -= 2.0 * std::numbers::pi;
        if (phi <= -std::numbers::pi) phi += 2.0 * std::numbers::pi;
        out.phases[j] = phi;
    }
    return out;
}

std::vector<std::int64_t> distance_grid(std::int64_t seq_len) {
    if (seq_len < 0) throw ConfigError("distance_grid: seq_len must be >= 0");
    const std::int64_t stride = std::max<std::int64_t>(1, seq_len / 4096);
    std::vector<std::int64_t> grid;
    grid.reserve(static_cast<std::size_t>(seq_len / stride + 2));
    for (std::int64_t k = 0; k <= seq_len; k += stride) grid.push_back(k);
    if (grid.back() != seq_len) grid.push_back(seq_len);
    return grid;
}

namespace {

void check_grid(const DecaySeries& s) {
    if (s.distances.size() != s.values.size()) {
        throw DimensionError("decay series: distance and value counts differ");
    }
}

// Per-seed |S|, |S'|, |S_cd| for gaussian mode.
struct SeedSeries {
    std::vector<double> standard, over_rotated, contrastive;
};

SeedSeries gaussian_seed(const SimulationConfig& cfg, int seed_index,
                         const std::vector<std::int64_t>& grid, const FrequencySchedule& std_sched,
                         const FrequencySchedule& over_sched) {
    const auto comp = gaussian_components(cfg, seed_index);

    SeedSeries out;
    out.standard.resize(grid.size());
    out.over_rotated.resize(grid.size());
    out.contrastive.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = spectral_sum(comp, grid[i], std_sched);
        const double sp = spectral_sum(comp, grid[i], over_sched);
        out.standard[i] = std::abs(s);
        out.over_rotated[i] = std::abs(sp);
        out.contrastive[i] = std::abs((1.0 + cfg.beta) * s - cfg.beta * sp);
    }
    return out;
}

}  // namespace

SpectralComponents gaussian_components(const SimulationConfig& cfg, int seed_index) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(seed_index)));
    std::vector<double> q(static_cast<std::size_t>(cfg.dim));
    std::vector<double> k(q.size());
    for (auto& x : q) x = rng.normal();
    for (auto& x : k) x = rng.normal();
    return extract_components(q, k);
}

DecaySimulation simulate_decay(const SimulationConfig& cfg) {
    cfg.validate();
    const auto grid = distance_grid(cfg.seq_len);
    const auto std_sched = compute_frequencies(cfg.rope());
    const auto over_sched = over_rotated_schedule(cfg.rope(), cfg.over_rotation());

    DecaySimulation sim;
    sim.standard = {grid, std::vector<double>(grid.size()), SeriesLabel::standard};
    sim.over_rotated = {grid, std::vector<double>(grid.size()), SeriesLabel::over_rotated};

    if (cfg.vector_mode == VectorMode::ones) {
        // All-ones q and k: every block has A_j = 2, phi_j = 0.
        SpectralComponents comp{std::vector<double>(std_sched.blocks(), 2.0),
                                std::vector<double>(std_sched.blocks(), 0.0)};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            sim.standard.values[i] = spectral_sum(comp, grid[i], std_sched);
            sim.over_rotated.values[i] = spectral_sum(comp, grid[i], over_sched);
        }
        sim.contrastive = contrastive_series(sim.standard, sim.over_rotated, cfg.beta);
        return sim;
    }

    std::vector<SeedSeries> per_seed(static_cast<std::size_t>(cfg.seeds));
    const unsigned workers =
        std::clamp<unsigned>(cfg.threads, 1u, static_cast<unsigned>(cfg.seeds));
    if (workers == 1) {
        for (int s = 0; s < cfg.seeds; ++s) {
            per_seed[static_cast<std::size_t>(s)] =
                gaussian_seed(cfg, s, grid, std_sched, over_sched);
        }
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int s = static_cast<int>(w); s < cfg.seeds; s += static_cast<int>(workers)) {
                    per_seed[static_cast<std::size_t>(s)] =
                        gaussian_seed(cfg, s, grid, std_sched, over_sched);
                }
            });
        }
    }

    // Ordered reduction keeps the result independent of the worker count.
    sim.contrastive = {grid, std::vector<double>(grid.size()), SeriesLabel::contrastive};
    for (const auto& seed : per_seed) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            sim.standard.values[i] += seed.standard[i];
            sim.over_rotated.values[i] += seed.over_rotated[i];
            sim.contrastive.values[i] += seed.contrastive[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(cfg.seeds);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        sim.standard.values[i] *= inv;
        sim.over_rotated.values[i] *= inv;
        sim.contrastive.values[i] *= inv;
    }
    return sim;
}

DecaySeries contrastive_series(const DecaySeries& standard, const DecaySeries& perturbed,
                               double beta) {
    check_grid(standard);
    check_grid(perturbed);
    if (standard.distances != perturbed.distances) {
        throw DimensionError("contrastive_series: distance grids differ");
    }
    DecaySeries out{standard.distances, std::vector<double>(standard.values.size()),
                    SeriesLabel::contrastive};
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = (1.0 + beta) * standard.values[i] - beta * perturbed.values[i];
    }
    return out;
}

DecayBoundDiagnostic decay_bound_diagnostic(const DecaySeries& series,
                                            const SpectralComponents& comp,
                                            const RopeConfig& cfg) {
    cfg.validate();
    check_grid(series);
    const std::size_t h = cfg.blocks();
    if (comp.amplitudes.size() != h) {
        throw DimensionError("decay_bound_diagnostic: component count does not match d/2");
    }
    const double log_b = std::log(cfg.base);
    const double half_d = static_cast<double>(cfg.dim) / 2.0;

    DecayBoundDiagnostic out;
    // (B^(-2j/d))^(d/2) = B^(-j) for 0-based j.
    for (std::size_t j = 0; j < h; ++j) {
        out.c1 += comp.amplitudes[j] * std::exp(-static_cast<double>(j) * log_b);
    }
    const double threshold = std::pow(cfg.base, 2.0 / cfg.dim);
    const double log_c1 = out.c1 > 0.0 ? std::log(out.c1) : -INFINITY;

    out.points.reserve(series.distances.size());
    for (std::size_t i = 0; i < series.distances.size(); ++i) {
        DecayBoundDiagnostic::Point p;
        p.k = series.distances[i];
        p.lhs = std::abs(series.values[i]);
        const double k = static_cast<double>(p.k);
        p.applicable = k > threshold;
        if (p.applicable) {
            const double j0 = std::ceil(half_d * std::log(k) / log_b);
            p.j0 = static_cast<int>(std::clamp(j0, 1.0, half_d));
            p.log_rhs = log_c1 - half_d * std::log(k) - std::pow(k, 2.0 / cfg.dim) * log_b;
            p.rhs = std::exp(p.log_rhs);
            p.holds = p.lhs <= p.rhs;
        }
        out.points.push_back(p);
    }
    return out;
}

Envelope envelope(const DecaySeries& series, std::int64_t k_min, std::int64_t window) {
    check_grid(series);
    if (window < 1) throw ConfigError("envelope window must be >= 1");
    Envelope env;
    std::int64_t current = -1;
    for (std::size_t i = 0; i < series.distances.size(); ++i) {
        const std::int64_t k = series.distances[i];
        if (k < k_min) continue;
        const double v = std::abs(series.values[i]);
        const std::int64_t w = k / window;
        if (w != current) {
            current = w;
            env.distances.push_back(k);
            env.values.push_back(v);
        } else if (v > env.values.back()) {
            env.distances.back() = k;
            env.values.back() = v;
        }
    }
    return env;
}

double fit_decay_exponent(const DecaySeries& series, std::int64_t k_min) {
    const auto env = envelope(series, std::max<std::int64_t>(k_min, 1));
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < env.values.size(); ++i) {
        if (env.values[i] > 0.0) {
            xs.push_back(std::log(static_cast<double>(env.distances[i])));
            ys.push_back(std::log(env.values[i]));
        }
    }
    if (xs.size() < 8) {
        throw InsufficientDataError("fit_decay_exponent: need >= 8 envelope points, got " +
                                    std::to_string(xs.size()));
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) throw InsufficientDataError("fit_decay_exponent: degenerate distances");
    return sxy / sxx;
}

double farthest_quartile_mean(const DecaySeries& series) {
    check_grid(series);
    if (series.distances.empty() || series.distances.front() != 0) {
        throw DimensionError("farthest_quartile_mean: series must start at distance 0");
    }
    const double norm = std::abs(series.values.front());
    if (norm == 0.0) throw DomainError("farthest_quartile_mean: |S(0)| is zero");
    const auto env = envelope(series, 0);
    const double cutoff = 0.75 * static_cast<double>(series.distances.back());
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < env.values.size(); ++i) {
        if (static_cast<double>(env.distances[i]) >= cutoff) {
            acc += env.values[i] / norm;
            ++count;
        }
    }
    if (count == 0) throw InsufficientDataError("farthest_quartile_mean: no envelope points");
    return acc / static_cast<double>(count);
}

}  // namespace pcd
