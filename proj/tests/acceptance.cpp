// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ablation.hpp"
#include "pcd/decoder.hpp"
#include "pcd/psa.hpp"
#include "pcd/random.hpp"
#include "pcd/rope.hpp"
#include "pcd/spectral.hpp"
#include "pcd/toylm.hpp"

namespace {

using namespace pcd;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const char* name, double limit_s, const std::function<Verdict()>& body) {
    const auto start = Clock::now();
    Verdict v = body();
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (limit_s > 0.0 && secs >= limit_s) {
        v.pass = false;
        v.detail += "; over the " + std::to_string(static_cast<int>(limit_s)) + " s budget";
    }
    if (!v.pass) ++failures;
    std::printf("criterion %2d %-34s %s  (%s; %.2f s)\n", id, name, v.pass ? "PASS" : "FAIL",
                v.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string num(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

FrequencySchedule random_schedule(Rng& rng, int d) {
    const double base = std::pow(10.0, 1.0 + 6.0 * rng.uniform());
    const RopeConfig rope{d, base};
    if (rng.below(2) == 0) return compute_frequencies(rope);
    const double bp = std::pow(base, 0.1 + 0.8 * rng.uniform());
    return over_rotated_schedule(rope, {bp, 0.05 + 0.6 * rng.uniform()});
}

Verdict rotation_correctness() {
    Rng rng(1);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 2 * (1 + static_cast<int>(rng.below(64)));
        const auto sched = random_schedule(rng, d);
        const auto q = random_vector(rng, static_cast<std::size_t>(d));
        const auto k = random_vector(rng, static_cast<std::size_t>(d));
        const auto m = static_cast<std::int64_t>(rng.below(65536));
        const auto n = static_cast<std::int64_t>(rng.below(65536));
        const auto s = static_cast<std::int64_t>(rng.below(65536));
        const double nq = std::sqrt(dot(q, q));
        const double nk = std::sqrt(dot(k, k));
        const auto rq = rotate(q, m, sched);
        worst = std::max(worst, std::abs(std::sqrt(dot(rq, rq)) - nq) / nq);
        const double a = dot(rq, rotate(k, n, sched));
        const double b = dot(rotate(q, m + s, sched), rotate(k, n + s, sched));
        worst = std::max(worst, std::abs(a - b) / (nq * nk));
    }
    return {worst <= 1e-9, "max scaled error " + num(worst)};
}

Verdict spectral_representation() {
    Rng rng(2);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 2 * (1 + static_cast<int>(rng.below(64)));
        const auto sched = random_schedule(rng, d);
        const auto q = random_vector(rng, static_cast<std::size_t>(d));
        const auto k = random_vector(rng, static_cast<std::size_t>(d));
        const auto m = static_cast<std::int64_t>(rng.below(20000));
        const auto n = static_cast<std::int64_t>(rng.below(20000));
        const double direct = attention_score(q, k, m, n, sched);
        const auto comp = extract_components(q, k);
        const double spectral = spectral_sum(comp, m - n, sched);
        const double scale = std::accumulate(comp.amplitudes.begin(), comp.amplitudes.end(), 0.0);
        worst = std::max(worst, std::abs(direct - spectral) / scale);
    }
    return {worst <= 1e-10, "max error / sum A_j " + num(worst)};
}

Verdict decay_ordering() {
    SimulationConfig cfg;  // d=512, B=1e6, B'=1e4, alpha=0.4, beta=0.6, seq_len=16384
    std::string detail;
    bool pass = true;
    for (VectorMode mode : {VectorMode::ones, VectorMode::gaussian}) {
        cfg.vector_mode = mode;
        cfg.seeds = 32;
        const auto sim = simulate_decay(cfg);
        const double st = farthest_quartile_mean(sim.standard);
        const double ov = farthest_quartile_mean(sim.over_rotated);
        const double cd = farthest_quartile_mean(sim.contrastive);
        const bool ordered = ov < st && st < cd;
        pass = pass && ordered;
        detail += std::string(detail.empty() ? "" : "; ") + std::string(to_string(mode)) +
                  " over " + num(ov) + ", std " + num(st) + ", cd " + num(cd) +
                  (ordered ? " ordered" : " NOT ordered");
    }
    return {pass, detail};
}

Verdict contrastive_direction() {
    std::string detail;
    bool pass = true;
    for (int d : {8, 16}) {
        SimulationConfig cfg;
        cfg.dim = d;
        cfg.base = 1.0e4;
        cfg.base_prime = 1.0e2;
        cfg.alpha = 0.2;
        cfg.beta = 0.6;
        cfg.seq_len = 4096;
        cfg.vector_mode = VectorMode::gaussian;
        cfg.seeds = 32;
        const auto sim = simulate_decay(cfg);
        const auto k_min = static_cast<std::int64_t>(std::ceil(std::pow(cfg.base, 2.0 / d)));
        const double s_std = fit_decay_exponent(sim.standard, k_min);
        const double s_cd = fit_decay_exponent(sim.contrastive, k_min);
        const double margin = s_cd - s_std;
        pass = pass && margin >= -1e-3;
        detail += std::string(detail.empty() ? "" : "; ") + "d=" + std::to_string(d) +
                  " slope cd " + num(s_cd) + " vs std " + num(s_std) + " margin " + num(margin, 3);
    }
    return {pass, detail};
}

struct ToyRun {
    std::vector<QueryOutcome> outcomes;  // all lengths, both methods
    std::vector<QueryOutcome> near;      // length 2048, probe among the last 3 pairs
};

const ToyRun& toy_run() {
    static const ToyRun run = [] {
        const ToyModel model(ToyVocab{}, ToyModelConfig{});
        EvalConfig cfg;  // lengths 64..2048, 200 queries, beta 2.5, gamma 30
        ToyRun r;
        r.outcomes = evaluate(model, cfg);
        cfg.lengths = {2048};
        cfg.placement.nearest_slots = 3;
        r.near = evaluate(model, cfg);
        return r;
    }();
    return run;
}

Verdict psa_emergence() {
    const auto base = select_method(toy_run().outcomes, Method::base);
    const auto report = build_report(base);
    const auto trend = trend_statistic(report);
    std::string detail = "rho " + num(trend.rho) + ", S(L)";
    for (double s : report.scores) detail += " " + num(s, 3);
    return {!trend.degenerate && trend.rho <= -0.8, detail};
}

double top1(const std::vector<QueryOutcome>& outcomes) {
    std::size_t hits = 0;
    for (const auto& o : outcomes) hits += o.correct() ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

std::vector<QueryOutcome> at_length(const std::vector<QueryOutcome>& all, Method method,
                                    std::size_t length) {
    std::vector<QueryOutcome> out;
    for (const auto& o : all) {
        if (o.method == method && o.context_length == length) out.push_back(o);
    }
    return out;
}

Verdict pcd_improvement() {
    const auto& run = toy_run();
    const auto base = at_length(run.outcomes, Method::base, 2048);
    const auto pcd = at_length(run.outcomes, Method::pcd, 2048);
    const double s_base = salience_score(base);
    const double s_pcd = salience_score(pcd);

    std::vector<std::size_t> dist;
    for (const auto& o : base) dist.push_back(o.gold_distance);
    std::sort(dist.begin(), dist.end());
    const std::size_t threshold = dist[(3 * dist.size()) / 4];
    std::vector<QueryOutcome> far_base, far_pcd;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (base[i].gold_distance >= threshold) {
            far_base.push_back(base[i]);
            far_pcd.push_back(pcd[i]);
        }
    }
    const double far_b = top1(far_base);
    const double far_p = top1(far_pcd);

    const double near_b = top1(select_method(run.near, Method::base));
    const double near_p = top1(select_method(run.near, Method::pcd));
    std::size_t max_near = 0;
    for (const auto& o : run.near) max_near = std::max(max_near, o.gold_distance);

    const bool pass = s_pcd >= s_base && far_p >= far_b && std::abs(near_p - near_b) <= 0.02 &&
                      max_near <= 8;
    return {pass, "S " + num(s_pcd) + " vs " + num(s_base) + "; distant (>= " +
                      std::to_string(threshold) + ", n=" + std::to_string(far_base.size()) +
                      ") top-1 " + num(far_p) + " vs " + num(far_b) + "; near top-1 " +
                      num(near_p) + " vs " + num(near_b)};
}

std::vector<double> reference_contrast(const std::vector<double>& base,
                                       const std::vector<double>& pert, double beta,
                                       std::size_t gamma) {
    std::vector<std::size_t> order(base.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return base[a] > base[b]; });
    std::vector<double> out(base.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < gamma; ++i) {
        out[order[i]] = (1.0 + beta) * base[order[i]] - beta * pert[order[i]];
    }
    return out;
}

std::vector<double> maybe_tied(Rng& rng, std::size_t n, bool ties) {
    std::vector<double> v(n);
    for (auto& x : v) x = ties ? static_cast<double>(rng.below(9)) * 0.5 - 2.0 : rng.normal();
    return v;
}

Verdict decoder_oracle() {
    Rng rng(7);
    std::size_t mismatches = 0;
    std::size_t identity_failures = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.below(64);
        const bool ties = trial % 2 == 0;
        const auto a = maybe_tied(rng, n, ties);
        const auto b = maybe_tied(rng, n, ties);
        const double beta = 6.0 * rng.uniform();
        const std::size_t gamma = 1 + rng.below(n);
        if (contrast_logits(LogitVector(a), LogitVector(b), {beta, gamma}).scores() !=
            reference_contrast(a, b, beta, gamma)) {
            ++mismatches;
        }
        if (contrast_logits(LogitVector(a), LogitVector(b), {0.0, n}).scores() != a) {
            ++identity_failures;
        }
    }
    return {mismatches == 0 && identity_failures == 0,
            std::to_string(mismatches) + " reference mismatches, " +
                std::to_string(identity_failures) + " identity failures in 500"};
}

Verdict salience_arithmetic() {
    const auto outcomes = [](std::initializer_list<std::size_t> ranks) {
        std::vector<QueryOutcome> out;
        for (std::size_t r : ranks) out.push_back({r, 64, Method::base, false, 3, out.size()});
        return out;
    };
    const double ones = salience_score(outcomes({1, 1, 1}));
    const double mixed = salience_score(outcomes({1, 2, 4}));
    const bool hand = std::abs(ones - 1.0) <= 1e-12 && std::abs(mixed - 7.0 / 12.0) <= 1e-12;

    Rng rng(8);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.below(200);
        const auto scores = maybe_tied(rng, n, true);
        const std::size_t gold = rng.below(n);
        auto sorted = scores;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const auto first = std::find(sorted.begin(), sorted.end(), scores[gold]);
        const auto expected = static_cast<std::size_t>(first - sorted.begin()) + 1;
        if (gold_rank(LogitVector(scores), gold).rank != expected) ++mismatches;
    }
    return {hand && mismatches == 0, "{1,1,1} -> " + num(ones, 17) + ", {1,2,4} -> " +
                                         num(mixed, 17) + ", " + std::to_string(mismatches) +
                                         " rank mismatches in 500"};
}

Verdict interior_beta() {
    cli::AblationConfig cfg;
    cfg.mode = cli::AblationMode::grid;
    cfg.alphas = {cfg.center.alpha};
    cfg.betas = {0.5, 1.0, 1.5, 2.5, 4.0, 6.0};
    cfg.ratios = {cfg.center.ratio};
    cfg.gammas = {cfg.center.gamma};
    const auto result = cli::run_ablation(cfg);
    std::string detail = "S(2048) by beta:";
    for (const auto& row : result.rows) {
        detail += " " + num(row.point.beta, 2) + ":" + num(row.salience_pcd);
    }
    const std::size_t best = result.best;
    detail += "; argmax beta " + num(result.rows[best].point.beta, 2);
    return {best > 0 && best + 1 < result.rows.size(), detail};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PCD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict determinism() {
    const auto root = fs::temp_directory_path() / "pcd_acceptance";
    fs::remove_all(root);
    const std::vector<std::pair<std::string, std::string>> commands{
        {"freqs", "freqs --preset paper-fig3b"},
        {"decay", "simulate-decay --preset paper-fig3b"},
        {"decay_gaussian", "simulate-decay --preset paper-fig3b --vector-mode gaussian --beta 0,0.6,2.5"},
        {"decay_grid", "simulate-decay --d 8,16 --base 1e4 --base-prime 1e2 --alpha 0.2,0.4"},
        {"psa", "psa --seed 7"},
        {"ablate", "ablate"},
    };
    std::size_t files = 0;
    std::vector<std::string> problems;
    for (const auto& [name, args] : commands) {
        const auto a = root / (name + "_a");
        const auto b = root / (name + "_b");
        if (run_cli(args + " --out-dir " + a.string()) != 0 ||
            run_cli(args + " --out-dir " + b.string()) != 0) {
            problems.push_back(name + " failed to run");
            continue;
        }
        for (const auto& entry : fs::directory_iterator(a)) {
            ++files;
            if (slurp(entry.path()) != slurp(b / entry.path().filename())) {
                problems.push_back(name + "/" + entry.path().filename().string() + " differs");
            }
        }
    }
    const fs::path golden(PCD_GOLDEN_DIR);
    if (slurp(root / "freqs_a" / "freqs.csv") != slurp(golden / "paper_fig3b_freqs.csv")) {
        problems.push_back("freqs golden mismatch");
    }
    if (slurp(root / "decay_a" / "decay_summary.json") !=
        slurp(golden / "paper_fig3b_decay_summary.json")) {
        problems.push_back("decay summary golden mismatch");
    }
    std::string detail = std::to_string(files) + " files compared, 2 goldens";
    for (const auto& p : problems) detail += "; " + p;
    return {problems.empty(), detail};
}

void top8_info() {
    std::size_t failed = 0;
    std::size_t within8 = 0;
    for (const auto& o : toy_run().outcomes) {
        if (o.method != Method::base || o.context_length < 256 || o.context_length > 1024) continue;
        if (o.gold_rank > 1) {
            ++failed;
            within8 += o.gold_rank <= 8 ? 1 : 0;
        }
    }
    std::printf("info         base failures at 256..1024 with gold rank <= 8: %zu of %zu (%s)\n",
                within8, failed, num(failed ? static_cast<double>(within8) / failed : 1.0).c_str());
}

}  // namespace

int main() {
    report(1, "rotation correctness", 5, rotation_correctness);
    report(2, "spectral representation", 5, spectral_representation);
    report(3, "decay ordering (d=512, 16384)", 60, decay_ordering);
    report(4, "contrastive slope direction", 10, contrastive_direction);
    report(5, "PSA emergence", 60, psa_emergence);
    report(6, "PCD improvement at 2048", 60, pcd_improvement);
    report(7, "decoder oracle equivalence", 0, decoder_oracle);
    report(8, "salience arithmetic", 0, salience_arithmetic);
    report(9, "interior beta optimum", 300, interior_beta);
    report(10, "determinism and goldens", 0, determinism);
    top8_info();
    std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
