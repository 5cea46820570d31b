#pragma once

#include "wmc/io.hpp"
#include "wmc/packing.hpp"
#include "wmc/theory.hpp"

#include "json.hpp"

#include <algorithm>
#include <optional>

namespace wmc {

namespace detail {

inline nlohmann::json quantiles(std::vector<double> v) {
    if (v.empty())
        return nullptr;
    std::sort(v.begin(), v.end());
    auto at = [&](double p) { return v[std::size_t(p * double(v.size() - 1) + 0.5)]; };
    return {{"min", v.front()}, {"q05", at(0.05)}, {"median", at(0.5)}, {"q95", at(0.95)}, {"max", v.back()}};
}

} // namespace detail

inline nlohmann::json to_json(const RscExperiment &cfg, const RscReport &rep) {
    return {{"params",
             {{"rows", cfg.rows},
              {"cols", cfg.cols},
              {"n", cfg.n},
              {"draws", cfg.draws},
              {"rank", cfg.rank},
              {"c0", cfg.c0},
              {"spike_cap", cfg.spike_cap > 0 ? cfg.spike_cap : std::sqrt(32.0 * std::log(mean_dim(cfg.rows, cfg.cols)))},
              {"seed", cfg.seed}}},
            {"margins", rep.margins},
            {"summary",
             {{"tested", rep.n_samples_tested},
              {"violations", rep.violations},
              {"pass_fraction", rep.pass_fraction()},
              {"candidates_drawn", rep.candidates_drawn},
              {"margin_quantiles", detail::quantiles(rep.margins)}}}};
}

inline nlohmann::json to_json(const NoiseNormExperiment &cfg, const NoiseNormReport &rep) {
    return {{"params",
             {{"rows", cfg.rows},
              {"cols", cfg.cols},
              {"n", cfg.n},
              {"nu", cfg.nu},
              {"repetitions", cfg.repetitions},
              {"noise_model", to_string(cfg.noise)},
              {"seed", cfg.seed}}},
            {"values", rep.values},
            {"summary",
             {{"mean", rep.mean},
              {"stddev", rep.stddev},
              {"reference", rep.reference},
              {"ratio_to_reference", rep.reference > 0 ? rep.mean / rep.reference : 0.0}}}};
}

inline nlohmann::json to_json(const RatePrediction &p) {
    return {{"kind", to_string(p.kind)}, {"value", p.value}, {"components", p.components}};
}

inline nlohmann::json to_json(const MinimaxPrediction &p) {
    nlohmann::json j = to_json(p.rate);
    j["active_branch"] = p.active_branch;
    j["key_bound_holds"] = p.key_bound_holds;
    return j;
}

inline nlohmann::json to_json(const PackingReport &r) {
    return {{"size", r.size},
            {"delta", r.delta},
            {"rank", r.rank},
            {"frobenius_min", r.frobenius_min},
            {"frobenius_max", r.frobenius_max},
            {"min_separation", r.min_separation},
            {"max_spikiness", r.max_spikiness},
            {"max_operator_norm", r.max_operator_norm},
            {"max_numerical_rank", r.max_numerical_rank},
            {"spikiness_threshold", r.spikiness_threshold},
            {"operator_threshold", r.operator_threshold},
            {"frobenius_ok", r.frobenius_ok},
            {"separation_ok", r.separation_ok},
            {"spikiness_ok", r.spikiness_ok},
            {"operator_ok", r.operator_ok},
            {"rank_ok", r.rank_ok},
            {"passed", r.passed}};
}

struct PackingRun {
    Index d = 0;
    Index r = 0;
    double delta = 1.0;
    std::uint64_t seed = 0;
    int max_attempts = 20;
    int hoeffding_pairs = 200;
};

struct PackingOutcome {
    std::optional<PackingSet> set;
    PackingReport report; // of the returned set, or the best failed attempt
    std::string error;
    double hoeffding_mean = 0.0;
};

/// Generation stream seeded by `seed`; the distance check uses a separate
/// stream derived from it.
inline PackingOutcome run_packing(const PackingRun &run) {
    PackingOutcome out;
    Rng rng(run.seed);
    try {
        out.set = generate_packing(run.d, run.r, run.delta, rng, run.max_attempts);
        out.report = out.set->report;
    } catch (const PackingError &e) {
        out.report = e.best_report();
        out.error = e.what();
    }
    Rng hrng(derive_seed(run.seed, {0x484F45FFull}));
    out.hoeffding_mean = sign_block_distance_mean(run.d, run.r, run.hoeffding_pairs, hrng);
    return out;
}

inline nlohmann::json to_json(const PackingRun &run, const PackingOutcome &out) {
    nlohmann::json files = nlohmann::json::array();
    if (out.set)
        for (std::size_t i = 0; i < out.set->matrices.size(); ++i)
            files.push_back("theta_" + std::to_string(i) + ".csv");
    return {{"params",
             {{"d", run.d},
              {"r", run.r},
              {"delta", run.delta},
              {"seed", run.seed},
              {"max_attempts", run.max_attempts}}},
            {"packing_size", packing_size(run.d, run.r)},
            {"rd", double(run.r) * double(run.d)},
            {"lower_bound_regime", packing_regime_valid(run.d, run.r)},
            {"found", out.set.has_value()},
            {"attempts_used", out.set ? out.set->attempts_used : run.max_attempts},
            {"error", out.error},
            {"report", to_json(out.report)},
            {"hoeffding", {{"pairs", run.hoeffding_pairs}, {"mean", out.hoeffding_mean}}},
            {"files", files}};
}

/// Writes theta_<k>.csv for every matrix plus report.json into `dir`.
inline void write_packing(const std::filesystem::path &dir, const PackingRun &run, const PackingOutcome &out) {
    std::filesystem::create_directories(dir);
    if (out.set)
        for (std::size_t i = 0; i < out.set->matrices.size(); ++i)
            save_matrix(dir / ("theta_" + std::to_string(i) + ".csv"), out.set->matrices[i]);
    write_text(dir / "report.json", to_json(run, out).dump(2) + "\n");
}

} // namespace wmc
