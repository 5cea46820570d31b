#pragma once

#include "wmc/core.hpp"
#include "wmc/io.hpp"
#include "wmc/linalg.hpp"
#include "wmc/rng.hpp"
#include "wmc/sampling.hpp"
#include "wmc/solver.hpp"
#include "wmc/weighted_measures.hpp"

#include "json.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wmc {

/// Default spikiness cap sqrt(32 log d).
inline double default_spike_cap(double d) { return std::sqrt(32.0 * std::log(d)); }

/// Default estimator spikiness level 2 sqrt(32 log d), above any generated target.
inline double default_alpha_star(double d) { return 2.0 * default_spike_cap(d); }

/// Theta* = A B^T with standard Gaussian factors, rescaled to unit weighted
/// Frobenius norm and redrawn until its spikiness is at most spike_cap
/// (spike_cap <= 0 selects sqrt(32 log d)).
inline Matrix random_low_rank(Index rows, Index cols, Index r, double spike_cap, const WeightPair &w, Rng &rng) {
    require(r >= 1 && r <= std::min(rows, cols), "random_low_rank: r must lie in [1, min(d_r, d_c)]");
    require(w.rows() == rows && w.cols() == cols, "random_low_rank: weights do not match dims");
    const double cap = spike_cap > 0 ? spike_cap : default_spike_cap(mean_dim(rows, cols));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const Matrix a = rng.gaussian(rows, r);
        const Matrix b = rng.gaussian(cols, r);
        Matrix theta = a * b.transpose();
        theta /= to_gamma(theta, w).norm();
        if (spikiness(theta, w) <= cap)
            return theta;
    }
    throw std::runtime_error("random_low_rank: no draw met the spikiness cap in 1000 attempts");
}

/// Theta with weighted singular values sigma_j = s j^(-2/q), j = 1..d, and
/// Haar singular vectors; s is chosen so that sum_j sigma_j^q = rho_q.
inline Matrix random_lq(Index d, double q, double rho_q, const WeightPair &w, Rng &rng) {
    require(q > 0.0 && q <= 1.0, "random_lq: q must lie in (0, 1]");
    require(rho_q > 0.0, "random_lq: rho_q must be positive");
    require(w.rows() == d && w.cols() == d, "random_lq: weights must be d x d");
    double harmonic = 0.0;
    for (Index j = 1; j <= d; ++j)
        harmonic += std::pow(double(j), -2.0);
    const double s = std::pow(rho_q / harmonic, 1.0 / q);
    Vector sigma(d);
    for (Index j = 0; j < d; ++j)
        sigma(j) = s * std::pow(double(j + 1), -2.0 / q);
    const Matrix u = haar_orthogonal(d, rng);
    const Matrix v = haar_orthogonal(d, rng);
    return from_gamma(u * sigma.asDiagonal() * v.transpose(), w);
}

struct RankRule {
    bool log_sq = true; // r = ceil((log d)^2)
    Index fixed = 0;

    Index rank_for(Index d) const {
        if (!log_sq)
            return fixed;
        const double l = std::log(double(d));
        return Index(std::ceil(l * l - 1e-12));
    }
};

struct ExperimentConfig {
    std::vector<Index> dims;
    double q = 0.0;
    RankRule rank_rule;
    double rho_q = 2.0;
    double nu = 0.5;
    int trials = 25;
    /// Explicit sample sizes, or scale factors c for n = c * r d log d
    /// (q = 0) / n = c * rho_q^(1/(1-q/2)) d log d (q > 0).
    std::vector<long long> n_values;
    std::vector<double> n_scale;
    std::optional<double> alpha_star; // default 2 sqrt(32 log d)
    std::optional<double> fixed_lambda; // empty: auto
    std::uint64_t master_seed = 0;
    std::string weights_rule = "uniform"; // or "file:<path>"
    NoiseModel noise = NoiseModel::gaussian;
    bool random_signs = true;
    bool record_runtime = true;
    SolverOptions solver;

    void validate() const {
        require(!dims.empty(), "ExperimentConfig: dims must be nonempty");
        for (Index d : dims)
            require(d >= 10, "ExperimentConfig: every d must be at least 10");
        require(trials >= 1, "ExperimentConfig: trials must be at least 1");
        require(q >= 0.0 && q <= 1.0, "ExperimentConfig: q must lie in [0, 1]");
        require(nu >= 0.0, "ExperimentConfig: nu must be nonnegative");
        require(n_values.empty() != n_scale.empty(), "ExperimentConfig: give exactly one of n values or n scale");
        for (long long n : n_values)
            require(n > 0, "ExperimentConfig: sample sizes must be positive");
        for (double c : n_scale)
            require(c > 0.0, "ExperimentConfig: n scale factors must be positive");
        if (q > 0.0)
            require(rho_q > 0.0, "ExperimentConfig: rho_q must be positive for q > 0");
        if (!rank_rule.log_sq)
            require(rank_rule.fixed >= 1, "ExperimentConfig: fixed rank must be positive");
        if (alpha_star)
            require(*alpha_star > 0.0, "ExperimentConfig: alpha_star must be positive");
        if (fixed_lambda)
            require(*fixed_lambda > 0.0, "ExperimentConfig: fixed lambda must be positive");
        require(weights_rule == "uniform" || weights_rule.rfind("file:", 0) == 0,
                "ExperimentConfig: weights_rule must be 'uniform' or 'file:<path>'");
        solver.validate();
    }

    /// Denominator of the rescaled sample size.
    double rescale_denominator(Index d, Index r) const {
        const double dl = double(d) * std::log(double(d));
        return q == 0.0 ? double(r) * dl : std::pow(rho_q, 1.0 / (1.0 - q / 2.0)) * dl;
    }

    std::vector<long long> sample_sizes(Index d, Index r) const {
        if (!n_values.empty())
            return n_values;
        std::vector<long long> out;
        for (double c : n_scale)
            out.push_back(std::max<long long>(1, std::llround(c * rescale_denominator(d, r))));
        return out;
    }

    WeightPair weights_for(Index d) const {
        if (weights_rule == "uniform")
            return WeightPair::uniform(d, d);
        WeightPair w = load_weights(weights_rule.substr(5));
        if (w.rows() != d || w.cols() != d)
            throw DimensionMismatch("weights file does not match d = " + std::to_string(d));
        return w;
    }
};

struct ResultRow {
    Index d = 0;
    Index r = 0;
    double q = 0.0;
    double rho_q = 0.0;
    long long n = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    double lambda = 0.0;
    double mse_weighted_frob = 0.0;
    double mse_frob = 0.0;
    double rescaled_n = 0.0;
    int iterations = 0;
    double runtime_ms = 0.0;
    bool converged = false;
};

inline const char *result_csv_header() {
    return "d,r,q,rho_q,n,trial,seed,lambda,mse_weighted_frob,mse_frob,rescaled_n,iterations,runtime_ms,converged";
}

inline std::string rows_to_csv(const std::vector<ResultRow> &rows) {
    std::string out = result_csv_header();
    out += '\n';
    for (const auto &r : rows) {
        out += std::to_string(r.d) + ',' + std::to_string(r.r) + ',' + format_double(r.q) + ',' +
               format_double(r.rho_q) + ',' + std::to_string(r.n) + ',' + std::to_string(r.trial) + ',' +
               std::to_string(r.seed) + ',' + format_double(r.lambda) + ',' + format_double(r.mse_weighted_frob) +
               ',' + format_double(r.mse_frob) + ',' + format_double(r.rescaled_n) + ',' +
               std::to_string(r.iterations) + ',' + format_double(r.runtime_ms) + ',' +
               (r.converged ? "true" : "false") + '\n';
    }
    return out;
}

inline std::vector<ResultRow> rows_from_csv(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw IoError("result CSV is empty");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != result_csv_header())
        throw IoError("result CSV header mismatch");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto c = split_csv_line(line);
        if (c.size() != 14)
            throw IoError("result CSV rows must have 14 fields");
        ResultRow r;
        r.d = Index(parse_double(c[0]));
        r.r = Index(parse_double(c[1]));
        r.q = parse_double(c[2]);
        r.rho_q = parse_double(c[3]);
        r.n = std::stoll(c[4]);
        r.trial = std::stoi(c[5]);
        r.seed = std::stoull(c[6]);
        r.lambda = parse_double(c[7]);
        r.mse_weighted_frob = parse_double(c[8]);
        r.mse_frob = parse_double(c[9]);
        r.rescaled_n = parse_double(c[10]);
        r.iterations = std::stoi(c[11]);
        r.runtime_ms = parse_double(c[12]);
        if (c[13] != "true" && c[13] != "false")
            throw IoError("converged must be true or false");
        r.converged = c[13] == "true";
        rows.push_back(r);
    }
    return rows;
}

/// Child seed of one (d, n, trial) cell.
inline std::uint64_t trial_seed(std::uint64_t master, Index d, long long n, int trial) {
    return derive_seed(master, {std::uint64_t(d), std::uint64_t(n), std::uint64_t(trial)});
}

/// Runs one trial: generate Theta*, sample, observe, solve, score.
inline ResultRow run_trial(const ExperimentConfig &cfg, Index d, Index r, long long n, int trial,
                           std::uint64_t seed, const WeightPair &w) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(seed);
    const double spike_cap = default_spike_cap(double(d));
    Matrix theta_star;
    Index recorded_rank = r;
    if (cfg.q == 0.0) {
        theta_star = random_low_rank(d, d, r, spike_cap, w, rng);
        if (numerical_rank(to_gamma(theta_star, w)) != r || spikiness(theta_star, w) > spike_cap)
            throw std::logic_error("run_trial: generated matrix violates its declared class");
    } else {
        theta_star = random_lq(d, cfg.q, cfg.rho_q, w, rng);
        const auto lq = lq_membership(theta_star, w, cfg.q, cfg.rho_q * (1.0 + 1e-8));
        if (!lq.member)
            throw std::logic_error("run_trial: generated matrix lies outside its l_q ball");
        recorded_rank = numerical_rank(to_gamma(theta_star, w));
    }

    auto idx = sample_indices(w, std::size_t(n), rng, cfg.random_signs);
    ObservationSet obs = observe(theta_star, w, std::move(idx), cfg.nu, cfg.noise, rng);
    obs.seed = seed;

    double lambda = 0.0;
    if (cfg.fixed_lambda) {
        lambda = *cfg.fixed_lambda;
    } else {
        const auto choice = default_lambda(cfg.nu, w.l_bound(), double(d), n);
        lambda = choice.lambda_n > 0.0 ? choice.lambda_n : choice.lambda_star;
    }
    const double alpha_star = cfg.alpha_star.value_or(default_alpha_star(double(d)));
    const Estimate est = solve(obs, lambda, alpha_star, cfg.solver);

    const Matrix err = est.theta_hat - theta_star;
    ResultRow row;
    row.d = d;
    row.r = recorded_rank;
    row.q = cfg.q;
    row.rho_q = cfg.rho_q;
    row.n = n;
    row.trial = trial;
    row.seed = seed;
    row.lambda = lambda;
    row.mse_weighted_frob = to_gamma(err, w).squaredNorm();
    row.mse_frob = err.squaredNorm();
    row.rescaled_n = double(n) / cfg.rescale_denominator(d, r);
    row.iterations = est.iterations;
    row.converged = est.converged;
    if (cfg.record_runtime)
        row.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

/// Every (d, n, trial) cell in deterministic order, run on up to `jobs`
/// threads. Each cell owns a stream seeded from (master_seed, d, n, trial),
/// so the rows do not depend on the thread count.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig &cfg, unsigned jobs = 1) {
    cfg.validate();
    struct Cell {
        Index d, r;
        long long n;
        int trial;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    std::set<std::uint64_t> seen;
    std::map<Index, WeightPair> weights;
    for (Index d : cfg.dims) {
        weights.emplace(d, cfg.weights_for(d));
        const Index r = cfg.rank_rule.rank_for(d);
        require(r >= 1 && r <= d, "run_experiment: rank rule gives r outside [1, d]");
        for (long long n : cfg.sample_sizes(d, r)) {
            for (int t = 0; t < cfg.trials; ++t) {
                const std::uint64_t s = trial_seed(cfg.master_seed, d, n, t);
                if (!seen.insert(s).second)
                    throw std::runtime_error("run_experiment: derived seed collision");
                cells.push_back({d, r, n, t, s});
            }
        }
    }
    std::vector<ResultRow> rows(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        const Cell &c = cells[i];
        rows[i] = run_trial(cfg, c.d, c.r, c.n, c.trial, c.seed, weights.at(c.d));
    });
    return rows;
}

// ---------------------------------------------------------------------------
// Summaries

struct GroupSummary {
    Index d = 0;
    long long n = 0;
    double rescaled_n = 0.0;
    int count = 0;
    double mean_mse = 0.0; // plain Frobenius
    double stderr_mse = 0.0;
    double mean_mse_weighted = 0.0;
    int converged = 0;
};

struct MatchedPoint {
    double rescaled_n = 0.0; // grid value of the first dimension
    double spread = 0.0;     // (max_d mean - min_d mean) / min_d mean
};

struct ExperimentSummary {
    std::vector<GroupSummary> groups; // sorted by (d, n)
    std::vector<MatchedPoint> matched;
    std::optional<double> collapse;
    std::optional<double> slope; // pooled LS slope of log mean MSE vs log rescaled_n
    std::map<Index, double> slope_by_d;
    std::vector<std::string> notes;

    /// Mean MSE strictly decreasing in n for every d.
    bool decreasing_in_n() const {
        for (std::size_t i = 1; i < groups.size(); ++i)
            if (groups[i].d == groups[i - 1].d && !(groups[i].mean_mse < groups[i - 1].mean_mse))
                return false;
        return true;
    }
};

namespace detail {

inline std::optional<double> ls_slope(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() < 2)
        return std::nullopt;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(x.size());
    my /= double(y.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx <= 0)
        return std::nullopt;
    return sxy / sxx;
}

} // namespace detail

/// Relative tolerance used to match rescaled sample sizes across dimensions.
inline constexpr double kGridMatchTol = 0.05;

inline ExperimentSummary summarize(const std::vector<ResultRow> &rows) {
    require(!rows.empty(), "summarize: no rows");
    std::map<std::pair<Index, long long>, std::vector<const ResultRow *>> grouped;
    for (const auto &r : rows)
        grouped[{r.d, r.n}].push_back(&r);

    ExperimentSummary out;
    for (const auto &[key, members] : grouped) {
        GroupSummary g;
        g.d = key.first;
        g.n = key.second;
        g.count = int(members.size());
        g.rescaled_n = members.front()->rescaled_n;
        for (const ResultRow *r : members) {
            g.mean_mse += r->mse_frob;
            g.mean_mse_weighted += r->mse_weighted_frob;
            g.converged += r->converged;
        }
        g.mean_mse /= g.count;
        g.mean_mse_weighted /= g.count;
        double sq = 0;
        for (const ResultRow *r : members)
            sq += (r->mse_frob - g.mean_mse) * (r->mse_frob - g.mean_mse);
        g.stderr_mse = g.count > 1 ? std::sqrt(sq / (g.count - 1) / g.count) : 0.0;
        out.groups.push_back(g);
    }

    std::map<Index, std::vector<const GroupSummary *>> by_d;
    for (const auto &g : out.groups)
        by_d[g.d].push_back(&g);

    std::vector<double> lx, ly;
    for (const auto &[d, gs] : by_d) {
        std::vector<double> x, y;
        for (const GroupSummary *g : gs) {
            if (g->mean_mse > 0 && g->rescaled_n > 0) {
                x.push_back(std::log(g->rescaled_n));
                y.push_back(std::log(g->mean_mse));
            }
        }
        if (auto s = detail::ls_slope(x, y))
            out.slope_by_d[d] = *s;
        lx.insert(lx.end(), x.begin(), x.end());
        ly.insert(ly.end(), y.begin(), y.end());
    }
    out.slope = detail::ls_slope(lx, ly);
    if (!out.slope)
        out.notes.push_back("slope omitted: fewer than two distinct rescaled sample sizes");

    if (by_d.size() < 2) {
        out.notes.push_back("collapse statistic omitted: fewer than two distinct d");
        return out;
    }
    const auto &reference = by_d.begin()->second;
    for (const GroupSummary *p : reference) {
        double lo = p->mean_mse, hi = p->mean_mse;
        bool all = true;
        for (auto it = std::next(by_d.begin()); it != by_d.end(); ++it) {
            const GroupSummary *best = nullptr;
            for (const GroupSummary *g : it->second) {
                const double rel = std::abs(g->rescaled_n - p->rescaled_n) / p->rescaled_n;
                if (rel <= kGridMatchTol &&
                    (!best || rel < std::abs(best->rescaled_n - p->rescaled_n) / p->rescaled_n))
                    best = g;
            }
            if (!best) {
                all = false;
                break;
            }
            lo = std::min(lo, best->mean_mse);
            hi = std::max(hi, best->mean_mse);
        }
        if (all && lo > 0)
            out.matched.push_back({p->rescaled_n, (hi - lo) / lo});
    }
    if (out.matched.empty()) {
        out.notes.push_back("collapse statistic omitted: no rescaled sample sizes match across d");
    } else {
        double c = 0;
        for (const auto &m : out.matched)
            c = std::max(c, m.spread);
        out.collapse = c;
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline Index parse_rank_fixed(const std::string &s) {
    if (s.rfind("fixed:", 0) != 0)
        throw std::invalid_argument("rank_rule must be \"log_sq\" or \"fixed:<int>\"");
    return Index(std::stoll(s.substr(6)));
}

} // namespace detail

/// Parses an ExperimentConfig from JSON. Field names mirror the struct:
///   dims, q, rank_rule ("log_sq" | "fixed:<int>"), rho_q, nu, trials,
///   n_grid ([n...] | {"c": [c...]}), alpha_star (number | null),
///   lambda_rule ("auto" | "fixed:<f>"), master_seed,
///   weights_rule ("uniform" | "file:<path>"), and optional noise_model,
///   random_signs, record_runtime, solver {max_iters, rel_tol, accelerated}.
inline ExperimentConfig config_from_json(const nlohmann::json &j) {
    ExperimentConfig cfg;
    cfg.dims = j.at("dims").get<std::vector<Index>>();
    cfg.q = j.value("q", 0.0);
    if (j.contains("rank_rule")) {
        const auto &rr = j.at("rank_rule");
        if (rr.is_string() && rr.get<std::string>() == "log_sq") {
            cfg.rank_rule = {};
        } else if (rr.is_string()) {
            cfg.rank_rule = {false, detail::parse_rank_fixed(rr.get<std::string>())};
        } else if (rr.is_object() && rr.contains("fixed")) {
            cfg.rank_rule = {false, rr.at("fixed").get<Index>()};
        } else {
            throw std::invalid_argument("rank_rule must be \"log_sq\" or \"fixed:<int>\"");
        }
    }
    cfg.rho_q = j.value("rho_q", 2.0);
    cfg.nu = j.value("nu", 0.5);
    cfg.trials = j.value("trials", 25);
    const auto &grid = j.at("n_grid");
    if (grid.is_array())
        cfg.n_values = grid.get<std::vector<long long>>();
    else if (grid.is_object() && grid.contains("c"))
        cfg.n_scale = grid.at("c").get<std::vector<double>>();
    else
        throw std::invalid_argument("n_grid must be a list of sample sizes or {\"c\": [...]}");
    if (j.contains("alpha_star") && !j.at("alpha_star").is_null())
        cfg.alpha_star = j.at("alpha_star").get<double>();
    const std::string lr = j.value("lambda_rule", std::string("auto"));
    if (lr != "auto") {
        if (lr.rfind("fixed:", 0) != 0)
            throw std::invalid_argument("lambda_rule must be \"auto\" or \"fixed:<f>\"");
        cfg.fixed_lambda = parse_double(lr.substr(6));
    }
    cfg.master_seed = j.value("master_seed", std::uint64_t{0});
    cfg.weights_rule = j.value("weights_rule", std::string("uniform"));
    cfg.noise = parse_noise_model(j.value("noise_model", std::string("gaussian")));
    cfg.random_signs = j.value("random_signs", true);
    cfg.record_runtime = j.value("record_runtime", true);
    if (j.contains("solver")) {
        const auto &s = j.at("solver");
        cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
        cfg.solver.rel_tol = s.value("rel_tol", cfg.solver.rel_tol);
        cfg.solver.accelerated = s.value("accelerated", cfg.solver.accelerated);
        cfg.solver.dykstra_iters = s.value("dykstra_iters", cfg.solver.dykstra_iters);
        cfg.solver.dykstra_tol = s.value("dykstra_tol", cfg.solver.dykstra_tol);
    }
    cfg.validate();
    return cfg;
}

inline nlohmann::json summary_to_json(const ExperimentSummary &s) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto &g : s.groups)
        groups.push_back({{"d", g.d},
                          {"n", g.n},
                          {"rescaled_n", g.rescaled_n},
                          {"trials", g.count},
                          {"mean_mse_frob", g.mean_mse},
                          {"stderr_mse_frob", g.stderr_mse},
                          {"mean_mse_weighted_frob", g.mean_mse_weighted},
                          {"converged", g.converged}});
    nlohmann::json matched = nlohmann::json::array();
    for (const auto &m : s.matched)
        matched.push_back({{"rescaled_n", m.rescaled_n}, {"relative_spread", m.spread}});
    nlohmann::json slopes = nlohmann::json::object();
    for (const auto &[d, v] : s.slope_by_d)
        slopes[std::to_string(d)] = v;
    return {{"groups", groups},
            {"collapse", {{"statistic", s.collapse ? nlohmann::json(*s.collapse) : nlohmann::json(nullptr)},
                          {"match_tolerance", kGridMatchTol},
                          {"grid", matched}}},
            {"slope",
             {{"pooled", s.slope ? nlohmann::json(*s.slope) : nlohmann::json(nullptr)}, {"by_d", slopes}}},
            {"decreasing_in_n", s.decreasing_in_n()},
            {"notes", s.notes}};
}

} // namespace wmc
