// wmc: command-line front end for the weighted matrix completion toolkit.

#include "wmc/experiment.hpp"
#include "wmc/io.hpp"
#include "wmc/reports.hpp"
#include "wmc/solver.hpp"
#include "wmc/theory.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <iostream>

using namespace wmc;
using nlohmann::json;

namespace {

void emit(const json &j, const std::string &out) {
    const std::string text = j.dump(2) + "\n";
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_text(out, text);
}

WeightPair weights_or_uniform(const std::string &path, Index rows, Index cols) {
    if (path.empty())
        return WeightPair::uniform(rows, cols);
    WeightPair w = load_weights(path);
    if (w.rows() != rows || w.cols() != cols)
        throw DimensionMismatch("weights file does not match the requested dimensions");
    return w;
}

long long default_n(double scale, Index d) {
    return std::max<long long>(1, std::llround(scale * double(d) * std::log(double(d))));
}

SolverOptions solver_options(int max_iters, double rel_tol, bool accelerated) {
    SolverOptions o;
    o.max_iters = max_iters;
    o.rel_tol = rel_tol;
    o.accelerated = accelerated;
    return o;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Weighted noisy matrix completion toolkit"};
    app.require_subcommand(1);

    // simulate -------------------------------------------------------------
    struct {
        std::string theta, weights, out, theta_out, noise = "gaussian";
        Index d = 0, r = 1;
        long long n = 0;
        double nu = 0.5;
        std::uint64_t seed = 0;
        bool fixed_signs = false;
    } sim;
    auto *simulate = app.add_subcommand("simulate", "Draw a noisy observation set from a matrix");
    simulate->add_option("--theta", sim.theta, "Matrix CSV to observe (omit to draw a random low-rank matrix)");
    simulate->add_option("--d", sim.d, "Dimension of the random matrix when --theta is omitted");
    simulate->add_option("--r", sim.r, "Rank of the random matrix when --theta is omitted");
    simulate->add_option("--n", sim.n, "Number of observations")->required();
    simulate->add_option("--nu", sim.nu, "Noise level");
    simulate->add_option("--noise", sim.noise, "gaussian or laplace");
    simulate->add_option("--weights", sim.weights, "Weights CSV (default uniform)");
    simulate->add_option("--seed", sim.seed, "Random seed");
    simulate->add_flag("--fixed-signs", sim.fixed_signs, "Use sign +1 for every observation");
    simulate->add_option("--theta-out", sim.theta_out, "Where to write the generated matrix");
    simulate->add_option("--out", sim.out, "Observation CSV (sidecar written to <out>.json)")->required();

    // estimate -------------------------------------------------------------
    struct {
        std::string obs, lambda = "auto", out, report;
        double alpha_star = 0;
        int max_iters = 5000;
        double rel_tol = 1e-9;
        bool accelerated = false;
    } est;
    auto *estimate = app.add_subcommand("estimate", "Solve the constrained nuclear-norm estimator");
    estimate->add_option("--obs", est.obs, "Observation CSV")->required();
    estimate->add_option("--lambda", est.lambda, "Regularization weight or 'auto'");
    estimate->add_option("--alpha-star", est.alpha_star, "Spikiness bound alpha*")->required();
    estimate->add_option("--out", est.out, "Output matrix CSV")->required();
    estimate->add_option("--report", est.report, "Optional JSON solver report");
    estimate->add_option("--max-iters", est.max_iters, "Iteration cap");
    estimate->add_option("--rel-tol", est.rel_tol, "Relative objective decrease tolerance");
    estimate->add_flag("--accelerated", est.accelerated, "Use monotone FISTA");

    // measures -------------------------------------------------------------
    struct {
        std::string theta, weights, out;
        long long n = 0;
        double c0 = 1.0;
    } mea;
    auto *meas = app.add_subcommand("measures", "Weighted norms, spikiness and rank measure of a matrix");
    meas->add_option("--theta", mea.theta, "Matrix CSV")->required();
    meas->add_option("--weights", mea.weights, "Weights CSV (default uniform)");
    meas->add_option("--n", mea.n, "Sample size for the constraint-set check");
    meas->add_option("--c0", mea.c0, "Constraint-set constant");
    meas->add_option("--out", mea.out, "Output JSON (default stdout)");

    // rsc-check ------------------------------------------------------------
    RscExperiment rsc;
    rsc.rows = rsc.cols = 50;
    std::string rsc_weights, rsc_out;
    double rsc_scale = 5.0;
    Index rsc_d = 50;
    auto *rsc_cmd = app.add_subcommand("rsc-check", "Monte-Carlo check of restricted strong convexity");
    rsc_cmd->add_option("--d", rsc_d, "Square dimension");
    rsc_cmd->add_option("--n", rsc.n, "Sample size (default scale * d log d)");
    rsc_cmd->add_option("--scale", rsc_scale, "Sample size multiplier of d log d");
    rsc_cmd->add_option("--draws", rsc.draws, "Number of random directions");
    rsc_cmd->add_option("--rank", rsc.rank, "Rank of each direction");
    rsc_cmd->add_option("--c0", rsc.c0, "Constraint-set constant");
    rsc_cmd->add_option("--spike-cap", rsc.spike_cap, "Spikiness cap (default sqrt(32 log d))");
    rsc_cmd->add_option("--seed", rsc.seed, "Random seed");
    rsc_cmd->add_option("--jobs", rsc.jobs, "Worker threads");
    rsc_cmd->add_option("--weights", rsc_weights, "Weights CSV (default uniform)");
    rsc_cmd->add_option("--out", rsc_out, "Output JSON (default stdout)");

    // noise-norm -----------------------------------------------------------
    NoiseNormExperiment nn;
    std::string nn_weights, nn_out, nn_noise = "gaussian";
    double nn_scale = 10.0;
    Index nn_d = 50;
    auto *nn_cmd = app.add_subcommand("noise-norm", "Monte-Carlo operator norm of the noise matrix");
    nn_cmd->add_option("--d", nn_d, "Square dimension");
    nn_cmd->add_option("--n", nn.n, "Sample size (default scale * d log d)");
    nn_cmd->add_option("--scale", nn_scale, "Sample size multiplier of d log d");
    nn_cmd->add_option("--nu", nn.nu, "Noise level");
    nn_cmd->add_option("--reps", nn.repetitions, "Repetitions");
    nn_cmd->add_option("--noise", nn_noise, "gaussian or laplace");
    nn_cmd->add_option("--seed", nn.seed, "Random seed");
    nn_cmd->add_option("--jobs", nn.jobs, "Worker threads");
    nn_cmd->add_option("--weights", nn_weights, "Weights CSV (default uniform)");
    nn_cmd->add_option("--out", nn_out, "Output JSON (default stdout)");

    // rates ----------------------------------------------------------------
    struct {
        double d = 0, nu = 0.5, q = 0.0, rho = 1.0, c = 1.0, l_bound = 1.0;
        std::optional<double> alpha_star;
        long long n = 0;
        std::string out;
    } rt;
    auto *rates = app.add_subcommand("rates", "Predicted error rates, minimax floor and default lambda");
    rates->add_option("--d", rt.d, "Dimension")->required();
    rates->add_option("--n", rt.n, "Sample size")->required();
    rates->add_option("--nu", rt.nu, "Noise level");
    rates->add_option("--q", rt.q, "0 for exact rank, otherwise the l_q exponent");
    rates->add_option("--rho", rt.rho, "Rank r (q = 0) or radius rho_q (q > 0)");
    rates->add_option("--alpha-star", rt.alpha_star, "Spikiness bound (default 2 sqrt(32 log d))");
    rates->add_option("--c", rt.c, "Rate constant");
    rates->add_option("--l-bound", rt.l_bound, "Weight bound L");
    rates->add_option("--out", rt.out, "Output JSON (default stdout)");

    // packing --------------------------------------------------------------
    PackingRun pk;
    std::string pk_dir;
    auto *packing = app.add_subcommand("packing", "Randomized low-rank packing construction");
    packing->add_option("--d", pk.d, "Dimension")->required();
    packing->add_option("--r", pk.r, "Rank")->required();
    packing->add_option("--delta", pk.delta, "Frobenius radius")->required();
    packing->add_option("--seed", pk.seed, "Random seed")->required();
    packing->add_option("--max-attempts", pk.max_attempts, "Retry budget");
    packing->add_option("--out-dir", pk_dir, "Output directory")->required();

    // experiment -----------------------------------------------------------
    std::string ex_config, ex_out;
    unsigned ex_jobs = 1;
    bool ex_no_timing = false;
    auto *experiment = app.add_subcommand("experiment", "Run a declarative simulation study");
    experiment->add_option("--config", ex_config, "JSON config")->required();
    experiment->add_option("--out", ex_out, "Result CSV")->required();
    experiment->add_option("--jobs", ex_jobs, "Worker threads")->check(CLI::PositiveNumber);
    experiment->add_flag("--no-timing", ex_no_timing, "Write runtime_ms as 0 for byte-reproducible output");

    // summarize ------------------------------------------------------------
    std::string su_in, su_out;
    auto *summ = app.add_subcommand("summarize", "Group means, collapse statistic and slope of a result CSV");
    summ->add_option("--in", su_in, "Result CSV")->required();
    summ->add_option("--out", su_out, "Summary JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            Matrix theta;
            WeightPair w = WeightPair::uniform(1, 1);
            Rng rng(sim.seed);
            if (!sim.theta.empty()) {
                theta = load_matrix(sim.theta);
                w = weights_or_uniform(sim.weights, theta.rows(), theta.cols());
            } else {
                if (sim.d < 2)
                    throw std::invalid_argument("simulate: give --theta or --d");
                w = weights_or_uniform(sim.weights, sim.d, sim.d);
                theta = random_low_rank(sim.d, sim.d, sim.r, 0.0, w, rng);
            }
            if (sim.n <= 0)
                throw std::invalid_argument("simulate: --n must be positive");
            auto idx = sample_indices(w, std::size_t(sim.n), rng, !sim.fixed_signs);
            ObservationSet obs = observe(theta, w, std::move(idx), sim.nu, parse_noise_model(sim.noise), rng);
            obs.seed = sim.seed;
            save_observations(sim.out, obs);
            if (!sim.theta_out.empty())
                save_matrix(sim.theta_out, theta);
        } else if (*estimate) {
            const ObservationSet obs = load_observations(est.obs);
            double lambda = 0;
            if (est.lambda == "auto") {
                const auto choice =
                    default_lambda(obs.noise_level, obs.weights.l_bound(), mean_dim(obs.rows, obs.cols),
                                   (long long)obs.size());
                lambda = choice.lambda_n > 0 ? choice.lambda_n : choice.lambda_star;
            } else {
                lambda = parse_double(est.lambda);
            }
            const Estimate e = solve(obs, lambda, est.alpha_star, solver_options(est.max_iters, est.rel_tol, est.accelerated));
            save_matrix(est.out, e.theta_hat);
            const json rep = {{"lambda", e.lambda},
                              {"alpha_star", e.alpha_star},
                              {"iterations", e.iterations},
                              {"converged", e.converged},
                              {"prox_exact", e.prox_exact},
                              {"step", e.step},
                              {"objective", e.objective_trace.back()},
                              {"objective_trace", e.objective_trace}};
            if (!est.report.empty())
                emit(rep, est.report);
            if (!e.converged)
                std::cerr << "warning: solver stopped after " << e.iterations << " iterations without converging\n";
        } else if (*meas) {
            const Matrix theta = load_matrix(mea.theta);
            const WeightPair w = weights_or_uniform(mea.weights, theta.rows(), theta.cols());
            const MeasureReport m = measures(theta, w);
            json j = {{"weighted_frobenius", m.weighted_frobenius},
                      {"weighted_nuclear", m.weighted_nuclear},
                      {"weighted_linf", m.weighted_linf},
                      {"spikiness", m.spikiness ? json(*m.spikiness) : json(nullptr)},
                      {"rank_measure", m.rank_measure ? json(*m.rank_measure) : json(nullptr)}};
            if (mea.n > 0 && m.spikiness) {
                const auto c = constraint_membership(theta, w, mea.n, mea.c0);
                j["constraint"] = {{"member", c.member},
                                   {"product", c.product},
                                   {"threshold", c.threshold},
                                   {"margin", c.margin}};
            }
            emit(j, mea.out);
        } else if (*rsc_cmd) {
            rsc.rows = rsc.cols = rsc_d;
            if (rsc.n <= 0)
                rsc.n = default_n(rsc_scale, rsc_d);
            const WeightPair w = weights_or_uniform(rsc_weights, rsc_d, rsc_d);
            emit(to_json(rsc, rsc_monte_carlo(rsc, w)), rsc_out);
        } else if (*nn_cmd) {
            nn.rows = nn.cols = nn_d;
            nn.noise = parse_noise_model(nn_noise);
            if (nn.n <= 0)
                nn.n = default_n(nn_scale, nn_d);
            const WeightPair w = weights_or_uniform(nn_weights, nn_d, nn_d);
            emit(to_json(nn, noise_norm_monte_carlo(nn, w)), nn_out);
        } else if (*rates) {
            const double alpha = rt.alpha_star.value_or(default_alpha_star(rt.d));
            const auto kind = rt.q == 0.0 ? CorollaryKind::exact : CorollaryKind::lq;
            const auto lam = default_lambda(rt.nu, rt.l_bound, rt.d, rt.n);
            emit({{"params",
                   {{"d", rt.d},
                    {"n", rt.n},
                    {"nu", rt.nu},
                    {"q", rt.q},
                    {"rho", rt.rho},
                    {"alpha_star", alpha},
                    {"c", rt.c},
                    {"l_bound", rt.l_bound}}},
                  {"upper_rate", to_json(corollary_rate(kind, rt.nu, alpha, rt.rho, rt.q, rt.d, rt.n, rt.c))},
                  {"minimax_floor", to_json(minimax_floor(rt.rho, rt.q, rt.nu, rt.d, rt.n))},
                  {"lambda", {{"lambda_n", lam.lambda_n}, {"lambda_star", lam.lambda_star}}}},
                 rt.out);
        } else if (*packing) {
            const PackingOutcome out = run_packing(pk);
            write_packing(pk_dir, pk, out);
            if (!out.set) {
                std::cerr << "error: " << out.error << "\n";
                return 2;
            }
        } else if (*experiment) {
            ExperimentConfig cfg = config_from_json(json::parse(read_text(ex_config)));
            if (ex_no_timing)
                cfg.record_runtime = false;
            write_text(ex_out, rows_to_csv(run_experiment(cfg, ex_jobs)));
        } else if (*summ) {
            emit(summary_to_json(summarize(rows_from_csv(read_text(su_in)))), su_out);
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
