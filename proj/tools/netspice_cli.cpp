// netspice command-line front end: generate, estimate, evaluate, experiment, replay.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netspice/netspice.hpp"

namespace fs = std::filesystem;
using namespace netspice;

namespace {

struct SolverFlags {
    std::size_t max_iterations = SolverConfig{}.max_iterations;
    double kkt_tol = SolverConfig{}.kkt_tol;

    void attach(CLI::App* app) {
        app->add_option("--max-iterations", max_iterations, "SPICE sweep budget per node");
        app->add_option("--kkt-tol", kkt_tol, "optimality tolerance");
    }
    void apply(SolverConfig& s, const CLI::App* app) const {
        if (app->count("--max-iterations")) s.max_iterations = max_iterations;
        if (app->count("--kkt-tol")) s.kkt_tol = kkt_tol;
    }
};

void ensure_parent(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

template <class Writer>
void write_file(const std::string& path, Writer&& writer) {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    writer(out);
    if (!out) throw std::runtime_error("failed writing " + path);
}

// --- experiment config with command-line overrides ------------------------

struct ExperimentFlags {
    std::string config_path;
    std::string mode;
    std::size_t monte_carlo = 0;
    std::uint64_t seed = 0;
    std::vector<double> n_ratios;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "experiment JSON config")->check(CLI::ExistingFile);
        app->add_option("--mode", mode, "fir | fir_noise | rational");
        app->add_option("--monte-carlo", monte_carlo, "number of Monte-Carlo runs");
        app->add_option("--seed", seed, "master seed");
        app->add_option("--n-ratios", n_ratios, "sample-size grid as multiples of J*K")->delimiter(',');
    }

    ExperimentConfig resolve(const CLI::App* app) const {
        ExperimentConfig config;
        if (!config_path.empty()) {
            config = io::load_json(config_path).get<ExperimentConfig>();
            if (!io::load_json(config_path).contains("name")) config.name = fs::path(config_path).stem().string();
        }
        if (app->count("--mode")) config.mode = parse_mode(mode);
        if (app->count("--monte-carlo")) config.monte_carlo = monte_carlo;
        if (app->count("--seed")) config.master_seed = seed;
        if (app->count("--n-ratios")) config.n_ratios = n_ratios;
        config.validate();
        return config;
    }
};

void print_summary(const ResultTable& table) {
    std::printf("%-8s %6s %8s %8s %8s %10s\n", "n_ratio", "N", "tpr", "fpr", "dis", "nmse");
    std::vector<double> ratios;
    for (const auto& a : table.aggregates)
        if (ratios.empty() || ratios.back() != a.n_ratio) ratios.push_back(a.n_ratio);
    for (double r : ratios) {
        std::printf("%-8g %6zu %8.4f %8.4f %8.4f %10.4g\n", r, table.aggregate(r, "tpr").N, table.aggregate(r, "tpr").mean,
                    table.aggregate(r, "fpr").mean, table.aggregate(r, "dis").mean, table.aggregate(r, "nmse").mean);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperparameter-free sparse dynamic network identification"};
    app.require_subcommand(1);
    app.fallthrough();
    std::size_t workers = worker_count_from_env();
    app.add_option("--workers", workers, "parallel workers (default: NETSPICE_WORKERS or 1)");

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "draw a stable random network and simulate it");
    ExperimentFlags gen_flags;
    gen_flags.attach(gen);
    std::size_t gen_T = 200, gen_run = 0;
    std::string gen_truth = "truth.json", gen_output = "w.csv";
    gen->add_option("--T", gen_T, "number of samples to write");
    gen->add_option("--run", gen_run, "Monte-Carlo run index used to derive the seed");
    gen->add_option("--truth", gen_truth, "ground-truth network JSON output");
    gen->add_option("--output", gen_output, "time-series CSV output");

    // estimate ---------------------------------------------------------------
    auto* est = app.add_subcommand("estimate", "estimate a network from a CSV time series");
    std::string est_input, est_output = "network.json", est_diag;
    std::size_t est_K = 3;
    double est_delta = 0.1;
    SolverFlags est_solver;
    est->add_option("--input", est_input, "time-series CSV (header node_1,...,node_J)")->required()->check(CLI::ExistingFile);
    est->add_option("--K", est_K, "lag depth");
    est->add_option("--delta", est_delta, "tap threshold");
    est->add_option("--output", est_output, "network JSON output");
    est->add_option("--diagnostics", est_diag, "per-node solver diagnostics JSON output");
    est_solver.attach(est);

    // evaluate ---------------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "score an estimated network against ground truth");
    std::string eval_est, eval_truth, eval_output = "scores.csv", eval_diag, eval_sweep = "sweep.csv";
    std::size_t eval_run = 0, eval_N = 0;
    std::vector<double> eval_deltas;
    eval->add_option("--estimate", eval_est, "network JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--truth", eval_truth, "ground-truth JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--output", eval_output, "scores CSV (long format)");
    eval->add_option("--run", eval_run, "run_id written to the scores");
    eval->add_option("--N", eval_N, "sample count written to the scores");
    eval->add_option("--diagnostics", eval_diag, "node diagnostics JSON, enables --deltas")->check(CLI::ExistingFile);
    eval->add_option("--deltas", eval_deltas, "threshold sweep values")->delimiter(',');
    eval->add_option("--sweep-output", eval_sweep, "threshold sweep CSV");

    // experiment -------------------------------------------------------------
    auto* exp = app.add_subcommand("experiment", "run a Monte-Carlo sweep over sample sizes");
    ExperimentFlags exp_flags;
    exp_flags.attach(exp);
    std::string exp_outdir;
    exp->add_option("--output-dir", exp_outdir, "output directory (default results/<config name>)");

    // replay -----------------------------------------------------------------
    auto* rep = app.add_subcommand("replay", "re-run one Monte-Carlo run from its derived seed");
    ExperimentFlags rep_flags;
    rep_flags.attach(rep);
    std::size_t rep_run = 0;
    std::string rep_table, rep_save;
    rep->add_option("--run", rep_run, "run_id to replay")->required();
    rep->add_option("--table", rep_table, "result table to compare against")->check(CLI::ExistingFile);
    rep->add_option("--save", rep_save, "directory for the run's truth.json and w.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        nlohmann::json line = {{"error", e.what()}, {"command", "parse"}};
        std::fprintf(stderr, "%s\n", line.dump().c_str());
        return 2;
    }

    try {
        if (*gen) {
            const ExperimentConfig config = gen_flags.resolve(gen);
            const std::uint64_t seed = derive_seed(config.master_seed, gen_run);
            const GroundTruthNetwork truth = generate_network(config.network_spec(), seed);
            const TimeSeries w = simulate(truth, gen_T, config.burn_in, derive_seed(seed, 1));
            ensure_parent(gen_truth);
            io::save_json(gen_truth, io::to_json(truth));
            ensure_parent(gen_output);
            io::save_csv(gen_output, w);
            std::printf("wrote %s (%zu edges) and %s (%zu x %zu)\n", gen_truth.c_str(), static_cast<std::size_t>(truth.adjacency.count()),
                        gen_output.c_str(), w.samples(), w.nodes());
        } else if (*est) {
            SolverConfig solver;
            est_solver.apply(solver, est);
            const TimeSeries w = io::load_csv(est_input);
            const NetworkFit fit = estimate_network(w, est_K, est_delta, solver, workers);
            ensure_parent(est_output);
            io::save_json(est_output, io::to_json(fit.network));
            if (!est_diag.empty()) {
                ensure_parent(est_diag);
                io::save_json(est_diag, io::to_json(fit.nodes, est_K));
            }
            std::size_t failed = 0;
            for (const auto& n : fit.nodes) failed += n.converged ? 0 : 1;
            std::printf("wrote %s: %zu edges, %zu/%zu nodes converged\n", est_output.c_str(), fit.network.edge_count(),
                        fit.nodes.size() - failed, fit.nodes.size());
        } else if (*eval) {
            const NetworkEstimate net = io::network_from_json(io::load_json(eval_est));
            const GroundTruthNetwork truth = io::ground_truth_from_json(io::load_json(eval_truth));
            if (net.J != truth.J) throw std::invalid_argument("estimate has J=" + std::to_string(net.J) + ", truth has J=" + std::to_string(truth.J));
            ResultRow row;
            row.run_id = eval_run;
            row.mode = truth.mode;
            row.N = eval_N;
            row.n_ratio = static_cast<double>(eval_N) / static_cast<double>(net.J * net.K);
            const TopologyScore score = topology_score(net.adjacency, truth.adjacency);
            row.tpr = score.tpr;
            row.fpr = score.fpr;
            row.dis = score.dis;
            std::vector<Vector> estimate;
            for (std::size_t i = 0; i < net.J; ++i) estimate.push_back(net.node_theta(i));
            const auto taps = true_predictor_taps(truth, net.K);
            bool any_truth = false;
            for (const auto& t : taps) any_truth = any_truth || t.squaredNorm() > 0.0;
            if (any_truth) {
                const NmseResult err = nmse_detail(estimate, taps);
                row.nmse = err.value;
                row.nmse_nodes = err.nodes_used;
            }
            write_file(eval_output, [&](std::ostream& out) {
                detail::precise(out);
                out << "run_id,mode,n_ratio,N,metric,value\n";
                for (const std::string metric : {"tpr", "fpr", "dis", "nmse"})
                    out << row.run_id << ',' << to_string(row.mode) << ',' << row.n_ratio << ',' << row.N << ',' << metric
                        << ',' << metric_value(row, metric) << '\n';
            });
            std::printf("tpr=%.4f fpr=%.4f dis=%.4f nmse=%.4g -> %s\n", row.tpr, row.fpr, row.dis, row.nmse, eval_output.c_str());
            if (!eval_deltas.empty()) {
                if (eval_diag.empty()) throw std::invalid_argument("--deltas requires --diagnostics");
                const auto nodes = io::node_estimates_from_json(io::load_json(eval_diag));
                const auto sweep = sweep_threshold(nodes, truth.adjacency, net.K, eval_deltas);
                write_file(eval_sweep, [&](std::ostream& out) {
                    detail::precise(out);
                    out << "delta,tpr,fpr,dis,found_true,false_edges\n";
                    for (const auto& [delta, s] : sweep)
                        out << delta << ',' << s.tpr << ',' << s.fpr << ',' << s.dis << ',' << s.found_true << ','
                            << s.false_edges << '\n';
                });
            }
        } else if (*exp) {
            const ExperimentConfig config = exp_flags.resolve(exp);
            const std::string outdir = exp_outdir.empty() ? (fs::path("results") / config.name).string() : exp_outdir;
            fs::create_directories(outdir);
            const ResultTable table = run_experiment(config, workers);
            nlohmann::json resolved = config;
            io::save_json((fs::path(outdir) / "config.json").string(), resolved);
            write_file((fs::path(outdir) / "table.csv").string(), [&](std::ostream& out) { write_table_csv(out, table.rows); });
            write_file((fs::path(outdir) / "long.csv").string(), [&](std::ostream& out) { write_long_csv(out, table.rows); });
            write_file((fs::path(outdir) / "aggregate.csv").string(),
                       [&](std::ostream& out) { write_aggregate_csv(out, table.aggregates); });
            print_summary(table);
            std::printf("wrote %s/table.csv\n", outdir.c_str());
        } else if (*rep) {
            const ExperimentConfig config = rep_flags.resolve(rep);
            if (rep_run >= config.monte_carlo) {
                throw std::invalid_argument("run " + std::to_string(rep_run) + " is outside the configured " +
                                            std::to_string(config.monte_carlo) + " runs");
            }
            const RunArtifacts run = run_single(config, rep_run);
            write_table_csv(std::cout, run.rows);
            if (!rep_save.empty()) {
                fs::create_directories(rep_save);
                io::save_json((fs::path(rep_save) / "truth.json").string(), io::to_json(run.truth));
                io::save_csv((fs::path(rep_save) / "w.csv").string(), run.series);
            }
            if (!rep_table.empty()) {
                std::ifstream in(rep_table);
                const auto recorded = read_table_csv(in);
                std::vector<ResultRow> expected;
                for (const auto& r : recorded)
                    if (r.run_id == rep_run) expected.push_back(r);
                bool same = expected.size() == run.rows.size();
                for (std::size_t k = 0; same && k < expected.size(); ++k) same = expected[k].same_result(run.rows[k]);
                if (!same) {
                    std::fprintf(stderr, "{\"error\":\"replay_mismatch\",\"run\":%zu}\n", rep_run);
                    return 3;
                }
                std::fprintf(stderr, "replay of run %zu matches %s\n", rep_run, rep_table.c_str());
            }
        }
    } catch (const std::exception& e) {
        nlohmann::json line = {{"error", e.what()}, {"command", app.get_subcommands().front()->get_name()}};
        std::fprintf(stderr, "%s\n", line.dump().c_str());
        return 1;
    }
    return 0;
}
