#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "netspice/datagen.hpp"
#include "netspice/metrics.hpp"
#include "netspice/netmodel.hpp"
#include "netspice/spice.hpp"

namespace netspice {

struct ExperimentConfig {
    std::string name = "experiment";
    std::size_t J = 8;
    std::size_t K = 3;
    double rho = 0.25;
    NetworkMode mode = NetworkMode::Fir;
    std::size_t min_order = 1;
    std::size_t max_order = 5;
    std::vector<double> n_ratios{0.5, 1.0, 2.0, 4.0, 8.0};
    std::size_t monte_carlo = 50;
    double delta = 0.1;
    std::uint64_t master_seed = 2020;
    std::size_t burn_in = 500;
    SolverConfig solver;

    void validate() const {
        if (J < 2) throw std::invalid_argument("ExperimentConfig: J must be >= 2");
        if (K < 1) throw std::invalid_argument("ExperimentConfig: K must be >= 1");
        if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("ExperimentConfig: rho must lie in (0, 1]");
        if (monte_carlo < 1) throw std::invalid_argument("ExperimentConfig: monte_carlo must be >= 1");
        if (!(delta > 0.0)) throw std::invalid_argument("ExperimentConfig: delta must be positive");
        if (min_order < 1 || min_order > max_order) throw std::invalid_argument("ExperimentConfig: bad order range");
        if (n_ratios.empty()) throw std::invalid_argument("ExperimentConfig: n_ratios is empty");
        for (std::size_t k = 0; k < n_ratios.size(); ++k) {
            if (!(n_ratios[k] > 0.0)) throw std::invalid_argument("ExperimentConfig: n_ratios must be positive");
            if (k && !(n_ratios[k] > n_ratios[k - 1])) throw std::invalid_argument("ExperimentConfig: n_ratios must be sorted ascending");
        }
        solver.validate();
    }

    std::size_t samples_for(double ratio) const {
        const auto N = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(J * K)));
        return std::max<std::size_t>(N, 1);
    }

    NetworkSpec network_spec() const {
        NetworkSpec spec;
        spec.J = J;
        spec.K = K;
        spec.rho = rho;
        spec.mode = mode;
        spec.min_order = min_order;
        spec.max_order = max_order;
        return spec;
    }
};

inline void to_json(nlohmann::json& j, const SolverConfig& s) {
    j = {{"max_iterations", s.max_iterations},
         {"rel_tol", s.rel_tol},
         {"kkt_tol", s.kkt_tol},
         {"power_floor", s.power_floor},
         {"lambda_scale", s.lambda_scale == LambdaScale::InvSqrtN ? "inv_sqrt_n" : "unit"},
         {"noise_weight", s.noise_weight}};
}

inline void from_json(const nlohmann::json& j, SolverConfig& s) {
    s.max_iterations = j.value("max_iterations", s.max_iterations);
    s.rel_tol = j.value("rel_tol", s.rel_tol);
    s.kkt_tol = j.value("kkt_tol", s.kkt_tol);
    s.power_floor = j.value("power_floor", s.power_floor);
    s.noise_weight = j.value("noise_weight", s.noise_weight);
    if (j.contains("lambda_scale")) {
        const auto scale = j.at("lambda_scale").get<std::string>();
        if (scale == "inv_sqrt_n") s.lambda_scale = LambdaScale::InvSqrtN;
        else if (scale == "unit") s.lambda_scale = LambdaScale::Unit;
        else throw std::invalid_argument("lambda_scale must be inv_sqrt_n or unit");
    }
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = {{"name", c.name},
         {"J", c.J},
         {"K", c.K},
         {"rho", c.rho},
         {"mode", to_string(c.mode)},
         {"order_range", {c.min_order, c.max_order}},
         {"n_ratios", c.n_ratios},
         {"monte_carlo", c.monte_carlo},
         {"delta", c.delta},
         {"master_seed", c.master_seed},
         {"burn_in", c.burn_in},
         {"solver", c.solver}};
}

// Missing keys keep their defaults.
inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    c.name = j.value("name", c.name);
    c.J = j.value("J", c.J);
    c.K = j.value("K", c.K);
    c.rho = j.value("rho", c.rho);
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("order_range")) {
        const auto range = j.at("order_range").get<std::vector<std::size_t>>();
        if (range.size() != 2) throw std::invalid_argument("order_range must have two entries");
        c.min_order = range[0];
        c.max_order = range[1];
    }
    c.n_ratios = j.value("n_ratios", c.n_ratios);
    c.monte_carlo = j.value("monte_carlo", c.monte_carlo);
    c.delta = j.value("delta", c.delta);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.burn_in = j.value("burn_in", c.burn_in);
    if (j.contains("solver")) c.solver = j.at("solver").get<SolverConfig>();
}

// splitmix64 finalizer over (master, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::size_t worker_count_from_env(std::size_t fallback = 1) {
    if (const char* env = std::getenv("NETSPICE_WORKERS")) {
        try {
            const long value = std::stol(env);
            if (value > 0) return static_cast<std::size_t>(value);
        } catch (const std::exception&) {
        }
    }
    return fallback;
}

namespace detail {

// Runs task(k) for k in [0, count) on `workers` threads. Exceptions are rethrown after join.
template <class Task>
void parallel_for(std::size_t count, std::size_t workers, Task&& task) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t k = 0; k < count; ++k) task(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < count; k = next++) {
                try {
                    task(k);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

struct NetworkFit {
    NetworkEstimate network;
    std::vector<NodeEstimate> nodes;
};

// Solves every node over the full usable window and thresholds the result.
inline NetworkFit estimate_network(const TimeSeries& w, std::size_t K, double delta, const SolverConfig& solver,
                                   std::size_t workers = 1) {
    if (w.samples() <= K + 1) {
        throw std::invalid_argument("estimate_network: need more than K + 1 samples, have " +
                                    std::to_string(w.samples()));
    }
    const std::size_t J = w.nodes();
    NetworkFit fit;
    fit.nodes.resize(J);
    detail::parallel_for(J, workers, [&](std::size_t i) {
        const RegressionProblem problem = build_regression_problem(w, i, K);
        if ((problem.A.array() == 0.0).all()) {
            // Degenerate all-zero data: nothing to explain, nothing to estimate.
            fit.nodes[i].theta = Vector::Zero(problem.A.cols());
            fit.nodes[i].p = Vector::Zero(problem.A.cols());
            return;
        }
        fit.nodes[i] = solve_node(problem, solver);
    });
    fit.network = assemble_network(fit.nodes, delta, K);
    return fit;
}

// Re-thresholds stored estimates at each delta without solving again.
inline std::vector<std::pair<double, TopologyScore>> sweep_threshold(const std::vector<NodeEstimate>& nodes,
                                                                     const BoolMatrix& truth, std::size_t K,
                                                                     const std::vector<double>& deltas) {
    std::vector<std::pair<double, TopologyScore>> out;
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (!(deltas[k] > 0.0)) throw std::invalid_argument("sweep_threshold: deltas must be positive");
        if (k && deltas[k] < deltas[k - 1]) throw std::invalid_argument("sweep_threshold: deltas must be sorted");
        const NetworkEstimate net = assemble_network(nodes, deltas[k], K);
        out.emplace_back(deltas[k], topology_score(net.adjacency, truth));
    }
    return out;
}

struct ResultRow {
    std::size_t run_id = 0;
    NetworkMode mode = NetworkMode::Fir;
    double n_ratio = 0.0;
    std::size_t N = 0;
    double tpr = 0.0;
    double fpr = 0.0;
    double dis = 0.0;
    double nmse = 0.0;
    std::size_t nmse_nodes = 0;
    double mean_kkt_residual = 0.0;
    std::size_t failed_nodes = 0;
    double wall_time = 0.0;  // seconds; excluded from reproducibility comparisons

    bool same_result(const ResultRow& o) const {
        return run_id == o.run_id && mode == o.mode && n_ratio == o.n_ratio && N == o.N && tpr == o.tpr &&
               fpr == o.fpr && dis == o.dis && nmse == o.nmse && nmse_nodes == o.nmse_nodes &&
               mean_kkt_residual == o.mean_kkt_residual && failed_nodes == o.failed_nodes;
    }
};

struct AggregateRow {
    NetworkMode mode = NetworkMode::Fir;
    double n_ratio = 0.0;
    std::size_t N = 0;
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<AggregateRow> aggregates;

    const AggregateRow& aggregate(double n_ratio, const std::string& metric) const {
        for (const auto& a : aggregates)
            if (a.n_ratio == n_ratio && a.metric == metric) return a;
        throw std::out_of_range("no aggregate for metric " + metric);
    }
};

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"tpr", "fpr", "dis", "nmse", "mean_kkt_residual", "failed_nodes"};
    return names;
}

inline double metric_value(const ResultRow& row, const std::string& metric) {
    if (metric == "tpr") return row.tpr;
    if (metric == "fpr") return row.fpr;
    if (metric == "dis") return row.dis;
    if (metric == "nmse") return row.nmse;
    if (metric == "mean_kkt_residual") return row.mean_kkt_residual;
    if (metric == "failed_nodes") return static_cast<double>(row.failed_nodes);
    throw std::invalid_argument("unknown metric " + metric);
}

// Mean and sample standard deviation per (n_ratio, metric), in n_ratio order.
inline std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
    std::map<double, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) groups[r.n_ratio].push_back(&r);
    std::vector<AggregateRow> out;
    for (const auto& [ratio, group] : groups) {
        for (const auto& metric : metric_names()) {
            AggregateRow a;
            a.mode = group.front()->mode;
            a.n_ratio = ratio;
            a.N = group.front()->N;
            a.metric = metric;
            std::vector<double> values;
            for (const auto* r : group)
                if (metric != "nmse" || r->nmse_nodes > 0)  // runs with all-zero truth carry no NMSE
                    values.push_back(metric_value(*r, metric));
            a.count = values.size();
            if (!values.empty()) {
                double sum = 0.0;
                for (double x : values) sum += x;
                a.mean = sum / static_cast<double>(values.size());
                double sq = 0.0;
                for (double x : values) sq += (x - a.mean) * (x - a.mean);
                a.stddev = values.size() > 1 ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : 0.0;
            }
            out.push_back(std::move(a));
        }
    }
    return out;
}

struct RunArtifacts {
    GroundTruthNetwork truth;
    TimeSeries series;
    std::vector<ResultRow> rows;
};

// One Monte-Carlo realization: a stable network, one simulation long enough for the largest
// N, and an estimate on each nested prefix.
inline RunArtifacts run_single(const ExperimentConfig& config, std::size_t run_id) {
    config.validate();
    const std::uint64_t run_seed = derive_seed(config.master_seed, run_id);
    RunArtifacts out;
    out.truth = generate_network(config.network_spec(), run_seed);
    const std::size_t longest = config.samples_for(config.n_ratios.back()) + config.K;
    out.series = simulate(out.truth, longest, config.burn_in, derive_seed(run_seed, 1));
    const std::vector<Vector> truth_taps = true_predictor_taps(out.truth, config.K);

    for (double ratio : config.n_ratios) {
        const std::size_t N = config.samples_for(ratio);
        const auto start = std::chrono::steady_clock::now();
        const NetworkFit fit = estimate_network(out.series.prefix(N + config.K), config.K, config.delta, config.solver);
        const auto stop = std::chrono::steady_clock::now();

        ResultRow row;
        row.run_id = run_id;
        row.mode = config.mode;
        row.n_ratio = ratio;
        row.N = N;
        const TopologyScore score = topology_score(fit.network.adjacency, out.truth.adjacency);
        row.tpr = score.tpr;
        row.fpr = score.fpr;
        row.dis = score.dis;

        std::vector<Vector> estimate;
        for (std::size_t i = 0; i < config.J; ++i) estimate.push_back(fit.network.node_theta(i));
        try {
            const NmseResult err = nmse_detail(estimate, truth_taps);
            row.nmse = err.value;
            row.nmse_nodes = err.nodes_used;
        } catch (const std::domain_error&) {
            row.nmse = 0.0;
            row.nmse_nodes = 0;
        }
        double kkt = 0.0;
        for (const auto& node : fit.nodes) {
            kkt += node.kkt_residual;
            if (!node.converged) ++row.failed_nodes;
        }
        row.mean_kkt_residual = kkt / static_cast<double>(fit.nodes.size());
        row.wall_time = std::chrono::duration<double>(stop - start).count();
        out.rows.push_back(row);
    }
    return out;
}

inline ResultTable run_experiment(const ExperimentConfig& config, std::size_t workers = 1) {
    config.validate();
    std::vector<std::vector<ResultRow>> per_run(config.monte_carlo);
    detail::parallel_for(config.monte_carlo, workers,
                         [&](std::size_t run) { per_run[run] = run_single(config, run).rows; });
    ResultTable table;
    for (auto& rows : per_run)
        for (auto& r : rows) table.rows.push_back(r);
    table.aggregates = aggregate(table.rows);
    return table;
}

// ---------------------------------------------------------------------------
// CSV output

namespace detail {

inline std::ostream& precise(std::ostream& out) {
    out.precision(std::numeric_limits<double>::max_digits10);
    return out;
}

}  // namespace detail

inline void write_table_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    detail::precise(out);
    out << "run_id,mode,n_ratio,N,tpr,fpr,dis,nmse,nmse_nodes,mean_kkt_residual,failed_nodes,wall_time\n";
    for (const auto& r : rows) {
        out << r.run_id << ',' << to_string(r.mode) << ',' << r.n_ratio << ',' << r.N << ',' << r.tpr << ','
            << r.fpr << ',' << r.dis << ',' << r.nmse << ',' << r.nmse_nodes << ',' << r.mean_kkt_residual << ','
            << r.failed_nodes << ',' << r.wall_time << '\n';
    }
}

// Plot-ready long format: run_id,mode,n_ratio,N,metric,value
inline void write_long_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    detail::precise(out);
    out << "run_id,mode,n_ratio,N,metric,value\n";
    for (const auto& r : rows)
        for (const auto& metric : metric_names())
            out << r.run_id << ',' << to_string(r.mode) << ',' << r.n_ratio << ',' << r.N << ',' << metric << ','
                << metric_value(r, metric) << '\n';
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    detail::precise(out);
    out << "mode,n_ratio,N,metric,mean,std,count\n";
    for (const auto& a : rows)
        out << to_string(a.mode) << ',' << a.n_ratio << ',' << a.N << ',' << a.metric << ',' << a.mean << ','
            << a.stddev << ',' << a.count << '\n';
}

inline std::vector<ResultRow> read_table_csv(std::istream& in) {
    std::string line;
    std::getline(in, line);
    if (line.rfind("run_id,mode,n_ratio,N,tpr", 0) != 0) throw std::runtime_error("not a result table");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 12) throw std::runtime_error("result table row has " + std::to_string(cells.size()) + " cells");
        ResultRow r;
        r.run_id = std::stoul(cells[0]);
        r.mode = parse_mode(cells[1]);
        r.n_ratio = std::stod(cells[2]);
        r.N = std::stoul(cells[3]);
        r.tpr = std::stod(cells[4]);
        r.fpr = std::stod(cells[5]);
        r.dis = std::stod(cells[6]);
        r.nmse = std::stod(cells[7]);
        r.nmse_nodes = std::stoul(cells[8]);
        r.mean_kkt_residual = std::stod(cells[9]);
        r.failed_nodes = std::stoul(cells[10]);
        r.wall_time = std::stod(cells[11]);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace netspice
