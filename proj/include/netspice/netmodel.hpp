#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace netspice {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Multivariate node signals. Rows are nodes, columns are time samples.
// Indices are zero-based throughout the API; file formats label nodes from 1.
class TimeSeries {
public:
    TimeSeries() = default;

    explicit TimeSeries(Matrix data) : data_(std::move(data)) {
        if (data_.rows() < 2) {
            throw std::invalid_argument("TimeSeries: need at least 2 nodes");
        }
        if (data_.cols() < 1) {
            throw std::invalid_argument("TimeSeries: need at least 1 sample");
        }
        if (!data_.allFinite()) {
            throw std::invalid_argument("TimeSeries: non-finite sample");
        }
    }

    std::size_t nodes() const { return static_cast<std::size_t>(data_.rows()); }
    std::size_t samples() const { return static_cast<std::size_t>(data_.cols()); }

    const Matrix& data() const { return data_; }
    double operator()(std::size_t node, std::size_t t) const {
        return data_(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(t));
    }

    // First `length` samples of every node.
    TimeSeries prefix(std::size_t length) const {
        if (length > samples()) {
            throw std::out_of_range("TimeSeries::prefix: length exceeds series");
        }
        return TimeSeries(data_.leftCols(static_cast<Eigen::Index>(length)));
    }

private:
    Matrix data_;
};

// Per-node linear predictor problem y = A theta + e.
//
// Column block j of A (columns j*K .. j*K+K-1) holds node j's past samples,
// most recent first. Row n predicts time t0 + n.
struct RegressionProblem {
    Vector y;
    Matrix A;
    std::size_t node = 0;
    std::size_t K = 1;
    std::size_t t0 = 1;

    std::size_t rows() const { return static_cast<std::size_t>(y.size()); }
    std::size_t columns() const { return static_cast<std::size_t>(A.cols()); }
};

struct NodeEstimate {
    Vector theta;                 // J blocks of K taps, block j = source node j
    Vector p;                     // SPICE powers, normalized so sum v^2 p + v0^2 sigma2 = 1
    double sigma2 = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
    bool interpolating = false;   // exact fit, residual zero
    std::vector<double> objective_trace;
};

struct NetworkEstimate {
    std::size_t J = 0;
    std::size_t K = 0;
    double delta = 0.0;
    BoolMatrix adjacency;                              // (i, j): edge j -> i
    std::vector<std::vector<Vector>> edge_taps;        // [i][j], zero vector when no edge
    std::vector<Vector> self_taps;                     // thresholded theta_ii

    // Thresholded full parameter vector of node i, blocks ordered by source.
    Vector node_theta(std::size_t i) const {
        Vector theta = Vector::Zero(static_cast<Eigen::Index>(J * K));
        for (std::size_t j = 0; j < J; ++j) {
            const Vector& block = (i == j) ? self_taps[i] : edge_taps[i][j];
            theta.segment(static_cast<Eigen::Index>(j * K), static_cast<Eigen::Index>(K)) = block;
        }
        return theta;
    }

    std::size_t edge_count() const { return static_cast<std::size_t>(adjacency.count()); }
};

// Row n holds the K samples preceding time t0 + n: entry (n, k) = series[t0 + n - 1 - k].
inline Matrix build_lag_matrix(const Eigen::Ref<const Vector>& series, std::size_t t0,
                               std::size_t N, std::size_t K) {
    const auto T = static_cast<std::size_t>(series.size());
    if (K < 1 || N < 1) {
        throw std::out_of_range("build_lag_matrix: N and K must be positive");
    }
    if (t0 < K) {
        throw std::out_of_range("build_lag_matrix: t0 must leave K past samples");
    }
    if (t0 + N > T) {
        throw std::out_of_range("build_lag_matrix: window runs past end of series");
    }
    Matrix lag(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K));
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < K; ++k) {
            lag(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) =
                series(static_cast<Eigen::Index>(t0 + n - 1 - k));
        }
    }
    return lag;
}

inline RegressionProblem build_regression_problem(const TimeSeries& w, std::size_t node,
                                                  std::size_t K, std::size_t t0, std::size_t N) {
    const std::size_t J = w.nodes();
    if (node >= J) {
        throw std::out_of_range("build_regression_problem: node index " + std::to_string(node) +
                                " out of range for J=" + std::to_string(J));
    }
    RegressionProblem problem;
    problem.node = node;
    problem.K = K;
    problem.t0 = t0;
    problem.A.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(J * K));
    for (std::size_t j = 0; j < J; ++j) {
        const Vector row = w.data().row(static_cast<Eigen::Index>(j)).transpose();
        problem.A.middleCols(static_cast<Eigen::Index>(j * K), static_cast<Eigen::Index>(K)) =
            build_lag_matrix(row, t0, N, K);
    }
    problem.y = w.data()
                    .row(static_cast<Eigen::Index>(node))
                    .segment(static_cast<Eigen::Index>(t0), static_cast<Eigen::Index>(N))
                    .transpose();
    return problem;
}

// Uses every sample: t0 = K, N = T - K.
inline RegressionProblem build_regression_problem(const TimeSeries& w, std::size_t node,
                                                  std::size_t K) {
    if (w.samples() <= K) {
        throw std::out_of_range("build_regression_problem: series shorter than K + 1");
    }
    return build_regression_problem(w, node, K, K, w.samples() - K);
}

// Per-tap rule: entries with |theta| < delta are zeroed, |theta| == delta survives.
inline Vector threshold_taps(const Eigen::Ref<const Vector>& theta, double delta) {
    if (!(delta > 0.0)) {
        throw std::invalid_argument("threshold_taps: delta must be positive");
    }
    Vector out = theta;
    for (Eigen::Index m = 0; m < out.size(); ++m) {
        if (std::abs(out(m)) < delta) out(m) = 0.0;
    }
    return out;
}

inline NetworkEstimate assemble_network(const std::vector<Vector>& thetas, double delta,
                                        std::size_t K) {
    const std::size_t J = thetas.size();
    if (K < 1) throw std::invalid_argument("assemble_network: K must be positive");
    NetworkEstimate net;
    net.J = J;
    net.K = K;
    net.delta = delta;
    net.adjacency = BoolMatrix::Constant(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(J), false);
    net.edge_taps.assign(J, std::vector<Vector>(J, Vector::Zero(static_cast<Eigen::Index>(K))));
    net.self_taps.assign(J, Vector::Zero(static_cast<Eigen::Index>(K)));

    for (std::size_t i = 0; i < J; ++i) {
        if (static_cast<std::size_t>(thetas[i].size()) != J * K) {
            throw std::invalid_argument("assemble_network: estimate " + std::to_string(i) +
                                        " has length " + std::to_string(thetas[i].size()) +
                                        ", expected J*K=" + std::to_string(J * K));
        }
        const Vector kept = threshold_taps(thetas[i], delta);
        for (std::size_t j = 0; j < J; ++j) {
            Vector block = kept.segment(static_cast<Eigen::Index>(j * K), static_cast<Eigen::Index>(K));
            if (i == j) {
                net.self_taps[i] = block;
            } else if ((block.array() != 0.0).any()) {
                net.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = true;
                net.edge_taps[i][j] = block;
            }
        }
    }
    return net;
}

inline NetworkEstimate assemble_network(const std::vector<NodeEstimate>& estimates, double delta,
                                        std::size_t K) {
    std::vector<Vector> thetas;
    thetas.reserve(estimates.size());
    for (const auto& e : estimates) thetas.push_back(e.theta);
    return assemble_network(thetas, delta, K);
}

}  // namespace netspice
