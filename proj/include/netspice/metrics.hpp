#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "netspice/netmodel.hpp"

namespace netspice {

struct TopologyScore {
    double tpr = 0.0;
    double fpr = 0.0;
    double dis = 0.0;
    std::size_t true_edges = 0;
    std::size_t found_true = 0;
    std::size_t false_edges = 0;
    std::size_t possible_non_edges = 0;
    bool tpr_by_convention = false;  // truth has no edges, tpr := 1
    bool fpr_by_convention = false;  // truth is complete, fpr := 0
};

// Off-diagonal edge detection rates. Diagonal entries are ignored on both sides.
inline TopologyScore topology_score(const BoolMatrix& est, const BoolMatrix& truth) {
    if (est.rows() != truth.rows() || est.cols() != truth.cols() || est.rows() != est.cols()) {
        throw std::invalid_argument("topology_score: adjacency dimensions differ");
    }
    TopologyScore s;
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
        for (Eigen::Index j = 0; j < truth.cols(); ++j) {
            if (i == j) continue;
            if (truth(i, j)) {
                ++s.true_edges;
                if (est(i, j)) ++s.found_true;
            } else {
                ++s.possible_non_edges;
                if (est(i, j)) ++s.false_edges;
            }
        }
    }
    if (s.true_edges == 0) {
        s.tpr = 1.0;
        s.tpr_by_convention = true;
    } else {
        s.tpr = static_cast<double>(s.found_true) / static_cast<double>(s.true_edges);
    }
    if (s.possible_non_edges == 0) {
        s.fpr = 0.0;
        s.fpr_by_convention = true;
    } else {
        s.fpr = static_cast<double>(s.false_edges) / static_cast<double>(s.possible_non_edges);
    }
    s.dis = std::sqrt(s.fpr * s.fpr + (1.0 - s.tpr) * (1.0 - s.tpr));
    return s;
}

struct NmseResult {
    double value = 0.0;           // mean over nodes with nonzero truth
    std::size_t nodes_used = 0;
    std::size_t nodes_skipped = 0;  // zero ground truth, NMSE undefined for that node
};

inline NmseResult nmse_detail(const std::vector<Vector>& estimate, const std::vector<Vector>& truth) {
    if (estimate.size() != truth.size()) throw std::invalid_argument("nmse: node count mismatch");
    NmseResult out;
    double total = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (estimate[i].size() != truth[i].size()) {
            throw std::invalid_argument("nmse: parameter length mismatch at node " + std::to_string(i));
        }
        const double denom = truth[i].squaredNorm();
        if (denom == 0.0) {
            ++out.nodes_skipped;
            continue;
        }
        total += (estimate[i] - truth[i]).squaredNorm() / denom;
        ++out.nodes_used;
    }
    if (out.nodes_used == 0) throw std::domain_error("nmse: ground truth is zero at every node");
    out.value = total / static_cast<double>(out.nodes_used);
    return out;
}

inline double nmse(const std::vector<Vector>& estimate, const std::vector<Vector>& truth) {
    return nmse_detail(estimate, truth).value;
}

}  // namespace netspice
