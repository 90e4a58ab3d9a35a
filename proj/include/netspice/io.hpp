#pragma once

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "netspice/datagen.hpp"
#include "netspice/netmodel.hpp"

namespace netspice::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// TimeSeries CSV: header node_1,...,node_J then one row per time index.

inline void write_csv(std::ostream& out, const TimeSeries& w) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t j = 0; j < w.nodes(); ++j) out << (j ? "," : "") << "node_" << j + 1;
    out << '\n';
    for (std::size_t t = 0; t < w.samples(); ++t) {
        for (std::size_t j = 0; j < w.nodes(); ++j) out << (j ? "," : "") << w(j, t);
        out << '\n';
    }
}

inline TimeSeries read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty input");
    std::size_t J = 0;
    {
        std::stringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
            if (cell != "node_" + std::to_string(J + 1)) {
                throw std::runtime_error("read_csv: expected header column node_" + std::to_string(J + 1) +
                                         ", found '" + cell + "'");
            }
            ++J;
        }
    }
    std::vector<double> values;
    std::size_t T = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::size_t count = 0;
        while (std::getline(row, cell, ',')) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0) throw std::runtime_error("read_csv: bad number '" + cell + "' on data row " + std::to_string(T + 1));
            values.push_back(value);
            ++count;
        }
        if (count != J) {
            throw std::runtime_error("read_csv: data row " + std::to_string(T + 1) + " has " + std::to_string(count) +
                                     " columns, expected " + std::to_string(J));
        }
        ++T;
    }
    Matrix data(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(T));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < J; ++j)
            data(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t)) = values[t * J + j];
    return TimeSeries(std::move(data));
}

inline void save_csv(const std::string& path, const TimeSeries& w) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(out, w);
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline TimeSeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_csv(in);
}

// ---------------------------------------------------------------------------
// JSON helpers

inline json to_json_vector(const Vector& v) {
    json out = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
    return out;
}

inline Vector vector_from_json(const json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = j.at(k).get<double>();
    return v;
}

inline json to_json(const BoolMatrix& adj) {
    json out = json::array();
    for (Eigen::Index i = 0; i < adj.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < adj.cols(); ++j) row.push_back(adj(i, j) ? 1 : 0);
        out.push_back(row);
    }
    return out;
}

inline BoolMatrix adjacency_from_json(const json& j) {
    const auto J = static_cast<Eigen::Index>(j.size());
    BoolMatrix adj(J, J);
    for (Eigen::Index r = 0; r < J; ++r) {
        if (j.at(static_cast<std::size_t>(r)).size() != j.size()) throw std::runtime_error("adjacency is not square");
        for (Eigen::Index c = 0; c < J; ++c) adj(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<int>() != 0;
    }
    return adj;
}

// ---------------------------------------------------------------------------
// NetworkEstimate: {"J","K","delta","edges":[{"from","to","taps"}],"self_taps":[[...]]}
// Node labels in files are 1-based.

inline json to_json(const NetworkEstimate& net) {
    json edges = json::array();
    for (std::size_t i = 0; i < net.J; ++i)
        for (std::size_t j = 0; j < net.J; ++j)
            if (net.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
                edges.push_back({{"from", j + 1}, {"to", i + 1}, {"taps", to_json_vector(net.edge_taps[i][j])}});
    json self = json::array();
    for (const auto& taps : net.self_taps) self.push_back(to_json_vector(taps));
    return {{"J", net.J}, {"K", net.K}, {"delta", net.delta}, {"edges", edges}, {"self_taps", self}};
}

inline NetworkEstimate network_from_json(const json& j) {
    NetworkEstimate net;
    net.J = j.at("J").get<std::size_t>();
    net.K = j.at("K").get<std::size_t>();
    net.delta = j.at("delta").get<double>();
    const auto J = static_cast<Eigen::Index>(net.J);
    net.adjacency = BoolMatrix::Constant(J, J, false);
    net.edge_taps.assign(net.J, std::vector<Vector>(net.J, Vector::Zero(static_cast<Eigen::Index>(net.K))));
    net.self_taps.assign(net.J, Vector::Zero(static_cast<Eigen::Index>(net.K)));
    for (const auto& e : j.at("edges")) {
        const auto from = e.at("from").get<std::size_t>();
        const auto to = e.at("to").get<std::size_t>();
        if (from < 1 || from > net.J || to < 1 || to > net.J || from == to) {
            throw std::runtime_error("network JSON: invalid edge " + std::to_string(from) + " -> " + std::to_string(to));
        }
        Vector taps = vector_from_json(e.at("taps"));
        if (static_cast<std::size_t>(taps.size()) != net.K) throw std::runtime_error("network JSON: edge taps must have length K");
        net.adjacency(static_cast<Eigen::Index>(to - 1), static_cast<Eigen::Index>(from - 1)) = true;
        net.edge_taps[to - 1][from - 1] = std::move(taps);
    }
    const auto& self = j.at("self_taps");
    if (self.size() != net.J) throw std::runtime_error("network JSON: self_taps must have J entries");
    for (std::size_t i = 0; i < net.J; ++i) net.self_taps[i] = vector_from_json(self[i]);
    return net;
}

// ---------------------------------------------------------------------------
// Per-node solver diagnostics.

inline json to_json(const std::vector<NodeEstimate>& nodes, std::size_t K) {
    json arr = json::array();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        arr.push_back({{"node", i + 1},
                       {"theta", to_json_vector(n.theta)},
                       {"p", to_json_vector(n.p)},
                       {"sigma2", n.sigma2},
                       {"kkt_residual", n.kkt_residual},
                       {"iterations", n.iterations},
                       {"converged", n.converged},
                       {"interpolating", n.interpolating}});
    }
    return {{"K", K}, {"nodes", arr}};
}

inline std::vector<NodeEstimate> node_estimates_from_json(const json& j) {
    std::vector<NodeEstimate> out;
    for (const auto& n : j.at("nodes")) {
        NodeEstimate e;
        e.theta = vector_from_json(n.at("theta"));
        e.p = vector_from_json(n.at("p"));
        e.sigma2 = n.at("sigma2").get<double>();
        e.kkt_residual = n.at("kkt_residual").get<double>();
        e.iterations = n.at("iterations").get<std::size_t>();
        e.converged = n.at("converged").get<bool>();
        e.interpolating = n.value("interpolating", false);
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// GroundTruthNetwork

inline json to_json(const TransferFunction& tf) {
    return {{"numerator", tf.numerator}, {"denominator", tf.denominator}};
}

inline TransferFunction transfer_function_from_json(const json& j) {
    TransferFunction tf;
    tf.numerator = j.at("numerator").get<std::vector<double>>();
    tf.denominator = j.at("denominator").get<std::vector<double>>();
    if (tf.denominator.empty() || tf.denominator[0] != 1.0) {
        throw std::runtime_error("transfer function denominator must be monic");
    }
    return tf;
}

inline json to_json(const GroundTruthNetwork& net) {
    json edges = json::array();
    for (std::size_t i = 0; i < net.J; ++i)
        for (std::size_t j = 0; j < net.J; ++j)
            if (net.G[i][j]) {
                json e = to_json(*net.G[i][j]);
                e["from"] = j + 1;
                e["to"] = i + 1;
                edges.push_back(e);
            }
    json noise = json::array();
    for (const auto& h : net.H) noise.push_back(to_json(h));
    return {{"J", net.J},
            {"mode", to_string(net.mode)},
            {"seed", net.seed},
            {"adjacency", to_json(net.adjacency)},
            {"edges", edges},
            {"noise_filters", noise},
            {"sigma2", net.sigma2}};
}

inline GroundTruthNetwork ground_truth_from_json(const json& j) {
    GroundTruthNetwork net;
    net.J = j.at("J").get<std::size_t>();
    net.mode = parse_mode(j.at("mode").get<std::string>());
    net.seed = j.value("seed", std::uint64_t{0});
    net.adjacency = adjacency_from_json(j.at("adjacency"));
    if (static_cast<std::size_t>(net.adjacency.rows()) != net.J) throw std::runtime_error("truth JSON: adjacency size != J");
    net.G.assign(net.J, std::vector<std::optional<TransferFunction>>(net.J));
    for (const auto& e : j.at("edges")) {
        const auto from = e.at("from").get<std::size_t>();
        const auto to = e.at("to").get<std::size_t>();
        if (from < 1 || from > net.J || to < 1 || to > net.J || from == to) {
            throw std::runtime_error("truth JSON: invalid edge " + std::to_string(from) + " -> " + std::to_string(to));
        }
        net.G[to - 1][from - 1] = transfer_function_from_json(e);
    }
    for (const auto& h : j.at("noise_filters")) net.H.push_back(transfer_function_from_json(h));
    net.sigma2 = j.at("sigma2").get<std::vector<double>>();
    if (net.H.size() != net.J || net.sigma2.size() != net.J) {
        throw std::runtime_error("truth JSON: noise_filters and sigma2 must have J entries");
    }
    return net;
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace netspice::io
