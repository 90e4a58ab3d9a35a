#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "netspice/io.hpp"

using namespace netspice;

TEST(CsvIo, RoundTripIsExact) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd(0.0, 1e3);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix data(2 + trial % 5, 1 + trial * 7);
        for (Eigen::Index i = 0; i < data.size(); ++i) data(i) = nd(gen) * std::pow(10.0, (trial % 9) - 4);
        const TimeSeries w(data);
        std::stringstream buf;
        io::write_csv(buf, w);
        const TimeSeries back = io::read_csv(buf);
        EXPECT_EQ(back.data(), w.data());
    }
}

TEST(CsvIo, HeaderAndLayout) {
    Matrix data(2, 2);
    data << 1.5, 2.5, -3.0, 4.0;
    std::stringstream buf;
    io::write_csv(buf, TimeSeries(data));
    EXPECT_EQ(buf.str(), "node_1,node_2\n1.5,-3\n2.5,4\n");
}

TEST(CsvIo, MalformedInput) {
    std::stringstream wrong_header("a,b\n1,2\n");
    EXPECT_THROW(io::read_csv(wrong_header), std::runtime_error);
    std::stringstream ragged("node_1,node_2\n1,2\n3\n");
    EXPECT_THROW(io::read_csv(ragged), std::runtime_error);
    std::stringstream text("node_1,node_2\n1,abc\n");
    EXPECT_THROW(io::read_csv(text), std::runtime_error);
    std::stringstream empty("");
    EXPECT_THROW(io::read_csv(empty), std::runtime_error);
    std::stringstream single("node_1\n1\n");
    EXPECT_THROW(io::read_csv(single), std::invalid_argument);
    std::stringstream crlf("node_1,node_2\r\n1,2\r\n");
    EXPECT_EQ(io::read_csv(crlf).samples(), 1u);
}

TEST(NetworkJson, RoundTripAndOneBasedLabels) {
    std::vector<Vector> thetas(3, Vector::Zero(6));
    thetas[0] << 0.8, 0.1, 0.0, 0.0, 0.3, -0.25;
    thetas[2] << 0.0, 0.0, 0.6, 0.0, 0.0, 0.0;
    const NetworkEstimate net = assemble_network(thetas, 0.1, 2);
    const auto j = io::to_json(net);
    ASSERT_EQ(j.at("edges").size(), 2u);
    EXPECT_EQ(j["edges"][0]["from"], 3);
    EXPECT_EQ(j["edges"][0]["to"], 1);
    const NetworkEstimate back = io::network_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.adjacency, net.adjacency);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.node_theta(i), net.node_theta(i));
    auto broken = j;
    broken["edges"][0]["from"] = 1;  // self loop
    EXPECT_THROW(io::network_from_json(broken), std::runtime_error);
}

TEST(TruthJson, RoundTrip) {
    NetworkSpec spec;
    spec.mode = NetworkMode::Rational;
    const GroundTruthNetwork net = generate_network(spec, 3);
    const GroundTruthNetwork back = io::ground_truth_from_json(nlohmann::json::parse(io::to_json(net).dump()));
    EXPECT_EQ(back.adjacency, net.adjacency);
    EXPECT_EQ(back.sigma2, net.sigma2);
    EXPECT_EQ(back.mode, net.mode);
    EXPECT_EQ(back.seed, net.seed);
    for (std::size_t i = 0; i < net.J; ++i) {
        EXPECT_EQ(back.H[i].numerator, net.H[i].numerator);
        for (std::size_t k = 0; k < net.J; ++k) {
            ASSERT_EQ(back.G[i][k].has_value(), net.G[i][k].has_value());
            if (net.G[i][k]) EXPECT_EQ(back.G[i][k]->denominator, net.G[i][k]->denominator);
        }
    }
}

TEST(DiagnosticsJson, RoundTrip) {
    NodeEstimate e;
    e.theta = Vector::LinSpaced(4, -1.0, 1.0);
    e.p = Vector::Constant(4, 0.125);
    e.sigma2 = 0.3;
    e.kkt_residual = 1e-12;
    e.iterations = 17;
    e.converged = true;
    const auto back = io::node_estimates_from_json(nlohmann::json::parse(io::to_json({e, e}, 2).dump()));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].theta, e.theta);
    EXPECT_EQ(back[1].sigma2, e.sigma2);
    EXPECT_EQ(back[1].iterations, 17u);
}
