#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "netspice/datagen.hpp"

using namespace netspice;

namespace {

// Durand-Kerner on c0 z^n + ... + cn, long double; independent of the companion-matrix routine.
std::vector<std::complex<long double>> dk_roots(std::vector<double> c) {
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    const std::size_t n = c.size() - 1;
    std::vector<std::complex<long double>> z(n);
    for (std::size_t k = 0; k < n; ++k) z[k] = std::pow(std::complex<long double>(0.4L, 0.9L), static_cast<int>(k));
    auto eval = [&](std::complex<long double> x) {
        std::complex<long double> acc = 0;
        for (double ck : c) acc = acc * x + static_cast<long double>(ck / c[0]);
        return acc;
    };
    for (int it = 0; it < 2000; ++it) {
        for (std::size_t k = 0; k < n; ++k) {
            std::complex<long double> den = 1;
            for (std::size_t l = 0; l < n; ++l)
                if (l != k) den *= z[k] - z[l];
            z[k] -= eval(z[k]) / den;
        }
    }
    return z;
}

long double dk_max_modulus(const std::vector<double>& c) {
    long double m = 0;
    for (const auto& r : dk_roots(c)) m = std::max(m, std::abs(r));
    return m;
}

GroundTruthNetwork empty_network(std::size_t J) {
    GroundTruthNetwork net;
    net.J = J;
    net.adjacency = BoolMatrix::Constant(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(J), false);
    net.G.assign(J, std::vector<std::optional<TransferFunction>>(J));
    net.H.assign(J, TransferFunction{{1.0}, {1.0}});
    net.sigma2.assign(J, 1.0);
    return net;
}

void add_edge(GroundTruthNetwork& net, std::size_t from, std::size_t to, TransferFunction tf) {
    net.adjacency(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) = true;
    net.G[to][from] = std::move(tf);
}

}  // namespace

TEST(Topology, EdgeCounts) {
    EXPECT_EQ(random_topology(8, 0.25, std::uint64_t{1}).count(), 14);
    EXPECT_EQ(random_topology(8, 1.0, std::uint64_t{2}).count(), 56);
    EXPECT_EQ(random_topology(8, 0.005, std::uint64_t{3}).count(), 0);
    EXPECT_THROW(random_topology(8, 0.0, std::uint64_t{3}), std::invalid_argument);
    EXPECT_THROW(random_topology(1, 0.5, std::uint64_t{3}), std::invalid_argument);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const BoolMatrix adj = random_topology(6, 0.4, s);
        EXPECT_EQ(adj.count(), 12);
        for (int i = 0; i < 6; ++i) EXPECT_FALSE(adj(i, i));
    }
}

TEST(Topology, EdgesAreSpreadOut) {
    // Every off-diagonal slot should be hit over many draws.
    Eigen::MatrixXi hits = Eigen::MatrixXi::Zero(5, 5);
    for (std::uint64_t s = 0; s < 400; ++s) hits += random_topology(5, 0.25, s).cast<int>();
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            if (i == j) EXPECT_EQ(hits(i, j), 0);
            else EXPECT_GT(hits(i, j), 50);
        }
}

TEST(Filters, FirTapsInUnitInterval) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const TransferFunction tf = random_fir(3, rng);
        ASSERT_EQ(tf.numerator.size(), 4u);
        EXPECT_EQ(tf.numerator[0], 0.0);
        for (std::size_t k = 1; k < 4; ++k) {
            EXPECT_GE(tf.numerator[k], 0.0);
            EXPECT_LE(tf.numerator[k], 1.0);
        }
        EXPECT_EQ(tf.denominator, std::vector<double>{1.0});
    }
}

TEST(Filters, RationalFirstOrder) {
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        const TransferFunction tf = random_rational(1, 1, rng);
        ASSERT_EQ(tf.denominator.size(), 2u);
        ASSERT_EQ(tf.numerator.size(), 2u);
        EXPECT_EQ(tf.numerator[0], 0.0);
        EXPECT_LE(std::abs(tf.denominator[1]), 0.95);
        // b q^-1 / (1 + a q^-1): h_k = b (-a)^(k-1), ||h||^2 = b^2 / (1 - a^2)
        const double b = tf.numerator[1], a = tf.denominator[1];
        const double norm = std::abs(b) / std::sqrt(1.0 - a * a);
        EXPECT_GE(norm, 0.1 - 1e-9);
        EXPECT_LE(norm, 1.0 + 1e-9);
    }
}

TEST(Filters, RationalOrdersAndStability) {
    Rng rng(8);
    std::vector<int> seen(6, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const TransferFunction tf = random_rational(1, 5, rng);
        const std::size_t n = tf.denominator.size() - 1;
        ASSERT_GE(n, 1u);
        ASSERT_LE(n, 5u);
        ++seen[n];
        EXPECT_TRUE(tf.strictly_proper());
        EXPECT_EQ(tf.denominator[0], 1.0);
        EXPECT_LE(dk_max_modulus(tf.denominator), 0.95 + 1e-9);
    }
    for (int n = 1; n <= 5; ++n) EXPECT_GT(seen[n], 0);
}

TEST(Polynomials, RootsAndImpulse) {
    // (1 - 0.5 q^-1)(1 + 0.25 q^-1)
    const auto p = poly_multiply({1.0, -0.5}, {1.0, 0.25});
    EXPECT_EQ(p, (std::vector<double>{1.0, -0.25, -0.125}));
    EXPECT_NEAR(max_root_modulus(p), 0.5, 1e-12);
    EXPECT_NEAR(max_root_modulus({1.0, 0.0, 4.0}), 2.0, 1e-12);
    const auto h = impulse_response({1.0}, {1.0, -0.5}, 5);
    for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(h[k], std::pow(0.5, k));
}

TEST(Stability, TwoCycleWithLargeGainIsUnstable) {
    // w1 = 2 q^-1 w2, w2 = 2 q^-1 w1: loop 4 q^-2, closed-loop poles at z = +-2.
    GroundTruthNetwork net = empty_network(2);
    add_edge(net, 0, 1, {{0.0, 2.0}, {1.0}});
    add_edge(net, 1, 0, {{0.0, 2.0}, {1.0}});
    EXPECT_FALSE(network_stable(net));
    EXPECT_NEAR(closed_loop_spectral_radius(net), static_cast<double>(dk_max_modulus({1.0, 0.0, -4.0})), 1e-9);
    EXPECT_THROW(simulate(net, 10, 0, 1), std::invalid_argument);
}

TEST(Stability, SmallGainCycleIsStable) {
    GroundTruthNetwork net = empty_network(2);
    add_edge(net, 0, 1, {{0.0, 0.5}, {1.0}});
    add_edge(net, 1, 0, {{0.0, 0.5}, {1.0}});
    EXPECT_TRUE(network_stable(net));
    EXPECT_NEAR(closed_loop_spectral_radius(net), 0.5, 1e-9);
}

TEST(Stability, AcyclicNetworkIsStableRegardlessOfGain) {
    GroundTruthNetwork net = empty_network(4);
    add_edge(net, 0, 1, {{0.0, 5.0, 3.0}, {1.0}});
    add_edge(net, 1, 2, {{0.0, 9.0}, {1.0}});
    add_edge(net, 0, 3, {{0.0, 1.0}, {1.0, -0.9}});
    EXPECT_TRUE(network_stable(net));
    EXPECT_NEAR(closed_loop_spectral_radius(net), 0.9, 1e-9);
}

TEST(Stability, RationalThreeCycleMatchesCharacteristicPolynomial) {
    // Single cycle 0 -> 1 -> 2 -> 0: closed-loop poles are the roots of D1 D2 D3 - N1 N2 N3.
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        GroundTruthNetwork net = empty_network(3);
        std::vector<TransferFunction> g;
        for (int k = 0; k < 3; ++k) g.push_back(random_rational(1, 3, rng));
        for (auto& tf : g)
            for (double& c : tf.numerator) c *= 2.5;
        add_edge(net, 0, 1, g[0]);
        add_edge(net, 1, 2, g[1]);
        add_edge(net, 2, 0, g[2]);
        auto D = poly_multiply(poly_multiply(g[0].denominator, g[1].denominator), g[2].denominator);
        auto Nn = poly_multiply(poly_multiply(g[0].numerator, g[1].numerator), g[2].numerator);
        D.resize(std::max(D.size(), Nn.size()), 0.0);
        for (std::size_t k = 0; k < Nn.size(); ++k) D[k] -= Nn[k];
        const double expected = static_cast<double>(dk_max_modulus(D));
        EXPECT_NEAR(closed_loop_spectral_radius(net), expected, 1e-6 * std::max(1.0, expected)) << "trial " << trial;
        EXPECT_EQ(network_stable(net), expected < 1.0 - 1e-6);
    }
}

TEST(Simulate, PureNoiseVariance) {
    GroundTruthNetwork net = empty_network(3);
    net.sigma2 = {0.25, 1.0, 4.0};
    const TimeSeries w = simulate(net, 20000, 0, 5);
    for (int i = 0; i < 3; ++i) {
        const Eigen::RowVectorXd row = w.data().row(i);
        const double var = (row.array() - row.mean()).square().mean();
        // standard error of a Gaussian variance estimate is sigma^2 sqrt(2/T) ~ 1%; allow 5%
        EXPECT_NEAR(var, net.sigma2[i], 0.05 * net.sigma2[i]);
    }
}

TEST(Simulate, ZeroNoiseGivesZeroSignal) {
    GroundTruthNetwork net = empty_network(3);
    net.sigma2 = {0.0, 0.0, 0.0};
    add_edge(net, 0, 1, {{0.0, 0.7}, {1.0}});
    const TimeSeries w = simulate(net, 50, 10, 9);
    EXPECT_TRUE(w.data().isZero(0.0));
}

TEST(Simulate, ChainFollowsItsInput) {
    GroundTruthNetwork net = empty_network(2);
    net.sigma2 = {1.0, 0.0};
    add_edge(net, 0, 1, {{0.0, 0.5}, {1.0}});
    const TimeSeries w = simulate(net, 200, 20, 13);
    for (std::size_t t = 1; t < 200; ++t) EXPECT_DOUBLE_EQ(w(1, t), 0.5 * w(0, t - 1));
}

TEST(Simulate, BurnInDropsLeadingSamples) {
    GroundTruthNetwork net = empty_network(2);
    add_edge(net, 0, 1, {{0.0, 0.3, 0.2}, {1.0, -0.4}});
    const TimeSeries long_run = simulate(net, 80, 0, 21);
    const TimeSeries burned = simulate(net, 50, 30, 21);
    for (int i = 0; i < 2; ++i)
        for (std::size_t t = 0; t < 50; ++t) EXPECT_DOUBLE_EQ(burned(i, t), long_run(i, t + 30));
}

TEST(Simulate, Deterministic) {
    const GroundTruthNetwork net = generate_network(NetworkSpec{}, 77);
    const TimeSeries a = simulate(net, 100, 500, 3);
    const TimeSeries b = simulate(net, 100, 500, 3);
    const TimeSeries c = simulate(net, 100, 500, 4);
    EXPECT_EQ(a.data(), b.data());
    EXPECT_NE(a.data(), c.data());
}

TEST(PredictorTaps, RationalEdgeExample) {
    // G = 0.5 q^-1 / (1 - 0.2 q^-1), H = 1: taps 0.5, 0.1, 0.02
    GroundTruthNetwork net = empty_network(2);
    add_edge(net, 0, 1, {{0.0, 0.5}, {1.0, -0.2}});
    const auto taps = true_predictor_taps(net, 3);
    EXPECT_NEAR(taps[1](0), 0.5, 1e-15);
    EXPECT_NEAR(taps[1](1), 0.1, 1e-15);
    EXPECT_NEAR(taps[1](2), 0.02, 1e-15);
    EXPECT_TRUE(taps[1].tail(3).isZero(0.0));
    EXPECT_TRUE(taps[0].isZero(0.0));
}

TEST(PredictorTaps, NoiseModelEntersPredictor) {
    // H_1 = 1 / (1 - 0.5 q^-1): self block 1 - 1/H = 0.5 q^-1, edge G/H = 0.4 q^-1 (1 - 0.5 q^-1).
    GroundTruthNetwork net = empty_network(2);
    add_edge(net, 0, 1, {{0.0, 0.4}, {1.0}});
    net.H[1] = {{1.0}, {1.0, -0.5}};
    const auto taps = true_predictor_taps(net, 3);
    Vector expected(6);
    expected << 0.4, -0.2, 0.0, 0.5, 0.0, 0.0;
    EXPECT_LT((taps[1] - expected).cwiseAbs().maxCoeff(), 1e-15);
    net.H[1] = {{1.0, 1.5}, {1.0}};  // zero at -1.5: not invertible
    EXPECT_THROW(true_predictor_taps(net, 3), std::invalid_argument);
}

TEST(Generate, FirNetworkProperties) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const GroundTruthNetwork net = generate_network(NetworkSpec{}, seed);
        EXPECT_EQ(net.adjacency.count(), 14);
        EXPECT_TRUE(network_stable(net));
        for (std::size_t i = 0; i < 8; ++i) {
            EXPECT_EQ(net.H[i].numerator, std::vector<double>{1.0});
            EXPECT_GE(net.sigma2[i], 0.0);
            EXPECT_LE(net.sigma2[i], 1.0);
            for (std::size_t j = 0; j < 8; ++j)
                EXPECT_EQ(net.G[i][j].has_value(), net.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
    }
}

TEST(Generate, NoiseModesAreMonicAndMinimumPhase) {
    for (NetworkMode mode : {NetworkMode::FirNoise, NetworkMode::Rational}) {
        NetworkSpec spec;
        spec.mode = mode;
        const GroundTruthNetwork net = generate_network(spec, 5);
        EXPECT_TRUE(network_stable(net));
        for (const auto& H : net.H) {
            EXPECT_EQ(H.numerator[0], 1.0);
            EXPECT_EQ(H.denominator[0], 1.0);
            EXPECT_LT(dk_max_modulus(H.numerator), 1.0);
            EXPECT_LT(dk_max_modulus(H.denominator), 1.0);
            if (mode == NetworkMode::FirNoise) {
                EXPECT_EQ(H.numerator.size(), 3u);
                EXPECT_EQ(H.denominator.size(), 1u);
            }
        }
    }
}

TEST(Generate, DeterministicPerSeed) {
    NetworkSpec spec;
    spec.mode = NetworkMode::Rational;
    const GroundTruthNetwork a = generate_network(spec, 99);
    const GroundTruthNetwork b = generate_network(spec, 99);
    EXPECT_EQ(a.adjacency, b.adjacency);
    EXPECT_EQ(a.sigma2, b.sigma2);
    for (std::size_t i = 0; i < a.J; ++i)
        for (std::size_t j = 0; j < a.J; ++j)
            if (a.G[i][j]) EXPECT_EQ(a.G[i][j]->numerator, b.G[i][j]->numerator);
}

TEST(Generate, ModeNames) {
    for (NetworkMode m : {NetworkMode::Fir, NetworkMode::FirNoise, NetworkMode::Rational})
        EXPECT_EQ(parse_mode(to_string(m)), m);
    EXPECT_THROW(parse_mode("arma"), std::invalid_argument);
}
