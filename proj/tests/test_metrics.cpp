#include <random>

#include <gtest/gtest.h>

#include "netspice/metrics.hpp"

using namespace netspice;

namespace {

BoolMatrix edges(std::size_t J, std::initializer_list<std::pair<int, int>> list) {
    BoolMatrix adj = BoolMatrix::Constant(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(J), false);
    for (auto [i, j] : list) adj(i, j) = true;
    return adj;
}

}  // namespace

TEST(Topology, PerfectRecovery) {
    const BoolMatrix truth = edges(4, {{1, 0}, {2, 1}, {0, 3}});
    const TopologyScore s = topology_score(truth, truth);
    EXPECT_EQ(s.tpr, 1.0);
    EXPECT_EQ(s.fpr, 0.0);
    EXPECT_EQ(s.dis, 0.0);
    EXPECT_EQ(s.true_edges, 3u);
    EXPECT_EQ(s.possible_non_edges, 9u);
}

TEST(Topology, EmptyEstimate) {
    const BoolMatrix truth = edges(4, {{1, 0}, {2, 1}});
    const TopologyScore s = topology_score(edges(4, {}), truth);
    EXPECT_EQ(s.tpr, 0.0);
    EXPECT_EQ(s.fpr, 0.0);
    EXPECT_EQ(s.dis, 1.0);
}

TEST(Topology, MixedCounts) {
    // truth {1<-0, 2<-1}; estimate {1<-0, 0<-2}: tpr 1/2, fpr 1/4
    const TopologyScore s = topology_score(edges(3, {{1, 0}, {0, 2}}), edges(3, {{1, 0}, {2, 1}}));
    EXPECT_DOUBLE_EQ(s.tpr, 0.5);
    EXPECT_DOUBLE_EQ(s.fpr, 0.25);
    EXPECT_DOUBLE_EQ(s.dis, std::sqrt(0.25 * 0.25 + 0.5 * 0.5));
    EXPECT_EQ(s.found_true, 1u);
    EXPECT_EQ(s.false_edges, 1u);
}

TEST(Topology, DiagonalIsIgnoredAndConventionsFlagged) {
    BoolMatrix est = edges(3, {{0, 0}, {1, 1}});
    const TopologyScore none = topology_score(est, edges(3, {}));
    EXPECT_TRUE(none.tpr_by_convention);
    EXPECT_EQ(none.tpr, 1.0);
    EXPECT_EQ(none.fpr, 0.0);
    BoolMatrix full = BoolMatrix::Constant(3, 3, true);
    const TopologyScore complete = topology_score(full, full);
    EXPECT_TRUE(complete.fpr_by_convention);
    EXPECT_EQ(complete.dis, 0.0);
    EXPECT_THROW(topology_score(edges(3, {}), edges(4, {})), std::invalid_argument);
}

TEST(Topology, DistanceStaysInRange) {
    std::mt19937 gen(1);
    std::bernoulli_distribution coin(0.3);
    for (int trial = 0; trial < 200; ++trial) {
        BoolMatrix a(6, 6), b(6, 6);
        for (int i = 0; i < 36; ++i) a(i) = coin(gen), b(i) = coin(gen);
        const TopologyScore s = topology_score(a, b);
        EXPECT_GE(s.dis, 0.0);
        EXPECT_LE(s.dis, std::sqrt(2.0));
        EXPECT_GE(s.tpr, 0.0);
        EXPECT_LE(s.fpr, 1.0);
    }
}

TEST(Nmse, Examples) {
    std::vector<Vector> truth{Vector::Zero(3), Vector::Zero(3)};
    truth[0] << 1.0, 2.0, 0.0;
    truth[1] << 0.0, 0.0, 3.0;
    EXPECT_EQ(nmse(truth, truth), 0.0);
    EXPECT_DOUBLE_EQ(nmse({Vector::Zero(3), Vector::Zero(3)}, truth), 1.0);
    std::vector<Vector> est = truth;
    est[0] *= 2.0;  // error 1 at node 0, 0 at node 1
    EXPECT_DOUBLE_EQ(nmse(est, truth), 0.5);
}

TEST(Nmse, ZeroTruthNodesAreSkipped) {
    std::vector<Vector> truth{Vector::Ones(2), Vector::Zero(2)};
    std::vector<Vector> est{Vector::Ones(2), Vector::Constant(2, 5.0)};
    const NmseResult r = nmse_detail(est, truth);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.nodes_used, 1u);
    EXPECT_EQ(r.nodes_skipped, 1u);
    EXPECT_THROW(nmse(est, {Vector::Zero(2), Vector::Zero(2)}), std::domain_error);
    EXPECT_THROW(nmse({Vector::Ones(3), Vector::Ones(2)}, truth), std::invalid_argument);
    EXPECT_THROW(nmse({Vector::Ones(2)}, truth), std::invalid_argument);
}

TEST(Nmse, ScaleInvariant) {
    std::mt19937 gen(2);
    std::normal_distribution<double> nd;
    std::vector<Vector> truth(4, Vector(5)), est(4, Vector(5));
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 5; ++k) truth[i](k) = nd(gen), est[i](k) = nd(gen);
    const double base = nmse(est, truth);
    for (auto& v : truth) v *= 3.0;
    for (auto& v : est) v *= 3.0;
    EXPECT_NEAR(nmse(est, truth), base, 1e-12 * base);
}
