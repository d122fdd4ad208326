#include <gtest/gtest.h>

#include "qhsri/optimize.hpp"
#include "qhsri/problems.hpp"

using namespace qhsri;

TEST(ParticleSwarm, FindsBraninMinimumOnNativeBox) {
    const auto f = [](const Eigen::VectorXd& x) { return branin(x); };
    SwarmOptions o;
    o.swarm_size = 50;
    o.iterations = 200;
    o.seed = 3;
    const LocalResult r = minimize_particle_swarm(f, Eigen::Vector2d(-5, 0), Eigen::Vector2d(10, 15), o);
    EXPECT_NEAR(r.value, kBraninMinimum, 1e-4);
    EXPECT_EQ(r.evaluations, 50 * 201);
}

TEST(ParticleSwarm, StaysInBoxAndKeepsStartingPoint) {
    // Minimum outside the box: the answer is the nearest corner.
    const auto f = [](const Eigen::VectorXd& x) { return (x.array() - 2.0).square().sum(); };
    const Eigen::VectorXd lo = Eigen::VectorXd::Zero(3), hi = Eigen::VectorXd::Ones(3);
    SwarmOptions o;
    o.swarm_size = 20;
    o.iterations = 100;
    const LocalResult r = minimize_particle_swarm(f, lo, hi, o);
    EXPECT_NEAR(r.value, 3.0, 1e-6);
    EXPECT_GE(r.x.minCoeff(), 0.0);
    EXPECT_LE(r.x.maxCoeff(), 1.0);

    o.iterations = 0;
    const LocalResult seeded = minimize_particle_swarm(f, lo, hi, o, Eigen::VectorXd::Ones(3));
    EXPECT_DOUBLE_EQ(seeded.value, 3.0);
    EXPECT_EQ(seeded.x, Eigen::VectorXd::Ones(3));
}

TEST(ParticleSwarm, DeterministicGivenSeed) {
    const auto f = [](const Eigen::VectorXd& x) { return std::sin(5 * x[0]) + x[1] * x[1]; };
    SwarmOptions o;
    o.seed = 9;
    o.iterations = 10;
    const Eigen::Vector2d lo(0, -1), hi(1, 1);
    EXPECT_EQ(minimize_particle_swarm(f, lo, hi, o).x, minimize_particle_swarm(f, lo, hi, o).x);
}
