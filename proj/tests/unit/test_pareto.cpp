#include <gtest/gtest.h>

#include <cmath>

#include "qhsri/pareto.hpp"
#include "qhsri/random.hpp"

using namespace qhsri;

namespace {

std::vector<std::size_t> brute_force_filter(const Eigen::MatrixXd& pts) {
    std::vector<std::size_t> out;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        bool dominated = false;
        for (Eigen::Index j = 0; j < pts.rows() && !dominated; ++j)
            dominated = j != i && dominates(pts.row(j).transpose(), pts.row(i).transpose());
        if (!dominated) out.push_back(static_cast<std::size_t>(i));
    }
    return out;
}

// Monte-Carlo hypervolume over the box [lower, ref].
std::pair<double, double> mc_hypervolume(const Eigen::MatrixXd& front, const Eigen::VectorXd& lower,
                                         const Eigen::VectorXd& ref, int n, Rng& rng) {
    const Eigen::Index p = ref.size();
    const double box = (ref - lower).prod();
    int hits = 0;
    Eigen::VectorXd z(p);
    for (int s = 0; s < n; ++s) {
        for (Eigen::Index k = 0; k < p; ++k) z[k] = lower[k] + (ref[k] - lower[k]) * uniform01(rng);
        for (Eigen::Index i = 0; i < front.rows(); ++i)
            if ((front.row(i).transpose().array() <= z.array()).all()) {
                ++hits;
                break;
            }
    }
    const double frac = static_cast<double>(hits) / n;
    return {box * frac, box * std::sqrt(frac * (1 - frac) / n)};
}

}  // namespace

TEST(Dominates, Examples) {
    EXPECT_TRUE(dominates(Eigen::Vector2d(1, 2), Eigen::Vector2d(2, 3)));
    EXPECT_FALSE(dominates(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)));
    EXPECT_FALSE(dominates(Eigen::Vector2d(1, 3), Eigen::Vector2d(2, 2)));
    EXPECT_TRUE(dominates(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 3)));
    EXPECT_THROW(dominates(Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3)), std::invalid_argument);
}

TEST(NonDominatedFilter, Examples) {
    Eigen::MatrixXd pts(3, 2);
    pts << 1, 2, 2, 1, 2, 2;
    EXPECT_EQ(non_dominated_filter(pts), (std::vector<std::size_t>{0, 1}));
    const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(4, 3, 0.5);
    EXPECT_EQ(non_dominated_filter(same), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(NonDominatedFilter, MatchesBruteForceOracle) {
    Rng rng(21);
    for (int p = 1; p <= 4; ++p)
        for (int n : {1, 2, 10, 200, 500}) {
            Eigen::MatrixXd pts = uniform_points(n, p, rng);
            // Coarse values make ties and duplicates common.
            if (n == 200) pts = (pts * 4).array().floor();
            EXPECT_EQ(non_dominated_filter(pts), brute_force_filter(pts)) << "p=" << p << " n=" << n;
        }
}

TEST(NonDominatedSort, FrontsPartitionAndRespectDominance) {
    Rng rng(22);
    Eigen::MatrixXd pts = uniform_points(150, 3, rng);
    pts(7, 1) = std::numeric_limits<double>::quiet_NaN();
    const auto fronts = non_dominated_sort(pts);
    std::vector<int> rank(150, -1);
    for (std::size_t f = 0; f < fronts.size(); ++f)
        for (auto i : fronts[f]) {
            EXPECT_EQ(rank[i], -1);
            rank[i] = static_cast<int>(f);
        }
    for (int r : rank) EXPECT_GE(r, 0);
    EXPECT_EQ(fronts.back(), (std::vector<std::size_t>{7}));
    for (int i = 0; i < 150; ++i)
        for (int j = 0; j < 150; ++j)
            if (i != 7 && j != 7 && dominates(pts.row(i).transpose(), pts.row(j).transpose()))
                EXPECT_LT(rank[i], rank[j]);
    std::vector<std::size_t> first = fronts.front();
    std::sort(first.begin(), first.end());
    Eigen::MatrixXd finite = pts;
    finite.row(7).setConstant(10.0);
    EXPECT_EQ(first, brute_force_filter(finite));
}

TEST(CrowdingDistance, BoundaryInfiniteInteriorFinite) {
    Eigen::MatrixXd pts(4, 2);
    pts << 0, 3, 1, 2, 2, 1, 3, 0;
    const auto cd = crowding_distance(pts, {0, 1, 2, 3});
    EXPECT_TRUE(std::isinf(cd[0]));
    EXPECT_TRUE(std::isinf(cd[3]));
    EXPECT_NEAR(cd[1], 4.0 / 3.0, 1e-12);
    EXPECT_NEAR(cd[2], 4.0 / 3.0, 1e-12);
}

TEST(Nsga2, ConvexToySpansFront) {
    const BatchObjective f = [](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd y(x.rows(), 2);
        y.col(0) = x.col(0);
        y.col(1) = (1.0 - x.col(0).array()).matrix() + x.col(1);
        return y;
    };
    Nsga2Options o;
    o.pop_size = 100;
    o.generations = 50;
    o.seed = 3;
    const FrontArchive a = nsga2(f, 2, o);
    ASSERT_GT(a.size(), 10);
    std::vector<double> f1(a.objectives.col(0).data(), a.objectives.col(0).data() + a.size());
    std::sort(f1.begin(), f1.end());
    EXPECT_LT(f1.front(), 0.1);
    EXPECT_GT(f1.back(), 0.9);
    for (std::size_t i = 1; i < f1.size(); ++i) EXPECT_LT(f1[i] - f1[i - 1], 0.1);
    for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a.objectives(i, 1), 1.0 - a.objectives(i, 0), 1e-2);
}

TEST(Nsga2, SingleObjectiveConvergesToMinimizer) {
    const BatchObjective f = [](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd y(x.rows(), 1);
        y.col(0) = ((x.col(0).array() - 0.3).square() + (x.col(1).array() - 0.7).square()).matrix();
        return y;
    };
    Nsga2Options o;
    o.pop_size = 60;
    o.generations = 60;
    o.seed = 5;
    const FrontArchive a = nsga2(f, 2, o);
    ASSERT_GE(a.size(), 1);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a.designs(i, 0), 0.3, 1e-2);
        EXPECT_NEAR(a.designs(i, 1), 0.7, 1e-2);
    }
}

TEST(Nsga2, DeterministicAndNonDominated) {
    const BatchObjective f = [](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd y(x.rows(), 3);
        y.col(0) = x.col(0);
        y.col(1) = x.col(1);
        y.col(2) = (2.0 - x.col(0).array() - x.col(1).array() + x.col(2).array().square()).matrix();
        return y;
    };
    Nsga2Options o;
    o.pop_size = 40;
    o.generations = 20;
    o.seed = 9;
    const FrontArchive a = nsga2(f, 3, o), b = nsga2(f, 3, o);
    EXPECT_EQ(a.designs, b.designs);
    EXPECT_EQ(a.objectives, b.objectives);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < a.size(); ++j)
            EXPECT_FALSE(dominates(a.objectives.row(i).transpose(), a.objectives.row(j).transpose()));
}

TEST(Nsga2, NonFiniteObjectivesAreWorst) {
    const BatchObjective f = [](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd y(x.rows(), 2);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            y(i, 0) = x(i, 0) < 0.5 ? std::numeric_limits<double>::infinity() : x(i, 0);
            y(i, 1) = 1.0 - x(i, 0);
        }
        return y;
    };
    Nsga2Options o;
    o.pop_size = 40;
    o.generations = 20;
    const FrontArchive a = nsga2(f, 1, o);
    EXPECT_TRUE(a.objectives.allFinite());
}

TEST(Hypervolume, Examples) {
    Eigen::MatrixXd one(1, 2);
    one << 0.2, 0.4;
    EXPECT_NEAR(hypervolume(one, Eigen::Vector2d(1, 1)), 0.48, 1e-15);
    Eigen::MatrixXd two(2, 2);
    two << 0, 1, 1, 0;
    EXPECT_NEAR(hypervolume(two, Eigen::Vector2d(2, 2)), 3.0, 1e-15);
    EXPECT_EQ(hypervolume(Eigen::MatrixXd(0, 2), Eigen::Vector2d(1, 1)), 0.0);
    Eigen::MatrixXd outside(1, 2);
    outside << 1.0, 0.5;
    EXPECT_EQ(hypervolume(outside, Eigen::Vector2d(1, 1)), 0.0);
    Eigen::MatrixXd line(1, 1);
    line << 0.25;
    EXPECT_NEAR(hypervolume(line, Eigen::VectorXd::Constant(1, 1.0)), 0.75, 1e-15);
}

TEST(Hypervolume, TwoPointExampleAgreesWithMonteCarlo) {
    Rng rng(23);
    Eigen::MatrixXd two(2, 2);
    two << 0, 1, 1, 0;
    const auto [est, se] = mc_hypervolume(two, Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 2), 1000000, rng);
    EXPECT_NEAR(est, 3.0, 3 * se);
}

TEST(Hypervolume, RandomFrontsAgreeWithMonteCarlo) {
    Rng rng(24);
    for (int p : {2, 3}) {
        const Eigen::MatrixXd pts = uniform_points(30, p, rng);
        const Eigen::VectorXd ref = Eigen::VectorXd::Constant(p, 1.1);
        const auto [est, se] = mc_hypervolume(pts, Eigen::VectorXd::Zero(p), ref, 200000, rng);
        EXPECT_NEAR(hypervolume(pts, ref), est, 4 * se + 1e-12) << "p=" << p;
    }
}

TEST(Hypervolume, ThreeObjectiveInclusionExclusion) {
    Eigen::MatrixXd pts(2, 3);
    pts << 0, 0, 0.5, 0.5, 0.5, 0;
    // 1*1*0.5 + 0.5*0.5*1 - 0.5*0.5*0.5
    EXPECT_NEAR(hypervolume(pts, Eigen::Vector3d(1, 1, 1)), 0.625, 1e-15);
}

TEST(Hypervolume, MonotoneUnderAddition) {
    Rng rng(25);
    for (int rep = 0; rep < 100; ++rep) {
        const int p = 2 + rep % 2;
        const Eigen::VectorXd ref = Eigen::VectorXd::Ones(p);
        Eigen::MatrixXd pts = uniform_points(8, p, rng);
        const double base = hypervolume(pts, ref);
        Eigen::MatrixXd more(9, p);
        more.topRows(8) = pts;
        more.row(8) = uniform_points(1, p, rng);
        EXPECT_GE(hypervolume(more, ref), base - 1e-12);
        // A point dominated by an existing member leaves the volume unchanged.
        more.row(8) = pts.row(0).array() + 0.5 * (1.0 - pts.row(0).array());
        EXPECT_NEAR(hypervolume(more, ref), base, 1e-12);
    }
}
