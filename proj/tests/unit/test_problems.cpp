#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qhsri/pareto.hpp"
#include "qhsri/problems.hpp"
#include "qhsri/random.hpp"

using namespace qhsri;

namespace {

// Coordinate-wise pattern search from x inside [lo, hi]; returns the refined point.
template <typename F>
Eigen::VectorXd pattern_search(const F& f, Eigen::VectorXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    double fx = f(x);
    Eigen::VectorXd step = 0.1 * (hi - lo);
    while (step.maxCoeff() > 1e-12 * (hi - lo).maxCoeff()) {
        bool moved = false;
        for (Eigen::Index j = 0; j < x.size(); ++j)
            for (double dir : {-1.0, 1.0}) {
                Eigen::VectorXd y = x;
                y[j] = std::clamp(y[j] + dir * step[j], lo[j], hi[j]);
                const double fy = f(y);
                if (fy < fx) {
                    x = y;
                    fx = fy;
                    moved = true;
                }
            }
        if (!moved) step *= 0.5;
    }
    return x;
}

}  // namespace

TEST(Branin, MinimumFromGridAndRefinement) {
    const auto f = [](const Eigen::VectorXd& x) { return branin(x); };
    const Eigen::Vector2d lo(-5, 0), hi(10, 15);
    double best = 1e300;
    Eigen::VectorXd arg(2);
    for (int i = 0; i <= 300; ++i)
        for (int j = 0; j <= 300; ++j) {
            const Eigen::Vector2d x(-5 + 15.0 * i / 300, 15.0 * j / 300);
            if (f(x) < best) {
                best = f(x);
                arg = x;
            }
        }
    const Eigen::VectorXd refined = pattern_search(f, arg, lo, hi);
    EXPECT_NEAR(f(refined), kBraninMinimum, 1e-9);
    EXPECT_NEAR(branin(Eigen::Vector2d(std::numbers::pi, 2.275)), 0.397887, 1e-5);
}

TEST(Branin, ThreeMinimizersAgree) {
    const double a = branin(Eigen::Vector2d(-std::numbers::pi, 12.275));
    const double b = branin(Eigen::Vector2d(std::numbers::pi, 2.275));
    const double c = branin(Eigen::Vector2d(9.42478, 2.475));
    EXPECT_NEAR(a, b, 1e-5);
    EXPECT_NEAR(b, c, 1e-5);
    EXPECT_NEAR(a, kBraninMinimum, 1e-5);
}

TEST(Hartmann, MinimaFromMultiStartDescent) {
    Rng rng(51);
    for (int d : {3, 6}) {
        const auto f = [d](const Eigen::VectorXd& x) { return d == 3 ? hartmann3(x) : hartmann6(x); };
        double best = 1e300;
        for (int s = 0; s < 30; ++s) {
            const Eigen::VectorXd x0 = uniform_points(1, d, rng).row(0).transpose();
            const Eigen::VectorXd x =
                pattern_search(f, x0, Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d));
            best = std::min(best, f(x));
        }
        EXPECT_NEAR(best, d == 3 ? kHartmann3Minimum : kHartmann6Minimum, 1e-5) << "d=" << d;
    }
}

TEST(Problems, UnitMapAndKnownOptima) {
    for (const Problem& p : {branin_problem(), hartmann3_problem(), hartmann6_problem()}) {
        ASSERT_TRUE(p.optimum.has_value());
        ASSERT_TRUE(p.minimizer.has_value());
        EXPECT_NEAR(p.eval(*p.minimizer)[0], *p.optimum, 1e-5) << p.name;
        EXPECT_FALSE(p.noisy());
    }
    const Problem b = branin_problem();
    const Eigen::VectorXd native = b.to_native(Eigen::Vector2d(0.0, 1.0));
    EXPECT_EQ(native, Eigen::Vector2d(-5.0, 15.0));
    Rng rng(52);
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd u = uniform_points(1, 2, rng).row(0).transpose();
        EXPECT_EQ(b.eval(u)[0], branin(b.to_native(u)));
        EXPECT_EQ(b.eval(u), b.eval(u));
    }
}

TEST(Problems, BiObjectiveShapes) {
    Rng rng(53);
    for (const Problem& p : {p1_problem(), p2_problem(), make_problem("p1-rep3")}) {
        EXPECT_EQ(p.objectives, 2);
        for (int i = 0; i < 20; ++i) {
            const Eigen::VectorXd y = p.eval(uniform_points(1, p.dim, rng).row(0).transpose());
            ASSERT_EQ(y.size(), 2);
            EXPECT_TRUE(y.allFinite());
        }
    }
    EXPECT_EQ(make_problem("p1-rep3").dim, 6);
    // The first P1 objective is Branin on the unit square, up to scaling.
    const Problem p = p1_problem();
    const Eigen::Vector2d u(0.3, 0.7);
    const Eigen::Vector2d u2(0.6, 0.1);
    const double ratio = p.eval(u)[0] / branin_problem().eval(u)[0];
    EXPECT_NEAR(p.eval(u2)[0] / branin_problem().eval(u2)[0], ratio, 1e-9);
}

TEST(Problems, ReferenceFrontIsStableAcrossSeeds) {
    const Problem p = p1_problem();
    const BatchObjective f = [&](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd y(x.rows(), 2);
        for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(i) = p.eval(x.row(i).transpose()).transpose();
        return y;
    };
    Nsga2Options o;
    o.pop_size = 200;
    o.generations = 200;
    o.seed = 1;
    const FrontArchive a = nsga2(f, 2, o);
    o.seed = 2;
    const FrontArchive b = nsga2(f, 2, o);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < a.size(); ++j)
            EXPECT_FALSE(dominates(a.objectives.row(i).transpose(), a.objectives.row(j).transpose()));
    Eigen::MatrixXd both(a.size() + b.size(), 2);
    both << a.objectives, b.objectives;
    const Eigen::VectorXd nadir = both.colwise().maxCoeff().transpose();
    const Eigen::VectorXd ideal = both.colwise().minCoeff().transpose();
    const Eigen::VectorXd ref = nadir + 0.2 * (nadir - ideal);
    const double scale = (ref - ideal).prod();
    EXPECT_NEAR(hypervolume(a.objectives, ref) / scale, hypervolume(b.objectives, ref) / scale, 1e-3);
}

TEST(RepeatProblem, IdentityForOneBlock) {
    const Problem b = branin_problem();
    const Problem r = repeat_problem(b, 1);
    Rng rng(54);
    for (int i = 0; i < 100; ++i) {
        const Eigen::VectorXd u = uniform_points(1, 2, rng).row(0).transpose();
        EXPECT_EQ(r.eval(u), b.eval(u));
    }
}

TEST(RepeatProblem, BraninTwelve) {
    const Problem r = make_problem("branin-rep6");
    EXPECT_EQ(r.dim, 12);
    ASSERT_TRUE(r.optimum.has_value());
    EXPECT_NEAR(*r.optimum, kBraninMinimum, 1e-12);
    ASSERT_TRUE(r.minimizer.has_value());
    EXPECT_NEAR(r.eval(*r.minimizer)[0], 0.397887, 1e-5);
    const Problem b = branin_problem();
    Rng rng(55);
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd u = uniform_points(1, 2, rng).row(0).transpose();
        Eigen::VectorXd tiled(12);
        for (int k = 0; k < 6; ++k) tiled.segment(2 * k, 2) = u;
        EXPECT_NEAR(r.eval(tiled)[0], b.eval(u)[0], 1e-12);
        // Mean of blocks on an arbitrary point.
        const Eigen::VectorXd x = uniform_points(1, 12, rng).row(0).transpose();
        double mean = 0.0;
        for (int k = 0; k < 6; ++k) mean += b.eval(x.segment(2 * k, 2))[0] / 6.0;
        EXPECT_NEAR(r.eval(x)[0], mean, 1e-12);
    }
}

TEST(WithNoise, NonNegativeSdAndSampling) {
    const Problem noisy = make_problem("branin");
    const Problem n = with_noise(noisy, p1_problem());
    ASSERT_TRUE(n.noisy());
    Rng rng(56);
    const Eigen::MatrixXd pts = uniform_points(10000, 2, rng);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) EXPECT_GE(n.noise_sd(pts.row(i).transpose())[0], 0.0);

    const Eigen::Vector2d x(0.3, 0.6);
    const double sd = n.noise_sd(x)[0];
    EXPECT_NEAR(sd, std::abs(p1_problem().eval(x)[0]), 1e-12);
    double sum = 0.0, sum2 = 0.0;
    const int reps = 10000;
    for (int k = 0; k < reps; ++k) {
        const double y = n.observe(x, 17, static_cast<std::uint64_t>(k))[0];
        sum += y;
        sum2 += y * y;
    }
    const double mean = sum / reps;
    const double var = (sum2 - reps * mean * mean) / (reps - 1);
    EXPECT_NEAR(var / (sd * sd), 1.0, 0.05);
    EXPECT_NEAR(mean, n.eval(x)[0], 4 * sd / std::sqrt(reps));
}

TEST(WithNoise, ReproducibleDrawsAndFactor) {
    const Problem n = with_noise(branin_problem(), p1_problem(), 0.5);
    const Eigen::Vector2d x(0.1, 0.9);
    EXPECT_EQ(n.observe(x, 3, 4), n.observe(x, 3, 4));
    EXPECT_NE(n.observe(x, 3, 4), n.observe(x, 3, 5));
    EXPECT_NE(n.observe(x, 3, 4), n.observe(x, 4, 4));
    EXPECT_NEAR(n.noise_sd(x)[0], 0.5 * std::abs(p1_problem().eval(x)[0]), 1e-12);
    // Noiseless problems observe the truth.
    EXPECT_EQ(branin_problem().observe(x, 3, 4), branin_problem().eval(x));
}

TEST(WithNoise, MultiObjectiveUsesMatchingObjective) {
    const Problem n = with_noise(p1_problem(), p2_problem());
    const Eigen::Vector2d x(0.2, 0.7);
    const Eigen::VectorXd src = p2_problem().eval(x);
    EXPECT_NEAR(n.noise_sd(x)[0], std::abs(src[0]), 1e-12);
    EXPECT_NEAR(n.noise_sd(x)[1], std::abs(src[1]), 1e-12);
}

TEST(MakeProblem, IdsAndDefaults) {
    EXPECT_EQ(make_problem("hartmann6").dim, 6);
    EXPECT_EQ(make_problem("p2-rep3").dim, 6);
    EXPECT_THROW(make_problem("rosenbrock"), std::invalid_argument);
    EXPECT_THROW(make_problem("branin-rep0"), std::invalid_argument);
    EXPECT_EQ(default_noise_source("branin"), "p1");
    EXPECT_EQ(default_noise_source("p1"), "p2");
    EXPECT_EQ(default_noise_source("p2-rep3"), "p1-rep3");
    EXPECT_EQ(make_problem(default_noise_source("hartmann6")).dim, 6);
}
