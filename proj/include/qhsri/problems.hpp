#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

namespace qhsri {

// Test functions in their native coordinates.
double branin(const Eigen::VectorXd& x);     // [-5,10] x [0,15]
double hartmann3(const Eigen::VectorXd& x);  // [0,1]^3
double hartmann6(const Eigen::VectorXd& x);  // [0,1]^6
Eigen::VectorXd p1(const Eigen::VectorXd& x);  // [0,1]^2 (Parr)
Eigen::VectorXd p2(const Eigen::VectorXd& x);  // [-pi,pi]^2 (Poloni)

inline constexpr double kBraninMinimum = 0.397887357729739;
inline constexpr double kHartmann3Minimum = -3.86278214782076;
inline constexpr double kHartmann6Minimum = -3.32236801141551;

/// A benchmark on the unit hypercube. `eval` maps [0,1]^d to the noiseless
/// objective vector; `noise_sd`, when set, gives the per-objective standard
/// deviation of the additive Gaussian noise.
struct Problem {
    using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

    std::string name;
    Eigen::Index dim = 0;
    Eigen::Index objectives = 1;
    VectorFn eval;
    VectorFn noise_sd;
    /// Native box of the inputs; eval already applies the affine map.
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    /// Known global minimum (single-objective problems).
    std::optional<double> optimum;
    /// A global minimizer in unit coordinates, when known.
    std::optional<Eigen::VectorXd> minimizer;

    bool noisy() const { return static_cast<bool>(noise_sd); }
    Eigen::VectorXd to_native(const Eigen::VectorXd& unit) const;

    /// Noisy observation number `replicate` at x. The draw depends only on
    /// (seed, x, replicate), never on call order.
    Eigen::VectorXd observe(const Eigen::VectorXd& x, std::uint64_t seed, std::uint64_t replicate) const;
};

Problem branin_problem();
Problem hartmann3_problem();
Problem hartmann6_problem();
Problem p1_problem();
Problem p2_problem();

/// Dimension k*d; the value is the mean of the base applied to each block of
/// d consecutive coordinates.
Problem repeat_problem(const Problem& base, int k);

/// Adds Gaussian noise with sd = factor * |first objective of sd_source|. When
/// both problems have the same number of objectives (> 1), objective i uses
/// |objective i of sd_source| instead.
Problem with_noise(const Problem& base, const Problem& sd_source, double factor = 1.0);

/// Problems by id: branin, hartmann3, hartmann6, p1, p2, and "<id>-rep<k>".
Problem make_problem(const std::string& id);

/// Noise source used by the benchmarks when none is configured:
/// branin -> p1, hartmann6 -> hartmann3-rep2, p1 <-> p2 (repeated alike).
std::string default_noise_source(const std::string& id);

}  // namespace qhsri
