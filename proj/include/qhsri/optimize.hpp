#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

namespace qhsri {

/// Objective with optional gradient output; the gradient pointer is null when
/// only the value is needed.
using DifferentiableFunction = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct BfgsOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-6;
    /// Relative decrease of the objective below which the search stops.
    double value_tolerance = 1e-6;
};

struct LocalResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
};

/// Dense BFGS with Armijo backtracking. Non-finite trial values are treated as
/// infeasible and trigger backtracking.
LocalResult minimize_bfgs(const DifferentiableFunction& f, Eigen::VectorXd x0,
                          const BfgsOptions& options = {});

struct NelderMeadOptions {
    int max_evaluations = 500;
    double value_tolerance = 1e-8;
    double initial_step = 0.1;
};

/// Nelder-Mead restricted to the box [lower, upper] by clamping trial points.
LocalResult minimize_nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                 Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper,
                                 const NelderMeadOptions& options = {});

struct SwarmOptions {
    int swarm_size = 200;
    int iterations = 25;
    std::uint64_t seed = 0;
};

/// Global-best particle swarm inside [lower, upper] with the SPSO 2007
/// coefficients. Particles start uniformly in the box; `x0`, when non-empty,
/// replaces the first one.
LocalResult minimize_particle_swarm(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                    const SwarmOptions& options = {}, const Eigen::VectorXd& x0 = {});

}  // namespace qhsri
