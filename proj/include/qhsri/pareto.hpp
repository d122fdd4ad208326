#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace qhsri {

/// Objective values, minimization convention.
using ObjectiveVector = Eigen::VectorXd;

/// True iff a <= b componentwise and a != b. Throws on length mismatch.
bool dominates(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

/// Indices (ascending) of rows not dominated by any other row. Duplicates are
/// all kept.
std::vector<std::size_t> non_dominated_filter(const Eigen::MatrixXd& points);

/// Fast non-dominated sorting. Rows containing non-finite values are placed
/// together in a last front.
std::vector<std::vector<std::size_t>> non_dominated_sort(const Eigen::MatrixXd& points);

/// Crowding distance of each member of one front (boundary members get +inf).
std::vector<double> crowding_distance(const Eigen::MatrixXd& points, const std::vector<std::size_t>& front);

/// Mutually non-dominated designs (rows) with their objective values (rows).
struct FrontArchive {
    Eigen::MatrixXd designs;
    Eigen::MatrixXd objectives;

    Eigen::Index size() const { return designs.rows(); }
};

/// Maps a batch of designs (rows in [0,1]^d) to their objectives (rows).
using BatchObjective = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

struct Nsga2Options {
    int pop_size = 500;
    int generations = 100;
    double crossover_prob = 0.9;
    double crossover_eta = 15.0;
    double mutation_eta = 20.0;
    /// Per-variable mutation probability; 1/d when unset.
    std::optional<double> mutation_prob;
    std::uint64_t seed = 0;
};

/// NSGA-II over [0,1]^d. Returns the first front of the final population;
/// deterministic for a given seed.
FrontArchive nsga2(const BatchObjective& objective, Eigen::Index dim, const Nsga2Options& options);

/// Dominated hypervolume of `front` (rows) with respect to `ref`, for one to
/// three objectives. Points not strictly dominating `ref` are ignored.
double hypervolume(const Eigen::MatrixXd& front, const Eigen::VectorXd& ref);

}  // namespace qhsri
