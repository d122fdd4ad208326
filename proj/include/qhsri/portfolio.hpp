#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "qhsri/acquisition.hpp"
#include "qhsri/gp.hpp"

namespace qhsri {

/// Candidates mapped into the unit box of the trade-off space, with
/// hypervolume-based expected returns and return covariances.
///
/// Asset i dominates the box [a_i, R] with R = 1 after normalization; its
/// return is that box's volume and the covariance of assets i and k is the
/// volume of the jointly dominated box minus the product of the two returns.
struct AssetSet {
    /// r x m normalized coordinates (minimization).
    Eigen::MatrixXd assets;
    /// Trade-off dimensions kept after dropping constant ones.
    std::vector<Eigen::Index> active_dims;
    /// Native values mapped to 0 (ideal) and 1 (reference) for each active dim.
    Eigen::VectorXd ideal_point;
    Eigen::VectorXd ref_point;
    Eigen::VectorXd returns;
    Eigen::MatrixXd covariance;
    double riskless_return = 0.0;

    Eigen::Index size() const { return assets.rows(); }
};

class PortfolioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Normalizes trade-off objective rows: per-dim minimum -> 0, per-dim maximum
/// plus margin * range -> 1. Constant dims are dropped; throws PortfolioError
/// when every dim is constant.
AssetSet build_assets(const Eigen::MatrixXd& objectives, double margin = 0.2);
AssetSet build_assets(const std::vector<Candidate>& candidates, bool noise_present, double margin = 0.2);

/// Returns and covariances for assets already normalized to [0,1]^m with R = 1.
AssetSet assets_from_normalized(Eigen::MatrixXd normalized);

struct SharpeSolution {
    /// Optimal investment on the simplex.
    Eigen::VectorXd weights;
    double sharpe_value = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// h(z) = (r'z - r_f) / sqrt(z'Qz).
double sharpe_ratio(const AssetSet& assets, const Eigen::VectorXd& z);

/// Maximizes the Sharpe ratio over the simplex through the equivalent
/// nonnegative QP  min 1/2 w'Qw - r'w, w >= 0, solved by a primal active-set
/// method with incremental Cholesky updates; z = w / sum(w).
SharpeSolution solve_sharpe(const AssetSet& assets);

enum class AllocationMode { TopQ, Proportional };

struct BatchAllocation {
    std::vector<int> counts;
    int total = 0;
    /// Scaling from the dichotomy; absent for a pure top-q allocation.
    std::optional<double> gamma;
};

/// Turns weights into q evaluation slots. TopQ gives one slot to each of the
/// q largest weights (random ties); Proportional finds the smallest gamma with
/// sum(round(gamma * z_i)) >= q and repairs any overshoot.
BatchAllocation allocate(const Eigen::VectorXd& weights, int q, AllocationMode mode, std::uint64_t seed);

struct QhsriConfig {
    FrontSearchOptions search;
    double margin = 0.2;
    PiFilterOptions pi;
    double pnd_min = 1e-6;
    /// Noisy case: score the already evaluated designs too, so they can be
    /// replicated.
    bool include_evaluated = true;
};

struct SelectedDesign {
    Eigen::VectorXd x;
    int replicates = 1;
    /// True when x coincides with an evaluated design (replication request).
    bool existing = false;
};

struct Selection {
    std::vector<SelectedDesign> designs;
    double seconds = 0.0;
    std::size_t pool_size = 0;
    std::size_t asset_count = 0;

    int total() const;
};

/// One batch of q evaluations: trade-off front search, PI/PND filtering,
/// HSRI Sharpe weights, allocation. Without noise every design is new and
/// distinct; with noise counts may exceed one.
Selection qhsri_select(std::span<const GpModel> models, int q, bool noise_present, const QhsriConfig& config,
                       std::uint64_t seed);

}  // namespace qhsri
