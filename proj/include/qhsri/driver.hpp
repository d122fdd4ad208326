#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qhsri/gp.hpp"
#include "qhsri/portfolio.hpp"
#include "qhsri/problems.hpp"

namespace qhsri {

enum class Strategy { Qhsri, Random, McQei };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& name);

struct NoiseConfig {
    bool enabled = false;
    /// Problem id whose first objective gives the noise sd; empty means the
    /// benchmark default.
    std::string source;
    double factor = 1.0;
    /// Give the GP the true noise variance (true) or estimate a homoskedastic
    /// nugget (false).
    bool known = true;
};

struct ExperimentConfig {
    std::string problem = "branin";
    NoiseConfig noise;
    Strategy strategy = Strategy::Qhsri;
    int n_init = 10;
    int q = 10;
    int n_max = 60;
    int macro_runs = 1;
    std::uint64_t seed = 1;
    /// Evaluation threads; results never depend on it.
    int threads = 1;

    KernelFamily kernel = KernelFamily::Matern52;
    int fit_restarts = 5;
    /// Starts used when refitting with a warm start (the warm start counts as one).
    int warm_restarts = 2;

    QhsriConfig qhsri;
    McQeiBatchOptions mc_qei;

    int reference_pop = 500;
    int reference_generations = 500;
};

/// Canonical text of every field that affects results (not `threads`), and
/// its 64-bit hash in hex.
std::string canonical_string(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

/// Throws std::invalid_argument naming the offending field.
void validate(const ExperimentConfig& config, const Problem& problem);

/// The problem described by config.problem plus its noise block.
Problem build_problem(const ExperimentConfig& config);

/// One selected design of a batch and the values observed there.
struct BatchEntry {
    Eigen::VectorXd x;
    int replicates = 1;
    bool existing = false;
    /// One row per replicate.
    Eigen::MatrixXd y;
    /// Noiseless objective values at x.
    Eigen::VectorXd truth;
};

struct IterationRecord {
    int iteration = 0;
    /// Evaluations after this iteration.
    int n = 0;
    double selection_seconds = 0.0;
    double fit_seconds = 0.0;
    /// Optimality gap (one objective) or hypervolume difference (several),
    /// from the noiseless values of the evaluated designs.
    double metric = 0.0;
    /// Same metric at the GP-estimated optimum or Pareto set (noisy runs).
    std::optional<double> estimated_metric;
    std::vector<BatchEntry> batch;
};

struct ExperimentTrace {
    std::string problem;
    Strategy strategy = Strategy::Qhsri;
    bool noisy = false;
    Eigen::Index objectives = 1;
    Eigen::Index dim = 0;
    int q = 0;
    std::uint64_t seed = 0;
    int macro_run = 0;
    std::string config_hash;
    std::vector<IterationRecord> records;
    bool valid = true;
    std::string error;

    int evaluations() const { return records.empty() ? 0 : records.back().n; }
    std::string metric_name() const;
    std::string estimated_metric_name() const;
};

/// Maximin Latin hypercube in [0,1]^d, one row per design.
Eigen::MatrixXd initial_design(Eigen::Index d, int n_init, std::uint64_t seed);

/// Reference front of a multi-objective problem and the hypervolume reference
/// point (nadir plus 20% of the range). Computed once per problem id.
struct ReferenceFront {
    Eigen::MatrixXd front;
    Eigen::VectorXd ref_point;
    double hypervolume = 0.0;
};
const ReferenceFront& reference_front(const Problem& problem, int pop_size = 500, int generations = 500);

/// Per-iteration running best noiseless value of the evaluated designs minus
/// the reference; non-increasing.
std::vector<double> optimality_gap(const ExperimentTrace& trace, double reference);

/// HV(reference front) - HV(non-dominated rows of `values`).
double hypervolume_difference(const Eigen::MatrixXd& values, const ReferenceFront& reference);

using ProgressCallback = std::function<void(const ExperimentTrace&, const IterationRecord&)>;

/// One macro-run. Never throws on fit failures: the trace is returned with
/// valid = false and the error message.
ExperimentTrace run_experiment(const ExperimentConfig& config, int macro_run = 0,
                               const ProgressCallback& progress = {});
ExperimentTrace run_experiment(const ExperimentConfig& config, const Problem& problem, int macro_run = 0,
                               const ProgressCallback& progress = {});

/// Per-iteration quantiles of one metric across traces.
struct SummaryRow {
    std::string group;
    std::string metric;
    int iteration = 0;
    int n = 0;
    double median = 0.0;
    double q05 = 0.0;
    double q95 = 0.0;
    int count = 0;
};

struct TimingRow {
    std::string group;
    double mean_selection_seconds = 0.0;
    int iterations = 0;
    int runs = 0;
};

struct Summary {
    std::vector<SummaryRow> rows;
    std::vector<TimingRow> timing;
};

/// Type-7 sample quantile.
double quantile(std::vector<double> values, double prob);

/// Groups traces by strategy.
Summary aggregate(const std::vector<ExperimentTrace>& traces);

}  // namespace qhsri
