#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qhsri/gp.hpp"

namespace qhsri {

/// A design scored for the exploration/exploitation trade-off.
struct Candidate {
    Eigen::VectorXd x;
    /// Predicted mean per objective.
    Eigen::VectorXd means;
    /// Latent predictive standard deviation per objective.
    Eigen::VectorXd stds;
    /// Mean over objectives of std / sqrt(process variance).
    double avg_std = 0.0;
    /// One-step latent variance reduction per objective (noisy case only).
    Eigen::VectorXd var_reduction;
    /// PI (one objective) or PND (several); 1 until a filter sets it.
    double pi_or_pnd = 1.0;
};

// Closed forms for Y ~ N(mean, sd^2) against threshold T (minimization).
double expected_improvement(double mean, double sd, double threshold);
/// E[max(0, T - Y)^power]; power 0 is PI, power 1 is EI. power <= 4.
double generalized_ei(double mean, double sd, double threshold, int power);
double probability_of_improvement(double mean, double sd, double threshold);

double expected_improvement(const GpModel& model, const Eigen::VectorXd& x, double threshold);
double generalized_ei(const GpModel& model, const Eigen::VectorXd& x, double threshold, int power);

/// Improvement threshold: best observed mean (deterministic) or best predicted
/// mean over evaluated designs (noisy).
double improvement_threshold(const GpModel& model, bool noise_present);

/// Scores designs (rows) under every model. Parallel over rows; the result
/// does not depend on `threads`.
std::vector<Candidate> score_candidates(std::span<const GpModel> models, const Eigen::MatrixXd& designs,
                                        bool noise_present, int threads = 1);

/// Trade-off objectives, all minimized: means, -avg_std, then -var_reduction
/// per objective when noise is present. One row per candidate.
Eigen::MatrixXd tradeoff_objectives(const std::vector<Candidate>& candidates, bool noise_present);

struct PiFilterOptions {
    double pi_min = 1e-6;
    std::size_t keep_max = 2000;
};

/// Mono-objective filter: drops candidates with PI below pi_min and keeps at
/// most keep_max of the rest, highest PI first. Falls back to the single best
/// candidate when nothing passes.
std::vector<Candidate> probability_improvement_threshold_filter(std::vector<Candidate> candidates,
                                                                double threshold,
                                                                const PiFilterOptions& options = {});

/// Probability that no member of `front` (rows) dominates an independent
/// Gaussian prediction with the given means and standard deviations.
double probability_non_domination(const Eigen::VectorXd& means, const Eigen::VectorXd& stds,
                                  const Eigen::MatrixXd& front);
double probability_non_domination(std::span<const GpModel> models, const Eigen::VectorXd& x,
                                  const Eigen::MatrixXd& front);

/// Non-dominated predicted means at the evaluated designs (rows).
Eigen::MatrixXd predicted_front(std::span<const GpModel> models);

struct FrontSearchOptions {
    /// Uniform designs; 0 means 100 * d.
    int n_uniform = 0;
    int nsga_pop = 500;
    int nsga_gens = 100;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// Every scored design from the uniform sample and the NSGA-II archive, in
/// that order; no dominance filtering.
std::vector<Candidate> candidate_pool(std::span<const GpModel> models, bool noise_present,
                                      const FrontSearchOptions& options);

/// Non-dominated subset of candidate_pool in the trade-off objectives.
std::vector<Candidate> tradeoff_front_search(std::span<const GpModel> models, bool noise_present,
                                             const FrontSearchOptions& options);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo multi-point EI of a batch (rows) with antithetic pairs.
McEstimate mc_qei(const GpModel& model, const Eigen::MatrixXd& batch, double threshold, int n_samples,
                  std::uint64_t seed);

struct McQeiBatchOptions {
    int n_samples = 10000;
    /// Uniform designs screened per slot; 0 means 100 * d.
    int n_uniform = 0;
    /// Nelder-Mead evaluations refining each slot; 0 means 50 * d.
    int local_evaluations = 0;
    /// Particle swarm stage per slot, started from the best screened design;
    /// swarm_size 0 skips it.
    int swarm_size = 200;
    int swarm_iterations = 25;
    std::uint64_t seed = 0;
};

/// Greedy batch construction for the Monte-Carlo qEI baseline: each slot
/// maximizes qEI of the already chosen designs plus one new design by uniform
/// screening, a particle swarm and a Nelder-Mead refinement.
Eigen::MatrixXd mc_qei_batch(const GpModel& model, int q, double threshold, const McQeiBatchOptions& options);

}  // namespace qhsri
