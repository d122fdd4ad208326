#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace qhsri {

/// Max-norm distance below which two designs are treated as the same point.
inline constexpr double kMergeTolerance = 1e-8;

/// Unique designs in [0,1]^d with replicate bookkeeping for a single output.
/// Observations landing within kMergeTolerance of an existing design are
/// folded into its running mean and variance.
class DesignSet {
public:
    explicit DesignSet(Eigen::Index dim);

    /// Adds one observation and returns the index of the unique design it was
    /// merged into.
    std::size_t add(const Eigen::VectorXd& x, double y);

    /// Index of the unique design within merge tolerance of x, if any.
    std::optional<std::size_t> find(const Eigen::VectorXd& x) const;

    Eigen::Index dim() const { return dim_; }
    std::size_t size() const { return points_.size(); }
    std::size_t raw_count() const { return raw_count_; }

    const Eigen::VectorXd& point(std::size_t i) const { return points_[i]; }
    int rep_count(std::size_t i) const { return reps_[i]; }
    double obs_mean(std::size_t i) const { return means_[i]; }
    /// Unbiased empirical variance of the replicates; absent below two replicates.
    std::optional<double> obs_var(std::size_t i) const;
    /// Sum of squared deviations of the replicates around their mean.
    double within_ss(std::size_t i) const { return m2_[i]; }

    /// Unique designs stacked as rows.
    Eigen::MatrixXd points_matrix() const;
    Eigen::VectorXd means_vector() const;

private:
    Eigen::Index dim_;
    std::vector<Eigen::VectorXd> points_;
    std::vector<int> reps_;
    std::vector<double> means_;
    std::vector<double> m2_;
    std::size_t raw_count_ = 0;
};

enum class KernelFamily { SquaredExponential, Matern52 };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Covariance hyperparameters in native output units.
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern52;
    Eigen::VectorXd lengthscales;
    double process_variance = 1.0;
    /// Homoskedastic noise variance; ignored when the noise is a known function.
    double nugget = 0.0;
};

/// Unit correlation k(x, x') / process_variance.
double correlation(KernelFamily family, const Eigen::VectorXd& lengthscales,
                   const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b);

/// Observation noise: either a homoskedastic nugget estimated by maximum
/// likelihood, or a known variance function r(x) >= 0 on [0,1]^d.
class NoiseMode {
public:
    using Function = std::function<double(const Eigen::VectorXd&)>;

    static NoiseMode estimate_nugget();
    static NoiseMode known(Function variance);
    static NoiseMode noiseless();

    bool estimates_nugget() const { return !fn_; }
    const Function& function() const { return fn_; }

private:
    Function fn_;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Prediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd latent_variance;
    Eigen::VectorXd observation_variance;
};

struct JointPrediction {
    Eigen::VectorXd mean;
    Eigen::MatrixXd latent_covariance;
};

/// Starting points visited by the likelihood optimizer, kept for inspection.
struct FitTrace {
    std::vector<KernelSpec> starts;
    std::vector<double> start_log_likelihoods;
};

struct FitOptions {
    /// Space-filling starting points for the local search.
    int restarts = 5;
    /// Extra start taken from a previous fit (driver warm start).
    std::optional<KernelSpec> warm_start;
    std::uint64_t seed = 0;
    double tolerance = 1e-6;
    int max_iterations = 200;
    double min_lengthscale = 1e-2;
    double max_lengthscale = 10.0;
    /// Lower bound on the nugget, as a fraction of the output variance.
    double nugget_floor = 1e-8;
};

class GpModel;

/// Maximum-likelihood fit over lengthscales, process variance and (when
/// estimated) the nugget. Inputs are assumed already in [0,1]^d; outputs are
/// standardized internally and the result is reported in native units.
GpModel fit(const DesignSet& design, KernelFamily family, const NoiseMode& noise,
            const FitOptions& options = {});

/// Gaussian process conditioned on a DesignSet. Immutable; prediction is safe
/// from any number of threads.
class GpModel {
public:
    /// Conditions on the design with fixed hyperparameters. Throws FitError when
    /// the covariance stays singular after jitter escalation.
    static GpModel condition(DesignSet design, KernelSpec kernel, NoiseMode noise);

    Prediction predict(const Eigen::MatrixXd& points) const;
    /// Mean and latent covariance of a set of points; used by the Monte-Carlo
    /// multi-point EI baseline.
    JointPrediction predict_joint(const Eigen::MatrixXd& points) const;

    /// Noise variance r(x) for a new observation at x.
    double noise_variance(const Eigen::VectorXd& x) const;

    /// Gaussian log-likelihood of every raw observation, native units.
    double log_likelihood() const { return log_likelihood_; }

    const DesignSet& design() const { return design_; }
    const KernelSpec& kernel() const { return kernel_; }
    const NoiseMode& noise() const { return noise_; }
    double mean_offset() const { return offset_; }
    double jitter() const { return jitter_; }
    const Eigen::MatrixXd& chol_factor() const { return chol_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    /// Per-unique-design noise r(x_i) / rep_count entering the covariance diagonal.
    const Eigen::VectorXd& diagonal_noise() const { return diag_noise_; }
    const FitTrace& fit_trace() const { return trace_; }

    double kernel_value(const Eigen::Ref<const Eigen::VectorXd>& a,
                        const Eigen::Ref<const Eigen::VectorXd>& b) const;

private:
    friend GpModel fit(const DesignSet&, KernelFamily, const NoiseMode&, const FitOptions&);

    GpModel(DesignSet design, KernelSpec kernel, NoiseMode noise)
        : design_(std::move(design)), kernel_(std::move(kernel)), noise_(std::move(noise)) {}

    Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& points) const;

    DesignSet design_;
    KernelSpec kernel_;
    NoiseMode noise_;
    Eigen::MatrixXd train_;
    Eigen::VectorXd diag_noise_;
    double offset_ = 0.0;
    double jitter_ = 0.0;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    double log_likelihood_ = 0.0;
    FitTrace trace_;
};

/// Decrease in latent variance at x from one new observation at x:
/// v^2 / (v + r(x)).
double variance_reduction(const GpModel& model, const Eigen::VectorXd& x);

}  // namespace qhsri
