#include "qhsri/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qhsri/design.hpp"
#include "qhsri/optimize.hpp"
#include "qhsri/random.hpp"

namespace qhsri {

// ---------------------------------------------------------------- DesignSet

DesignSet::DesignSet(Eigen::Index dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("DesignSet: dimension must be positive");
}

std::optional<std::size_t> DesignSet::find(const Eigen::VectorXd& x) const {
    for (std::size_t i = 0; i < points_.size(); ++i)
        if ((points_[i] - x).lpNorm<Eigen::Infinity>() < kMergeTolerance) return i;
    return std::nullopt;
}

std::size_t DesignSet::add(const Eigen::VectorXd& x, double y) {
    if (x.size() != dim_) throw std::invalid_argument("DesignSet: dimension mismatch");
    if (!std::isfinite(y) || !x.allFinite())
        throw std::invalid_argument("DesignSet: non-finite observation");
    ++raw_count_;
    if (auto hit = find(x)) {
        const std::size_t i = *hit;
        // Welford update
        ++reps_[i];
        const double delta = y - means_[i];
        means_[i] += delta / reps_[i];
        m2_[i] += delta * (y - means_[i]);
        return i;
    }
    points_.push_back(x);
    reps_.push_back(1);
    means_.push_back(y);
    m2_.push_back(0.0);
    return points_.size() - 1;
}

std::optional<double> DesignSet::obs_var(std::size_t i) const {
    if (reps_[i] < 2) return std::nullopt;
    return m2_[i] / (reps_[i] - 1);
}

Eigen::MatrixXd DesignSet::points_matrix() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(points_.size()), dim_);
    for (std::size_t i = 0; i < points_.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = points_[i].transpose();
    return out;
}

Eigen::VectorXd DesignSet::means_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(means_.data(), static_cast<Eigen::Index>(means_.size()));
}

// ------------------------------------------------------------------ kernels

std::string to_string(KernelFamily family) {
    return family == KernelFamily::Matern52 ? "matern52" : "sqexp";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "matern52") return KernelFamily::Matern52;
    if (name == "sqexp" || name == "gauss") return KernelFamily::SquaredExponential;
    throw std::invalid_argument("unknown kernel family '" + name + "'");
}

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;

double corr_from_r2(KernelFamily family, double r2) {
    if (family == KernelFamily::SquaredExponential) return std::exp(-0.5 * r2);
    const double r = std::sqrt(r2);
    return (1.0 + kSqrt5 * r + 5.0 / 3.0 * r2) * std::exp(-kSqrt5 * r);
}

// d corr / d log(lengthscale_k) = factor(r2) * (dx_k / lengthscale_k)^2
double corr_grad_factor(KernelFamily family, double r2) {
    if (family == KernelFamily::SquaredExponential) return std::exp(-0.5 * r2);
    const double r = std::sqrt(r2);
    return 5.0 / 3.0 * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
}

// Squared scaled distances between rows of a and rows of b.
Eigen::MatrixXd scaled_sqdist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const Eigen::VectorXd& lengthscales) {
    const Eigen::RowVectorXd inv = lengthscales.cwiseInverse().transpose();
    const Eigen::MatrixXd as = a.array().rowwise() * inv.array();
    const Eigen::MatrixXd bs = b.array().rowwise() * inv.array();
    Eigen::MatrixXd d2 = -2.0 * as * bs.transpose();
    d2.colwise() += as.rowwise().squaredNorm();
    d2.rowwise() += bs.rowwise().squaredNorm().transpose();
    return d2.cwiseMax(0.0);
}

Eigen::MatrixXd correlation_matrix(KernelFamily family, const Eigen::MatrixXd& a,
                                   const Eigen::MatrixXd& b, const Eigen::VectorXd& lengthscales) {
    Eigen::MatrixXd c = scaled_sqdist(a, b, lengthscales);
    c = c.unaryExpr([family](double r2) { return corr_from_r2(family, r2); });
    return c;
}

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-6;

// Cholesky with escalating diagonal jitter (relative to `scale`). Returns the
// jitter used, or nullopt when every level fails.
std::optional<double> factorize(Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::MatrixXd& k, double scale) {
    double added = 0.0;
    for (double rel = kJitterStart; rel <= kJitterMax * 1.0000001; rel *= 10.0) {
        const double j = rel * scale;
        k.diagonal().array() += j - added;
        added = j;
        llt.compute(k);
        if (llt.info() == Eigen::Success) {
            const auto diag = llt.matrixLLT().diagonal();
            if (diag.allFinite() && (diag.array() > 0.0).all()) return j;
        }
    }
    return std::nullopt;
}

std::string closest_pair_message(const DesignSet& design) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < design.size(); ++i)
        for (std::size_t j = i + 1; j < design.size(); ++j) {
            const double d = (design.point(i) - design.point(j)).lpNorm<Eigen::Infinity>();
            if (d < best) {
                best = d;
                bi = i;
                bj = j;
            }
        }
    std::ostringstream os;
    os << "covariance matrix singular after jitter escalation";
    if (design.size() > 1)
        os << "; closest designs are #" << bi << " and #" << bj << " (max-norm distance " << best << ")";
    return os.str();
}

}  // namespace

double correlation(KernelFamily family, const Eigen::VectorXd& lengthscales,
                   const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b) {
    const double r2 = ((a - b).array() / lengthscales.array()).square().sum();
    return corr_from_r2(family, r2);
}

// --------------------------------------------------------------- NoiseMode

NoiseMode NoiseMode::estimate_nugget() { return NoiseMode{}; }

NoiseMode NoiseMode::known(Function variance) {
    if (!variance) throw std::invalid_argument("NoiseMode::known: empty function");
    NoiseMode m;
    m.fn_ = std::move(variance);
    return m;
}

NoiseMode NoiseMode::noiseless() {
    return known([](const Eigen::VectorXd&) { return 0.0; });
}

// ----------------------------------------------------------------- GpModel

double GpModel::kernel_value(const Eigen::Ref<const Eigen::VectorXd>& a,
                             const Eigen::Ref<const Eigen::VectorXd>& b) const {
    return kernel_.process_variance * correlation(kernel_.family, kernel_.lengthscales, a, b);
}

double GpModel::noise_variance(const Eigen::VectorXd& x) const {
    return noise_.estimates_nugget() ? kernel_.nugget : noise_.function()(x);
}

GpModel GpModel::condition(DesignSet design, KernelSpec kernel, NoiseMode noise) {
    const Eigen::Index d = design.dim();
    const auto n = static_cast<Eigen::Index>(design.size());
    if (n < 1) throw FitError("cannot condition on an empty design");
    if (kernel.lengthscales.size() != d || !(kernel.lengthscales.array() > 0.0).all())
        throw std::invalid_argument("KernelSpec: lengthscales must be positive, one per dimension");
    if (!(kernel.process_variance > 0.0)) throw std::invalid_argument("KernelSpec: process_variance must be > 0");
    if (!(kernel.nugget >= 0.0)) throw std::invalid_argument("KernelSpec: nugget must be >= 0");

    GpModel m(std::move(design), std::move(kernel), std::move(noise));
    const DesignSet& ds = m.design_;
    m.train_ = ds.points_matrix();
    const Eigen::VectorXd ybar = ds.means_vector();
    m.offset_ = ybar.mean();

    std::vector<double> point_noise(static_cast<std::size_t>(n));
    m.diag_noise_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double r = m.noise_.estimates_nugget() ? m.kernel_.nugget : m.noise_.function()(ds.point(ui));
        if (!(r >= 0.0) || !std::isfinite(r)) throw FitError("noise variance must be finite and >= 0");
        point_noise[ui] = r;
        m.diag_noise_[i] = r / ds.rep_count(ui);
    }

    const double s2 = m.kernel_.process_variance;
    Eigen::MatrixXd k = s2 * correlation_matrix(m.kernel_.family, m.train_, m.train_, m.kernel_.lengthscales);
    k.diagonal().array() = s2;
    k.diagonal() += m.diag_noise_;

    Eigen::LLT<Eigen::MatrixXd> llt;
    const auto jitter = factorize(llt, k, s2);
    if (!jitter) throw FitError(closest_pair_message(ds));
    m.jitter_ = *jitter;
    m.chol_ = llt.matrixL();
    const Eigen::VectorXd resid = ybar.array() - m.offset_;
    m.alpha_ = llt.solve(resid);

    double ll = -0.5 * resid.dot(m.alpha_) - m.chol_.diagonal().array().log().sum() -
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int a = ds.rep_count(i);
        if (a < 2 || point_noise[i] <= 0.0) continue;
        ll += -0.5 * (a - 1) * std::log(2.0 * std::numbers::pi * point_noise[i]) -
              ds.within_ss(i) / (2.0 * point_noise[i]) - 0.5 * std::log(static_cast<double>(a));
    }
    m.log_likelihood_ = ll;

    // Iterative refinement toward the unjittered system so the mean still
    // interpolates noiseless data when the factor needed jitter.
    k.diagonal().array() -= m.jitter_;
    double best = (resid - k * m.alpha_).lpNorm<Eigen::Infinity>();
    for (int it = 0; it < 3 && best > 0.0; ++it) {
        const Eigen::VectorXd next = m.alpha_ + llt.solve(resid - k * m.alpha_);
        const double r = (resid - k * next).lpNorm<Eigen::Infinity>();
        if (!(r < best)) break;
        best = r;
        m.alpha_ = next;
    }
    return m;
}

Eigen::MatrixXd GpModel::cross_covariance(const Eigen::MatrixXd& points) const {
    if (points.cols() != design_.dim()) throw std::invalid_argument("predict: dimension mismatch");
    return kernel_.process_variance *
           correlation_matrix(kernel_.family, train_, points, kernel_.lengthscales);
}

Prediction GpModel::predict(const Eigen::MatrixXd& points) const {
    const Eigen::MatrixXd kx = cross_covariance(points);
    Prediction p;
    p.mean = (kx.transpose() * alpha_).array() + offset_;
    const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(kx);
    const double s2 = kernel_.process_variance;
    p.latent_variance = (s2 - v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).cwiseMin(s2);
    p.observation_variance.resize(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        p.observation_variance[i] = p.latent_variance[i] + noise_variance(points.row(i).transpose());
    return p;
}

JointPrediction GpModel::predict_joint(const Eigen::MatrixXd& points) const {
    const Eigen::MatrixXd kx = cross_covariance(points);
    JointPrediction p;
    p.mean = (kx.transpose() * alpha_).array() + offset_;
    const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(kx);
    p.latent_covariance = kernel_.process_variance *
                              correlation_matrix(kernel_.family, points, points, kernel_.lengthscales) -
                          v.transpose() * v;
    p.latent_covariance = 0.5 * (p.latent_covariance + p.latent_covariance.transpose()).eval();
    return p;
}

double variance_reduction(const GpModel& model, const Eigen::VectorXd& x) {
    const Eigen::MatrixXd pt = x.transpose();
    const double v = model.predict(pt).latent_variance[0];
    const double r = model.noise_variance(x);
    if (!(v > 0.0) || !std::isfinite(r)) return 0.0;
    return v * v / (v + r);
}

// ---------------------------------------------------------------------- fit

namespace {

enum class FitMode {
    Profiled,      // noise identically zero: process variance has a closed form
    KnownNoise,    // known r(x) > 0 somewhere: optimize process variance
    EstimateNugget // optimize process variance and a homoskedastic nugget
};

// Log-likelihood of the standardized data as a function of log-hyperparameters.
class Likelihood {
public:
    Likelihood(const DesignSet& design, KernelFamily family, FitMode mode, Eigen::VectorXd y,
               Eigen::VectorXd known_noise, double within_ss)
        : family_(family), mode_(mode), x_(design.points_matrix()), y_(std::move(y)),
          known_noise_(std::move(known_noise)), within_ss_(within_ss) {
        reps_.resize(x_.rows());
        within_count_ = 0.0;
        for (Eigen::Index i = 0; i < x_.rows(); ++i) {
            reps_[i] = design.rep_count(static_cast<std::size_t>(i));
            within_count_ += reps_[i] - 1.0;
        }
    }

    Eigen::Index dim() const { return x_.cols(); }

    // phi = [log lengthscales, log process variance?, log nugget?]
    double operator()(const Eigen::VectorXd& phi, Eigen::VectorXd* grad) const {
        const Eigen::Index d = dim();
        const auto n = static_cast<double>(x_.rows());
        const Eigen::VectorXd theta = phi.head(d).array().exp();
        const double s2 = mode_ == FitMode::Profiled ? 1.0 : std::exp(phi[d]);
        const double g = mode_ == FitMode::EstimateNugget ? std::exp(phi[d + 1]) : 0.0;

        const Eigen::MatrixXd r2 = scaled_sqdist(x_, x_, theta);
        Eigen::MatrixXd c = r2.unaryExpr([this](double v) { return corr_from_r2(family_, v); });
        c.diagonal().setOnes();
        Eigen::MatrixXd k = s2 * c;
        if (mode_ == FitMode::KnownNoise) k.diagonal() += known_noise_;
        if (mode_ == FitMode::EstimateNugget) k.diagonal() += g * reps_.cwiseInverse();

        Eigen::LLT<Eigen::MatrixXd> llt;
        if (!factorize(llt, k, s2)) return -std::numeric_limits<double>::infinity();
        const Eigen::VectorXd alpha = llt.solve(y_);
        const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        const double quad = y_.dot(alpha);
        constexpr double log2pi = 1.8378770664093454836;

        double ll;
        double prof = 1.0;
        if (mode_ == FitMode::Profiled) {
            prof = std::max(quad / n, 1e-300);
            ll = -0.5 * n * (log2pi + std::log(prof)) - 0.5 * n - 0.5 * logdet;
        } else {
            ll = -0.5 * quad - 0.5 * logdet - 0.5 * n * log2pi;
            if (mode_ == FitMode::EstimateNugget && within_count_ > 0.0)
                ll += -0.5 * within_count_ * (log2pi + std::log(g)) - within_ss_ / (2.0 * g);
        }
        if (!std::isfinite(ll)) return -std::numeric_limits<double>::infinity();
        if (!grad) return ll;

        const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(k.rows(), k.cols()));
        Eigen::MatrixXd w = (alpha * alpha.transpose()) / prof - kinv;
        grad->resize(phi.size());

        const Eigen::MatrixXd m =
            w.cwiseProduct(r2.unaryExpr([this](double v) { return corr_grad_factor(family_, v); }));
        const Eigen::MatrixXd mx = m * x_;
        const Eigen::VectorXd rs = m.rowwise().sum();
        for (Eigen::Index j = 0; j < d; ++j) {
            const auto col = x_.col(j).array();
            const double t = 2.0 * (col.square() * rs.array()).sum() - 2.0 * (col * mx.col(j).array()).sum();
            (*grad)[j] = 0.5 * s2 * t / (theta[j] * theta[j]);
        }
        if (mode_ != FitMode::Profiled) (*grad)[d] = 0.5 * s2 * w.cwiseProduct(c).sum();
        if (mode_ == FitMode::EstimateNugget) {
            double gg = 0.5 * g * (w.diagonal().array() / reps_.array()).sum();
            if (within_count_ > 0.0) gg += -0.5 * within_count_ + within_ss_ / (2.0 * g);
            (*grad)[d + 1] = gg;
        }
        return ll;
    }

    // Closed-form process variance at the given lengthscales (profiled mode).
    double profiled_variance(const Eigen::VectorXd& phi) const {
        const Eigen::VectorXd theta = phi.head(dim()).array().exp();
        Eigen::MatrixXd c = scaled_sqdist(x_, x_, theta).unaryExpr(
            [this](double v) { return corr_from_r2(family_, v); });
        c.diagonal().setOnes();
        Eigen::LLT<Eigen::MatrixXd> llt;
        if (!factorize(llt, c, 1.0)) return std::numeric_limits<double>::quiet_NaN();
        return std::max(y_.dot(llt.solve(y_)) / static_cast<double>(x_.rows()), 1e-300);
    }

private:
    KernelFamily family_;
    FitMode mode_;
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    Eigen::VectorXd known_noise_;
    Eigen::VectorXd reps_;
    double within_ss_;
    double within_count_ = 0.0;
};

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

}  // namespace

GpModel fit(const DesignSet& design, KernelFamily family, const NoiseMode& noise,
            const FitOptions& options) {
    const Eigen::Index d = design.dim();
    const auto n = static_cast<Eigen::Index>(design.size());
    if (n < d + 2) {
        std::ostringstream os;
        os << "GP fit needs at least d+2 = " << d + 2 << " unique designs, got " << n;
        throw FitError(os.str());
    }

    const Eigen::VectorXd ybar = design.means_vector();
    const double offset = ybar.mean();
    double sd = std::sqrt((ybar.array() - offset).square().mean());
    if (!(sd > 1e-12 * std::max(1.0, std::abs(offset)))) sd = 1.0;
    const double var = sd * sd;
    Eigen::VectorXd ys = (ybar.array() - offset) / sd;

    FitMode mode = FitMode::EstimateNugget;
    Eigen::VectorXd known(n);
    if (!noise.estimates_nugget()) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const double r = noise.function()(design.point(ui));
            if (!(r >= 0.0) || !std::isfinite(r)) throw FitError("noise variance must be finite and >= 0");
            known[i] = r / design.rep_count(ui) / var;
        }
        mode = (known.array() > 0.0).any() ? FitMode::KnownNoise : FitMode::Profiled;
    }
    double within = 0.0;
    for (std::size_t i = 0; i < design.size(); ++i) within += design.within_ss(i) / var;

    const Likelihood lik(design, family, mode, ys, known, within);

    const Eigen::Index dims = d + (mode == FitMode::Profiled ? 0 : 1) + (mode == FitMode::EstimateNugget ? 1 : 0);
    Eigen::VectorXd lo(dims), hi(dims);
    lo.head(d).setConstant(std::log(options.min_lengthscale));
    hi.head(d).setConstant(std::log(options.max_lengthscale));
    if (mode != FitMode::Profiled) {
        lo[d] = std::log(1e-4);
        hi[d] = std::log(1e4);
    }
    if (mode == FitMode::EstimateNugget) {
        lo[d + 1] = std::log(options.nugget_floor);
        hi[d + 1] = std::log(1e2);
    }

    auto to_spec = [&](const Eigen::VectorXd& phi) {
        KernelSpec spec;
        spec.family = family;
        spec.lengthscales = phi.head(d).array().exp();
        spec.process_variance = var * (mode == FitMode::Profiled ? lik.profiled_variance(phi) : std::exp(phi[d]));
        spec.nugget = mode == FitMode::EstimateNugget ? var * std::exp(phi[d + 1]) : 0.0;
        return spec;
    };
    auto phi_from_u = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd phi(dims);
        for (Eigen::Index i = 0; i < dims; ++i) phi[i] = lo[i] + (hi[i] - lo[i]) * logistic(u[i]);
        return phi;
    };
    auto u_from_phi = [&](const Eigen::VectorXd& phi) {
        Eigen::VectorXd u(dims);
        for (Eigen::Index i = 0; i < dims; ++i) {
            const double t = std::clamp((phi[i] - lo[i]) / (hi[i] - lo[i]), 1e-6, 1.0 - 1e-6);
            u[i] = std::log(t / (1.0 - t));
        }
        return u;
    };

    std::vector<Eigen::VectorXd> starts;
    if (options.warm_start && options.warm_start->lengthscales.size() == d) {
        Eigen::VectorXd phi(dims);
        phi.head(d) = options.warm_start->lengthscales.array().log();
        if (mode != FitMode::Profiled) phi[d] = std::log(std::max(options.warm_start->process_variance / var, 1e-300));
        if (mode == FitMode::EstimateNugget) phi[d + 1] = std::log(std::max(options.warm_start->nugget / var, 1e-300));
        starts.push_back(phi.cwiseMax(lo).cwiseMin(hi));
    }
    if (options.restarts > 0) {
        auto rng = make_stream(options.seed, {0x6770u, static_cast<std::uint64_t>(n)});
        // Starts cover a sub-box where the likelihood is informative: with
        // lengthscales far below the typical inter-point distance sqrt(d/6)
        // the correlation matrix is the identity and the likelihood is flat.
        Eigen::VectorXd slo = lo, shi = hi;
        const double typical = std::sqrt(static_cast<double>(d) / 6.0);
        slo.head(d).setConstant(std::log(std::max(options.min_lengthscale, 0.2 * typical)));
        shi.head(d).setConstant(std::log(std::min(options.max_lengthscale, 4.0 * typical)));
        if (mode != FitMode::Profiled) {
            slo[d] = std::log(0.2);
            shi[d] = std::log(5.0);
        }
        if (mode == FitMode::EstimateNugget) {
            slo[d + 1] = std::max(lo[d + 1], std::log(1e-4));
            shi[d + 1] = std::log(0.5);
        }
        slo = slo.cwiseMax(lo).cwiseMin(hi);
        shi = shi.cwiseMax(slo).cwiseMin(hi);
        const Eigen::MatrixXd lhs = latin_hypercube(options.restarts, dims, rng);
        for (Eigen::Index s = 0; s < lhs.rows(); ++s)
            starts.push_back(slo.array() + (shi - slo).array() * lhs.row(s).transpose().array());
    }

    auto objective = [&](const Eigen::VectorXd& u, Eigen::VectorXd* grad) {
        const Eigen::VectorXd phi = phi_from_u(u);
        Eigen::VectorXd gphi;
        const double ll = lik(phi, grad ? &gphi : nullptr);
        if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
        if (grad) {
            grad->resize(dims);
            for (Eigen::Index i = 0; i < dims; ++i) {
                const double t = logistic(u[i]);
                (*grad)[i] = -gphi[i] * (hi[i] - lo[i]) * t * (1.0 - t);
            }
        }
        return -ll;
    };

    BfgsOptions bopt;
    bopt.max_iterations = options.max_iterations;
    bopt.gradient_tolerance = options.tolerance;
    bopt.value_tolerance = options.tolerance * 1e-3;

    FitTrace trace;
    double best_value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_phi;
    for (const auto& start : starts) {
        const Eigen::VectorXd u0 = u_from_phi(start);
        const Eigen::VectorXd phi0 = phi_from_u(u0);
        KernelSpec spec0 = to_spec(phi0);
        double ll0 = -std::numeric_limits<double>::infinity();
        if (std::isfinite(spec0.process_variance)) {
            try {
                ll0 = GpModel::condition(design, spec0, noise).log_likelihood();
            } catch (const FitError&) {
            }
        }
        trace.starts.push_back(std::move(spec0));
        trace.start_log_likelihoods.push_back(ll0);

        const LocalResult res = minimize_bfgs(objective, u0, bopt);
        if (res.value < best_value) {
            best_value = res.value;
            best_phi = phi_from_u(res.x);
        }
    }
    if (!std::isfinite(best_value)) throw FitError("GP likelihood is not finite at any starting point");

    GpModel model = GpModel::condition(design, to_spec(best_phi), noise);
    model.trace_ = std::move(trace);
    return model;
}

}  // namespace qhsri
