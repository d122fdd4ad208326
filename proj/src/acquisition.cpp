#include "qhsri/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "qhsri/normal.hpp"
#include "qhsri/optimize.hpp"
#include "qhsri/parallel.hpp"
#include "qhsri/pareto.hpp"
#include "qhsri/random.hpp"

namespace qhsri {

double generalized_ei(double mean, double sd, double threshold, int power) {
    if (power < 0 || power > 4) throw std::invalid_argument("generalized_ei: power must be in [0, 4]");
    if (!(sd > 0.0)) {
        const double imp = threshold - mean;
        if (imp <= 0.0) return 0.0;
        return std::pow(imp, power);
    }
    const double u = (threshold - mean) / sd;
    const double pdf = normal_pdf(u), cdf = normal_cdf(u);
    // partial moments M_k = int_{-inf}^u z^k phi(z) dz
    double moments[5];
    moments[0] = cdf;
    moments[1] = -pdf;
    for (int k = 2; k <= power; ++k) moments[k] = -std::pow(u, k - 1) * pdf + (k - 1) * moments[k - 2];
    double acc = 0.0;
    double binom = 1.0;
    for (int k = 0; k <= power; ++k) {
        acc += binom * std::pow(u, power - k) * ((k % 2) ? -1.0 : 1.0) * moments[k];
        binom = binom * (power - k) / (k + 1);
    }
    return std::max(0.0, std::pow(sd, power) * acc);
}

double expected_improvement(double mean, double sd, double threshold) {
    if (!(sd > 0.0)) return std::max(threshold - mean, 0.0);
    const double u = (threshold - mean) / sd;
    return std::max(0.0, (threshold - mean) * normal_cdf(u) + sd * normal_pdf(u));
}

double probability_of_improvement(double mean, double sd, double threshold) {
    return generalized_ei(mean, sd, threshold, 0);
}

namespace {

std::pair<double, double> mean_sd(const GpModel& model, const Eigen::VectorXd& x) {
    const Prediction p = model.predict(x.transpose());
    return {p.mean[0], std::sqrt(p.latent_variance[0])};
}

}  // namespace

double expected_improvement(const GpModel& model, const Eigen::VectorXd& x, double threshold) {
    const auto [m, s] = mean_sd(model, x);
    return expected_improvement(m, s, threshold);
}

double generalized_ei(const GpModel& model, const Eigen::VectorXd& x, double threshold, int power) {
    const auto [m, s] = mean_sd(model, x);
    return generalized_ei(m, s, threshold, power);
}

double improvement_threshold(const GpModel& model, bool noise_present) {
    const DesignSet& ds = model.design();
    if (!noise_present) return ds.means_vector().minCoeff();
    return model.predict(ds.points_matrix()).mean.minCoeff();
}

std::vector<Candidate> score_candidates(std::span<const GpModel> models, const Eigen::MatrixXd& designs,
                                        bool noise_present, int threads) {
    if (models.empty()) throw std::invalid_argument("score_candidates: no models");
    const auto p = static_cast<Eigen::Index>(models.size());
    const auto n = static_cast<std::size_t>(designs.rows());
    std::vector<Candidate> out(n);
    std::vector<double> scale(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) scale[i] = std::sqrt(models[i].kernel().process_variance);

    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        if (begin == end) return;
        const auto rows = static_cast<Eigen::Index>(end - begin);
        const Eigen::MatrixXd block = designs.middleRows(static_cast<Eigen::Index>(begin), rows);
        for (std::size_t r = begin; r < end; ++r) {
            Candidate& c = out[r];
            c.x = designs.row(static_cast<Eigen::Index>(r)).transpose();
            c.means.resize(p);
            c.stds.resize(p);
            c.avg_std = 0.0;
            if (noise_present) c.var_reduction.resize(p);
        }
        for (Eigen::Index i = 0; i < p; ++i) {
            const Prediction pred = models[static_cast<std::size_t>(i)].predict(block);
            for (Eigen::Index r = 0; r < rows; ++r) {
                Candidate& c = out[begin + static_cast<std::size_t>(r)];
                const double v = pred.latent_variance[r];
                c.means[i] = pred.mean[r];
                c.stds[i] = std::sqrt(v);
                c.avg_std += c.stds[i] / scale[static_cast<std::size_t>(i)] / static_cast<double>(p);
                if (noise_present) {
                    const double noise = pred.observation_variance[r] - v;
                    c.var_reduction[i] = v > 0.0 ? v * v / (v + std::max(noise, 0.0)) : 0.0;
                }
            }
        }
    });
    return out;
}

Eigen::MatrixXd tradeoff_objectives(const std::vector<Candidate>& candidates, bool noise_present) {
    if (candidates.empty()) return {};
    const Eigen::Index p = candidates.front().means.size();
    const Eigen::Index m = p + 1 + (noise_present ? p : 0);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(candidates.size()), m);
    for (std::size_t r = 0; r < candidates.size(); ++r) {
        const Candidate& c = candidates[r];
        const auto row = static_cast<Eigen::Index>(r);
        out.row(row).head(p) = c.means.transpose();
        out(row, p) = -c.avg_std;
        if (noise_present) out.row(row).tail(p) = -c.var_reduction.transpose();
    }
    return out;
}

std::vector<Candidate> probability_improvement_threshold_filter(std::vector<Candidate> candidates,
                                                                double threshold,
                                                                const PiFilterOptions& options) {
    if (candidates.empty()) return candidates;
    for (auto& c : candidates) c.pi_or_pnd = probability_of_improvement(c.means[0], c.stds[0], threshold);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].pi_or_pnd > candidates[b].pi_or_pnd;
    });
    std::vector<Candidate> kept;
    for (std::size_t i : order) {
        if (kept.size() >= options.keep_max) break;
        if (candidates[i].pi_or_pnd < options.pi_min) break;
        kept.push_back(candidates[i]);
    }
    if (kept.empty()) kept.push_back(candidates[order.front()]);
    return kept;
}

double probability_non_domination(const Eigen::VectorXd& means, const Eigen::VectorXd& stds,
                                  const Eigen::MatrixXd& front) {
    double pnd = 1.0;
    for (Eigen::Index k = 0; k < front.rows(); ++k) {
        double dominated = 1.0;
        for (Eigen::Index i = 0; i < means.size(); ++i) {
            const double gap = means[i] - front(k, i);
            if (stds[i] > 0.0)
                dominated *= normal_cdf(gap / stds[i]);
            else
                dominated *= gap > 0.0 ? 1.0 : (gap == 0.0 ? 0.5 : 0.0);
        }
        pnd *= 1.0 - dominated;
    }
    return std::clamp(pnd, 0.0, 1.0);
}

double probability_non_domination(std::span<const GpModel> models, const Eigen::VectorXd& x,
                                  const Eigen::MatrixXd& front) {
    Eigen::VectorXd m(static_cast<Eigen::Index>(models.size())), s(m.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto [mi, si] = mean_sd(models[i], x);
        m[static_cast<Eigen::Index>(i)] = mi;
        s[static_cast<Eigen::Index>(i)] = si;
    }
    return probability_non_domination(m, s, front);
}

Eigen::MatrixXd predicted_front(std::span<const GpModel> models) {
    const Eigen::MatrixXd x = models.front().design().points_matrix();
    Eigen::MatrixXd means(x.rows(), static_cast<Eigen::Index>(models.size()));
    for (std::size_t i = 0; i < models.size(); ++i)
        means.col(static_cast<Eigen::Index>(i)) = models[i].predict(x).mean;
    const auto keep = non_dominated_filter(means);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), means.cols());
    for (std::size_t i = 0; i < keep.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = means.row(static_cast<Eigen::Index>(keep[i]));
    return out;
}

std::vector<Candidate> candidate_pool(std::span<const GpModel> models, bool noise_present,
                                      const FrontSearchOptions& options) {
    if (models.empty()) throw std::invalid_argument("candidate_pool: no models");
    const Eigen::Index d = models.front().design().dim();
    const int n_uniform = options.n_uniform > 0 ? options.n_uniform : static_cast<int>(100 * d);

    auto rng = make_stream(options.seed, {0x756e69u});
    const Eigen::MatrixXd uniform = uniform_points(n_uniform, d, rng);

    Eigen::MatrixXd archive_designs(0, d);
    if (options.nsga_gens > 0 && options.nsga_pop >= 4) {
        Nsga2Options nopt;
        nopt.pop_size = options.nsga_pop + options.nsga_pop % 2;
        nopt.generations = options.nsga_gens;
        nopt.seed = stream_seed(options.seed, {0x6e7367u});
        const BatchObjective objective = [&](const Eigen::MatrixXd& x) {
            return tradeoff_objectives(score_candidates(models, x, noise_present, options.threads), noise_present);
        };
        archive_designs = nsga2(objective, d, nopt).designs;
    }
    Eigen::MatrixXd all(uniform.rows() + archive_designs.rows(), d);
    all << uniform, archive_designs;
    return score_candidates(models, all, noise_present, options.threads);
}

std::vector<Candidate> tradeoff_front_search(std::span<const GpModel> models, bool noise_present,
                                             const FrontSearchOptions& options) {
    std::vector<Candidate> pool = candidate_pool(models, noise_present, options);
    const auto keep = non_dominated_filter(tradeoff_objectives(pool, noise_present));
    std::vector<Candidate> out;
    out.reserve(keep.size());
    for (std::size_t i : keep) out.push_back(std::move(pool[i]));
    return out;
}

// ------------------------------------------------------------ Monte-Carlo qEI

namespace {

// Common random numbers for one batch size: the same normals are reused for
// every batch evaluated, which keeps greedy comparisons smooth.
class QeiSampler {
public:
    QeiSampler(Eigen::Index q, int n_samples, std::uint64_t seed) {
        const int pairs = std::max(1, n_samples / 2);
        auto rng = make_stream(seed, {0x71656900u, static_cast<std::uint64_t>(q)});
        z_.resize(pairs, q);
        for (Eigen::Index i = 0; i < z_.rows(); ++i)
            for (Eigen::Index j = 0; j < q; ++j) z_(i, j) = standard_normal(rng);
    }

    McEstimate operator()(const JointPrediction& joint, double threshold) const {
        const Eigen::Index q = joint.mean.size();
        Eigen::MatrixXd cov = joint.latent_covariance;
        const double scale = std::max(cov.diagonal().maxCoeff(), 0.0);
        Eigen::MatrixXd l = Eigen::MatrixXd::Zero(q, q);
        if (scale > 0.0) {
            bool ok = false;
            Eigen::LLT<Eigen::MatrixXd> llt;
            double added = 0.0;
            for (double rel = 1e-10; rel <= 1e-6 * 1.0000001; rel *= 10.0) {
                cov.diagonal().array() += rel * scale - added;
                added = rel * scale;
                llt.compute(cov);
                if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) {
                    ok = true;
                    break;
                }
            }
            if (!ok) throw std::runtime_error("mc_qei: batch covariance not positive definite after jitter");
            l = llt.matrixL();
        }
        const Eigen::MatrixXd shift = z_ * l.transpose();  // pairs x q
        const Eigen::Index pairs = z_.rows();
        double sum = 0.0, sum_sq = 0.0;
        for (Eigen::Index i = 0; i < pairs; ++i) {
            double plus = 0.0, minus = 0.0;
            for (Eigen::Index j = 0; j < q; ++j) {
                plus = std::max(plus, threshold - joint.mean[j] - shift(i, j));
                minus = std::max(minus, threshold - joint.mean[j] + shift(i, j));
            }
            const double avg = 0.5 * (plus + minus);
            sum += avg;
            sum_sq += avg * avg;
        }
        const double n = static_cast<double>(pairs);
        McEstimate est;
        est.value = sum / n;
        const double var = n > 1 ? std::max(0.0, (sum_sq - n * est.value * est.value) / (n - 1.0)) : 0.0;
        est.std_error = std::sqrt(var / n);
        return est;
    }

private:
    Eigen::MatrixXd z_;
};

}  // namespace

McEstimate mc_qei(const GpModel& model, const Eigen::MatrixXd& batch, double threshold, int n_samples,
                  std::uint64_t seed) {
    if (batch.rows() < 1) throw std::invalid_argument("mc_qei: empty batch");
    const QeiSampler sampler(batch.rows(), n_samples, seed);
    return sampler(model.predict_joint(batch), threshold);
}

Eigen::MatrixXd mc_qei_batch(const GpModel& model, int q, double threshold, const McQeiBatchOptions& options) {
    if (q < 1) throw std::invalid_argument("mc_qei_batch: q must be >= 1");
    const Eigen::Index d = model.design().dim();
    const int n_uniform = options.n_uniform > 0 ? options.n_uniform : static_cast<int>(100 * d);
    const int local = options.local_evaluations > 0 ? options.local_evaluations : static_cast<int>(50 * d);
    Eigen::MatrixXd chosen(0, d);

    for (int k = 0; k < q; ++k) {
        const QeiSampler sampler(k + 1, options.n_samples, options.seed);
        Eigen::MatrixXd batch(k + 1, d);
        batch.topRows(k) = chosen;
        auto value = [&](const Eigen::VectorXd& x) {
            batch.row(k) = x.transpose();
            return sampler(model.predict_joint(batch), threshold).value;
        };

        auto rng = make_stream(options.seed, {0x71626174u, static_cast<std::uint64_t>(k)});
        const Eigen::MatrixXd screen = uniform_points(n_uniform, d, rng);
        Eigen::VectorXd best = screen.row(0).transpose();
        double best_value = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < screen.rows(); ++i) {
            const double v = value(screen.row(i).transpose());
            if (v > best_value) {
                best_value = v;
                best = screen.row(i).transpose();
            }
        }
        if (options.swarm_size > 0 && options.swarm_iterations > 0) {
            SwarmOptions so;
            so.swarm_size = options.swarm_size;
            so.iterations = options.swarm_iterations;
            so.seed = stream_seed(options.seed, {0x73776du, static_cast<std::uint64_t>(k)});
            const LocalResult swarm = minimize_particle_swarm([&](const Eigen::VectorXd& x) { return -value(x); },
                                                              Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d), so,
                                                              best);
            if (-swarm.value > best_value) {
                best_value = -swarm.value;
                best = swarm.x;
            }
        }
        NelderMeadOptions nm;
        nm.max_evaluations = local;
        nm.initial_step = 0.05;
        const LocalResult refined = minimize_nelder_mead([&](const Eigen::VectorXd& x) { return -value(x); }, best,
                                                         Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d), nm);
        if (-refined.value > best_value) best = refined.x;

        chosen.conservativeResize(k + 1, Eigen::NoChange);
        chosen.row(k) = best.transpose();
    }
    return chosen;
}

}  // namespace qhsri
