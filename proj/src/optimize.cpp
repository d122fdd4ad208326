#include "qhsri/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "qhsri/random.hpp"

namespace qhsri {

LocalResult minimize_bfgs(const DifferentiableFunction& f, Eigen::VectorXd x0,
                          const BfgsOptions& options) {
    const Eigen::Index n = x0.size();
    LocalResult res;
    Eigen::VectorXd g(n);
    double fx = f(x0, &g);
    res.evaluations = 1;
    res.x = x0;
    res.value = fx;
    if (!std::isfinite(fx) || !g.allFinite()) return res;

    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd g_new(n);

    for (int it = 0; it < options.max_iterations; ++it) {
        res.iterations = it + 1;
        if (g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) break;

        Eigen::VectorXd dir = -h * g;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            h.setIdentity();
            dir = -g;
            slope = -g.squaredNorm();
        }
        double step = scaled ? 1.0 : std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>());

        double f_new = std::numeric_limits<double>::infinity();
        Eigen::VectorXd x_new;
        bool accepted = false;
        for (int bt = 0; bt < 50; ++bt) {
            x_new = x + step * dir;
            f_new = f(x_new, &g_new);
            ++res.evaluations;
            if (std::isfinite(f_new) && g_new.allFinite() && f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double decrease = fx - f_new;
        x = x_new;
        g = g_new;
        fx = f_new;

        const double ys = y.dot(s);
        if (ys > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                h *= ys / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / ys;
            const Eigen::VectorXd hy = h * y;
            // H <- (I - rho s y')H(I - rho y s') + rho s s'
            h += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
                 rho * (hy * s.transpose() + s * hy.transpose());
        }
        if (decrease <= options.value_tolerance * std::max(1.0, std::abs(fx))) break;
    }
    res.x = x;
    res.value = fx;
    return res;
}

LocalResult minimize_nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                 Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper,
                                 const NelderMeadOptions& options) {
    const Eigen::Index n = x0.size();
    auto clamp = [&](Eigen::VectorXd v) { return v.cwiseMax(lower).cwiseMin(upper).eval(); };
    LocalResult res;

    std::vector<Eigen::VectorXd> simplex(n + 1);
    std::vector<double> values(n + 1);
    simplex[0] = clamp(std::move(x0));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd v = simplex[0];
        const double span = options.initial_step * (upper[i] - lower[i]);
        v[i] += (v[i] + span <= upper[i]) ? span : -span;
        simplex[i + 1] = clamp(v);
    }
    auto eval = [&](const Eigen::VectorXd& v) {
        ++res.evaluations;
        const double y = f(v);
        return std::isfinite(y) ? y : std::numeric_limits<double>::infinity();
    };
    for (Eigen::Index i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    std::vector<Eigen::Index> order(n + 1);
    while (res.evaluations < options.max_evaluations) {
        ++res.iterations;
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
        const Eigen::Index best = order.front();
        const Eigen::Index worst = order.back();
        const Eigen::Index second = order[n - 1];
        if (std::abs(values[worst] - values[best]) <=
            options.value_tolerance * (std::abs(values[best]) + 1e-300))
            break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i <= n; ++i)
            if (i != worst) centroid += simplex[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = clamp(centroid + (centroid - simplex[worst]));
        const double fr = eval(xr);
        if (fr < values[best]) {
            const Eigen::VectorXd xe = clamp(centroid + 2.0 * (centroid - simplex[worst]));
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
        } else if (fr < values[second]) {
            simplex[worst] = xr;
            values[worst] = fr;
        } else {
            const bool outside = fr < values[worst];
            const Eigen::VectorXd xc = outside ? clamp(centroid + 0.5 * (xr - centroid))
                                               : clamp(centroid + 0.5 * (simplex[worst] - centroid));
            const double fc = eval(xc);
            if (fc < std::min(fr, values[worst])) {
                simplex[worst] = xc;
                values[worst] = fc;
            } else {
                for (Eigen::Index i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    simplex[i] = clamp(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
                    values[i] = eval(simplex[i]);
                }
            }
        }
    }
    const auto it = std::min_element(values.begin(), values.end());
    res.x = simplex[static_cast<std::size_t>(it - values.begin())];
    res.value = *it;
    return res;
}

LocalResult minimize_particle_swarm(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                    const SwarmOptions& options, const Eigen::VectorXd& x0) {
    const Eigen::Index n = lower.size();
    const Eigen::Index m = std::max(1, options.swarm_size);
    const double inertia = 1.0 / (2.0 * std::log(2.0));
    const double pull = 0.5 + std::log(2.0);
    Rng rng = make_stream(options.seed, {0x70736fu});
    LocalResult res;
    auto eval = [&](const Eigen::VectorXd& v) {
        ++res.evaluations;
        const double y = f(v);
        return std::isfinite(y) ? y : std::numeric_limits<double>::infinity();
    };

    const Eigen::VectorXd span = upper - lower;
    Eigen::MatrixXd pos(m, n), vel(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            pos(i, j) = lower[j] + span[j] * uniform01(rng);
            vel(i, j) = 0.5 * (lower[j] + span[j] * uniform01(rng) - pos(i, j));
        }
    if (x0.size() == n) pos.row(0) = x0.cwiseMax(lower).cwiseMin(upper).transpose();

    Eigen::MatrixXd best_pos = pos;
    Eigen::VectorXd best_val(m);
    for (Eigen::Index i = 0; i < m; ++i) best_val[i] = eval(pos.row(i).transpose());
    Eigen::Index g;
    best_val.minCoeff(&g);

    for (int it = 0; it < options.iterations; ++it) {
        ++res.iterations;
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                vel(i, j) = inertia * vel(i, j) + pull * uniform01(rng) * (best_pos(i, j) - pos(i, j)) +
                            pull * uniform01(rng) * (best_pos(g, j) - pos(i, j));
                pos(i, j) += vel(i, j);
                if (pos(i, j) < lower[j] || pos(i, j) > upper[j]) {
                    pos(i, j) = std::clamp(pos(i, j), lower[j], upper[j]);
                    vel(i, j) = 0.0;
                }
            }
            const double v = eval(pos.row(i).transpose());
            if (v < best_val[i]) {
                best_val[i] = v;
                best_pos.row(i) = pos.row(i);
                if (v < best_val[g]) g = i;
            }
        }
    }
    res.x = best_pos.row(g).transpose();
    res.value = best_val[g];
    return res;
}

}  // namespace qhsri
