#include "qhsri/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace qhsri {

Eigen::MatrixXd latin_hypercube(Eigen::Index n, Eigen::Index d, Rng& rng) {
    Eigen::MatrixXd out(n, d);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        for (Eigen::Index i = n - 1; i > 0; --i) {
            const auto k = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(i + 1));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
        }
        for (Eigen::Index i = 0; i < n; ++i)
            out(i, j) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + uniform01(rng)) /
                        static_cast<double>(n);
    }
    return out;
}

double min_distance(const Eigen::MatrixXd& points) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = i + 1; j < points.rows(); ++j)
            best = std::min(best, (points.row(i) - points.row(j)).norm());
    return best;
}

namespace {

double phi_p(const Eigen::MatrixXd& x) {
    constexpr double p = 15.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = i + 1; j < x.rows(); ++j)
            acc += std::pow(std::max((x.row(i) - x.row(j)).norm(), 1e-12), -p);
    return std::pow(acc, 1.0 / p);
}

}  // namespace

Eigen::MatrixXd maximin_latin_hypercube(Eigen::Index n, Eigen::Index d, Rng& rng) {
    Eigen::MatrixXd x = latin_hypercube(n, d, rng);
    if (n < 3) return x;
    double current = phi_p(x);
    const Eigen::Index budget = std::min<Eigen::Index>(5000, 20 * n * d);
    for (Eigen::Index it = 0; it < budget; ++it) {
        const auto col = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(d));
        const auto a = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
        const auto b = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
        if (a == b) continue;
        std::swap(x(a, col), x(b, col));
        const double trial = phi_p(x);
        if (trial < current)
            current = trial;
        else
            std::swap(x(a, col), x(b, col));
    }
    return x;
}

}  // namespace qhsri
