#include "qhsri/pareto.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qhsri {

bool dominates(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dominates: length mismatch");
    bool strict = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

std::vector<std::size_t> non_dominated_filter(const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    const Eigen::MatrixXd pt = points.transpose();  // column access is contiguous
    std::vector<std::size_t> keep;
    for (Eigen::Index i = 0; i < n; ++i) {
        bool dominated = false;
        for (Eigen::Index j = 0; j < n && !dominated; ++j)
            if (j != i && dominates(pt.col(j), pt.col(i))) dominated = true;
        if (!dominated) keep.push_back(static_cast<std::size_t>(i));
    }
    return keep;
}

std::vector<std::vector<std::size_t>> non_dominated_sort(const Eigen::MatrixXd& points) {
    const auto n = static_cast<std::size_t>(points.rows());
    const Eigen::MatrixXd pt = points.transpose();
    std::vector<std::size_t> finite, broken;
    for (std::size_t i = 0; i < n; ++i)
        (pt.col(static_cast<Eigen::Index>(i)).allFinite() ? finite : broken).push_back(i);

    std::vector<std::vector<std::size_t>> dominated_by(n);
    std::vector<int> count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t a = 0; a < finite.size(); ++a) {
        const std::size_t i = finite[a];
        for (std::size_t b = a + 1; b < finite.size(); ++b) {
            const std::size_t j = finite[b];
            const auto ci = pt.col(static_cast<Eigen::Index>(i));
            const auto cj = pt.col(static_cast<Eigen::Index>(j));
            if (dominates(ci, cj)) {
                dominated_by[i].push_back(j);
                ++count[j];
            } else if (dominates(cj, ci)) {
                dominated_by[j].push_back(i);
                ++count[i];
            }
        }
    }
    for (std::size_t i : finite)
        if (count[i] == 0) current.push_back(i);
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t i : current)
            for (std::size_t j : dominated_by[i])
                if (--count[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    if (!broken.empty()) fronts.push_back(std::move(broken));
    return fronts;
}

std::vector<double> crowding_distance(const Eigen::MatrixXd& points, const std::vector<std::size_t>& front) {
    const std::size_t m = front.size();
    std::vector<double> dist(m, 0.0);
    if (m <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    std::vector<std::size_t> order(m);
    for (Eigen::Index k = 0; k < points.cols(); ++k) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return points(static_cast<Eigen::Index>(front[a]), k) < points(static_cast<Eigen::Index>(front[b]), k);
        });
        const double lo = points(static_cast<Eigen::Index>(front[order.front()]), k);
        const double hi = points(static_cast<Eigen::Index>(front[order.back()]), k);
        dist[order.front()] = dist[order.back()] = std::numeric_limits<double>::infinity();
        if (!(hi > lo) || !std::isfinite(hi - lo)) continue;
        for (std::size_t i = 1; i + 1 < m; ++i)
            dist[order[i]] += (points(static_cast<Eigen::Index>(front[order[i + 1]]), k) -
                               points(static_cast<Eigen::Index>(front[order[i - 1]]), k)) /
                              (hi - lo);
    }
    return dist;
}

}  // namespace qhsri
