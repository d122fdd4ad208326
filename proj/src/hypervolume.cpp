#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "qhsri/pareto.hpp"

namespace qhsri {

namespace {

// Area dominated by (x, y) pairs relative to (rx, ry); points already clipped.
double area_2d(std::vector<std::pair<double, double>> pts, double rx, double ry) {
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    double prev_y = ry;
    for (const auto& [x, y] : pts) {
        if (y < prev_y) {
            area += (rx - x) * (prev_y - y);
            prev_y = y;
        }
    }
    return area;
}

}  // namespace

double hypervolume(const Eigen::MatrixXd& front, const Eigen::VectorXd& ref) {
    const Eigen::Index p = ref.size();
    if (front.rows() > 0 && front.cols() != p) throw std::invalid_argument("hypervolume: dimension mismatch");
    if (p < 1 || p > 3) throw std::invalid_argument("hypervolume: only 1 to 3 objectives are supported");

    std::vector<Eigen::Index> inside;
    for (Eigen::Index i = 0; i < front.rows(); ++i)
        if ((front.row(i).transpose().array() < ref.array()).all()) inside.push_back(i);
    if (inside.empty()) return 0.0;

    if (p == 1) {
        double best = ref[0];
        for (auto i : inside) best = std::min(best, front(i, 0));
        return ref[0] - best;
    }
    if (p == 2) {
        std::vector<std::pair<double, double>> pts;
        for (auto i : inside) pts.emplace_back(front(i, 0), front(i, 1));
        return area_2d(std::move(pts), ref[0], ref[1]);
    }
    // p == 3: sweep along the last objective, integrating 2D slices.
    std::sort(inside.begin(), inside.end(), [&](Eigen::Index a, Eigen::Index b) { return front(a, 2) < front(b, 2); });
    double volume = 0.0;
    std::vector<std::pair<double, double>> slice;
    for (std::size_t k = 0; k < inside.size(); ++k) {
        slice.emplace_back(front(inside[k], 0), front(inside[k], 1));
        const double z_next = k + 1 < inside.size() ? front(inside[k + 1], 2) : ref[2];
        const double depth = z_next - front(inside[k], 2);
        if (depth > 0.0) volume += depth * area_2d(slice, ref[0], ref[1]);
    }
    return volume;
}

}  // namespace qhsri
