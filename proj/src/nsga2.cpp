#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "qhsri/pareto.hpp"
#include "qhsri/random.hpp"

namespace qhsri {

namespace {

struct Ranked {
    std::vector<int> rank;
    std::vector<double> crowding;
};

Ranked rank_population(const Eigen::MatrixXd& objectives) {
    const auto n = static_cast<std::size_t>(objectives.rows());
    Ranked r{std::vector<int>(n), std::vector<double>(n)};
    const auto fronts = non_dominated_sort(objectives);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        const auto cd = crowding_distance(objectives, fronts[f]);
        for (std::size_t i = 0; i < fronts[f].size(); ++i) {
            r.rank[fronts[f][i]] = static_cast<int>(f);
            r.crowding[fronts[f][i]] = cd[i];
        }
    }
    return r;
}

// Bounded simulated binary crossover on [0,1] (Deb & Agrawal).
void sbx(double& a, double& b, double eta, Rng& rng) {
    if (uniform01(rng) > 0.5 || std::abs(a - b) <= 1e-14) return;
    const double y1 = std::min(a, b), y2 = std::max(a, b);
    const double expo = 1.0 / (eta + 1.0);
    auto betaq = [&](double beta) {
        const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
        const double u = uniform01(rng);
        return u <= 1.0 / alpha ? std::pow(u * alpha, expo) : std::pow(1.0 / (2.0 - u * alpha), expo);
    };
    double c1 = 0.5 * ((y1 + y2) - betaq(1.0 + 2.0 * y1 / (y2 - y1)) * (y2 - y1));
    double c2 = 0.5 * ((y1 + y2) + betaq(1.0 + 2.0 * (1.0 - y2) / (y2 - y1)) * (y2 - y1));
    c1 = std::clamp(c1, 0.0, 1.0);
    c2 = std::clamp(c2, 0.0, 1.0);
    if (uniform01(rng) <= 0.5) std::swap(c1, c2);
    a = c1;
    b = c2;
}

// Bounded polynomial mutation on [0,1].
void polynomial_mutation(double& y, double eta, Rng& rng) {
    const double u = uniform01(rng);
    const double pow_ = 1.0 / (eta + 1.0);
    double dq;
    if (u <= 0.5) {
        const double xy = 1.0 - y;
        const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, eta + 1.0);
        dq = std::pow(val, pow_) - 1.0;
    } else {
        const double xy = y;
        const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(xy, eta + 1.0);
        dq = 1.0 - std::pow(val, pow_);
    }
    y = std::clamp(y + dq, 0.0, 1.0);
}

}  // namespace

FrontArchive nsga2(const BatchObjective& objective, Eigen::Index dim, const Nsga2Options& options) {
    const int n = options.pop_size;
    if (n < 4 || n % 2 != 0) throw std::invalid_argument("nsga2: pop_size must be even and >= 4");
    if (dim < 1) throw std::invalid_argument("nsga2: dimension must be positive");
    const double pm = options.mutation_prob.value_or(1.0 / static_cast<double>(dim));

    Rng rng(mix64(options.seed ^ 0x6e736761ULL));
    Eigen::MatrixXd pop = uniform_points(n, dim, rng);
    Eigen::MatrixXd obj = objective(pop);
    if (obj.rows() != n) throw std::runtime_error("nsga2: objective returned wrong number of rows");
    Ranked ranked = rank_population(obj);

    auto better = [&](int a, int b) {
        const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
        if (ranked.rank[ua] != ranked.rank[ub]) return ranked.rank[ua] < ranked.rank[ub];
        return ranked.crowding[ua] > ranked.crowding[ub];
    };
    auto tournament = [&]() {
        const int a = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        const int b = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        if (better(a, b)) return a;
        if (better(b, a)) return b;
        return uniform01(rng) < 0.5 ? a : b;
    };

    Eigen::MatrixXd children(n, dim);
    for (int gen = 0; gen < options.generations; ++gen) {
        for (int k = 0; k < n; k += 2) {
            const int p1 = tournament(), p2 = tournament();
            Eigen::RowVectorXd c1 = pop.row(p1), c2 = pop.row(p2);
            if (uniform01(rng) <= options.crossover_prob)
                for (Eigen::Index j = 0; j < dim; ++j) sbx(c1[j], c2[j], options.crossover_eta, rng);
            for (Eigen::Index j = 0; j < dim; ++j) {
                if (uniform01(rng) <= pm) polynomial_mutation(c1[j], options.mutation_eta, rng);
                if (uniform01(rng) <= pm) polynomial_mutation(c2[j], options.mutation_eta, rng);
            }
            children.row(k) = c1;
            children.row(k + 1) = c2;
        }
        const Eigen::MatrixXd child_obj = objective(children);

        Eigen::MatrixXd merged(2 * n, dim), merged_obj(2 * n, obj.cols());
        merged << pop, children;
        merged_obj << obj, child_obj;

        const auto fronts = non_dominated_sort(merged_obj);
        std::vector<std::size_t> chosen;
        chosen.reserve(static_cast<std::size_t>(n));
        for (const auto& front : fronts) {
            if (chosen.size() + front.size() <= static_cast<std::size_t>(n)) {
                chosen.insert(chosen.end(), front.begin(), front.end());
                continue;
            }
            const auto cd = crowding_distance(merged_obj, front);
            std::vector<std::size_t> order(front.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
            for (std::size_t i = 0; chosen.size() < static_cast<std::size_t>(n); ++i) chosen.push_back(front[order[i]]);
            break;
        }
        for (int i = 0; i < n; ++i) {
            pop.row(i) = merged.row(static_cast<Eigen::Index>(chosen[static_cast<std::size_t>(i)]));
            obj.row(i) = merged_obj.row(static_cast<Eigen::Index>(chosen[static_cast<std::size_t>(i)]));
        }
        ranked = rank_population(obj);
    }

    std::vector<std::size_t> first;
    for (int i = 0; i < n; ++i)
        if (ranked.rank[static_cast<std::size_t>(i)] == 0 && obj.row(i).allFinite())
            first.push_back(static_cast<std::size_t>(i));
    FrontArchive archive;
    archive.designs.resize(static_cast<Eigen::Index>(first.size()), dim);
    archive.objectives.resize(static_cast<Eigen::Index>(first.size()), obj.cols());
    for (std::size_t i = 0; i < first.size(); ++i) {
        archive.designs.row(static_cast<Eigen::Index>(i)) = pop.row(static_cast<Eigen::Index>(first[i]));
        archive.objectives.row(static_cast<Eigen::Index>(i)) = obj.row(static_cast<Eigen::Index>(first[i]));
    }
    return archive;
}

}  // namespace qhsri
