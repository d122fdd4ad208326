#include "qhsri/portfolio.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "qhsri/pareto.hpp"
#include "qhsri/random.hpp"

namespace qhsri {

// ------------------------------------------------------------------- assets

AssetSet assets_from_normalized(Eigen::MatrixXd normalized) {
    AssetSet set;
    const Eigen::Index r = normalized.rows(), m = normalized.cols();
    set.assets = std::move(normalized);
    set.active_dims.resize(static_cast<std::size_t>(m));
    std::iota(set.active_dims.begin(), set.active_dims.end(), Eigen::Index{0});
    set.ideal_point = Eigen::VectorXd::Zero(m);
    set.ref_point = Eigen::VectorXd::Ones(m);

    const Eigen::MatrixXd gap = (1.0 - set.assets.array()).cwiseMax(0.0);
    set.returns = gap.rowwise().prod();
    set.covariance.resize(r, r);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index k = i; k < r; ++k) {
            double joint = 1.0;
            for (Eigen::Index j = 0; j < m; ++j) joint *= std::min(gap(i, j), gap(k, j));
            const double c = joint - set.returns[i] * set.returns[k];
            set.covariance(i, k) = c;
            set.covariance(k, i) = c;
        }
    }
    return set;
}

AssetSet build_assets(const Eigen::MatrixXd& objectives, double margin) {
    if (objectives.rows() < 1) throw PortfolioError("build_assets: no candidates");
    if (!objectives.allFinite()) throw PortfolioError("build_assets: non-finite objective values");
    std::vector<Eigen::Index> dims;
    std::vector<double> lo, hi;
    for (Eigen::Index j = 0; j < objectives.cols(); ++j) {
        const double mn = objectives.col(j).minCoeff();
        const double mx = objectives.col(j).maxCoeff();
        const double range = mx - mn;
        if (!(range > 1e-12 * std::max(1.0, std::max(std::abs(mn), std::abs(mx))))) continue;
        dims.push_back(j);
        lo.push_back(mn);
        hi.push_back(mx + margin * range);
    }
    if (dims.empty()) throw PortfolioError("build_assets: every trade-off dimension is constant");

    Eigen::MatrixXd norm(objectives.rows(), static_cast<Eigen::Index>(dims.size()));
    for (std::size_t k = 0; k < dims.size(); ++k)
        norm.col(static_cast<Eigen::Index>(k)) =
            (objectives.col(dims[k]).array() - lo[k]) / (hi[k] - lo[k]);
    AssetSet set = assets_from_normalized(std::move(norm));
    set.active_dims = std::move(dims);
    set.ideal_point = Eigen::Map<Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    set.ref_point = Eigen::Map<Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    return set;
}

AssetSet build_assets(const std::vector<Candidate>& candidates, bool noise_present, double margin) {
    return build_assets(tradeoff_objectives(candidates, noise_present), margin);
}

double sharpe_ratio(const AssetSet& assets, const Eigen::VectorXd& z) {
    const double risk = z.dot(assets.covariance * z);
    const double ret = assets.returns.dot(z) - assets.riskless_return;
    if (!(risk > 0.0)) return ret > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return ret / std::sqrt(risk);
}

// ---------------------------------------------------------------- Sharpe QP

namespace {

// Cholesky factor of Q restricted to an ordered free set, updated as
// variables enter and leave.
class FreeSetCholesky {
public:
    explicit FreeSetCholesky(Eigen::Index capacity) : l_(capacity, capacity) {}

    Eigen::Index size() const { return f_; }

    // Returns false when the column is numerically dependent on the free set.
    bool append(const Eigen::MatrixXd& q, const std::vector<Eigen::Index>& free, Eigen::Index j) {
        Eigen::VectorXd col(f_);
        for (Eigen::Index i = 0; i < f_; ++i) col[i] = q(free[static_cast<std::size_t>(i)], j);
        Eigen::VectorXd l = col;
        if (f_ > 0) l = l_.topLeftCorner(f_, f_).triangularView<Eigen::Lower>().solve(col);
        const double d2 = q(j, j) - l.squaredNorm();
        if (!(d2 > 1e-14 * q(j, j))) return false;
        l_.row(f_).head(f_) = l.transpose();
        l_(f_, f_) = std::sqrt(d2);
        ++f_;
        return true;
    }

    // Deletes position p and restores the triangular shape with Givens rotations.
    void remove(Eigen::Index p) {
        for (Eigen::Index i = p; i + 1 < f_; ++i) l_.row(i).head(f_) = l_.row(i + 1).head(f_);
        for (Eigen::Index k = p; k + 1 < f_; ++k) {
            const double a = l_(k, k), b = l_(k, k + 1);
            const double rr = std::hypot(a, b);
            if (rr == 0.0) continue;
            const double c = a / rr, s = b / rr;
            for (Eigen::Index i = k; i + 1 < f_; ++i) {
                const double x = l_(i, k), y = l_(i, k + 1);
                l_(i, k) = c * x + s * y;
                l_(i, k + 1) = -s * x + c * y;
            }
            l_(k, k + 1) = 0.0;
        }
        --f_;
        for (Eigen::Index i = 0; i < f_; ++i) l_(i, f_) = 0.0;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        const auto l = l_.topLeftCorner(f_, f_).triangularView<Eigen::Lower>();
        Eigen::VectorXd y = l.solve(rhs);
        return l.transpose().solve(y);
    }

private:
    Eigen::MatrixXd l_;
    Eigen::Index f_ = 0;
};

struct NnqpResult {
    Eigen::VectorXd w;
    double residual = 0.0;
    int iterations = 0;
};

// min 1/2 w'Qw - r'w subject to w >= 0 (Lawson-Hanson style active set).
NnqpResult solve_nnqp(const Eigen::MatrixXd& q, const Eigen::VectorXd& r) {
    const Eigen::Index n = r.size();
    const double scale = std::max(r.lpNorm<Eigen::Infinity>(), 1e-300);
    const double tol = 1e-12 * scale;

    NnqpResult res;
    res.w = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Index> free;
    std::vector<char> in_free(static_cast<std::size_t>(n), 0), banned(static_cast<std::size_t>(n), 0);
    std::vector<char> stalled(static_cast<std::size_t>(n), 0);
    FreeSetCholesky chol(n);
    const int max_iter = static_cast<int>(10 * n + 100);

    auto gradient = [&]() {
        Eigen::VectorXd g = -r;
        for (Eigen::Index j : free) g += q.col(j) * res.w[j];
        return g;
    };

    while (res.iterations < max_iter) {
        ++res.iterations;
        const Eigen::VectorXd g = gradient();
        Eigen::Index enter = -1;
        double most = -tol;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            if (in_free[ui] || banned[ui] || stalled[ui]) continue;
            if (g[i] < most) {
                most = g[i];
                enter = i;
            }
        }
        if (enter < 0) break;
        if (!chol.append(q, free, enter)) {
            banned[static_cast<std::size_t>(enter)] = 1;
            continue;
        }
        free.push_back(enter);
        in_free[static_cast<std::size_t>(enter)] = 1;

        while (true) {
            Eigen::VectorXd rf(static_cast<Eigen::Index>(free.size()));
            for (std::size_t k = 0; k < free.size(); ++k) rf[static_cast<Eigen::Index>(k)] = r[free[k]];
            const Eigen::VectorXd s = chol.solve(rf);
            if ((s.array() > 0.0).all()) {
                for (std::size_t k = 0; k < free.size(); ++k) res.w[free[k]] = s[static_cast<Eigen::Index>(k)];
                break;
            }
            double alpha = 1.0;
            std::size_t blocking = 0;
            for (std::size_t k = 0; k < free.size(); ++k) {
                const double sk = s[static_cast<Eigen::Index>(k)], wk = res.w[free[k]];
                if (sk <= 0.0 && wk / (wk - sk) <= alpha) {
                    alpha = wk / (wk - sk);
                    blocking = k;
                }
            }
            for (std::size_t k = 0; k < free.size(); ++k)
                res.w[free[k]] += alpha * (s[static_cast<Eigen::Index>(k)] - res.w[free[k]]);
            res.w[free[blocking]] = 0.0;
            for (std::size_t k = free.size(); k-- > 0;) {
                const Eigen::Index j = free[k];
                if (res.w[j] <= 1e-15 * scale) {
                    res.w[j] = 0.0;
                    chol.remove(static_cast<Eigen::Index>(k));
                    free.erase(free.begin() + static_cast<std::ptrdiff_t>(k));
                    in_free[static_cast<std::size_t>(j)] = 0;
                }
            }
            if (free.empty()) break;
        }
        // A variable that entered and immediately left would loop forever.
        if (!in_free[static_cast<std::size_t>(enter)])
            stalled[static_cast<std::size_t>(enter)] = 1;
        else
            std::fill(stalled.begin(), stalled.end(), 0);
    }

    const Eigen::VectorXd g = gradient();
    double resid = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double gi = g[i] / scale;
        resid = std::max(resid, res.w[i] > 0.0 ? std::abs(gi) : std::max(0.0, -gi));
    }
    res.residual = resid;
    return res;
}

}  // namespace

SharpeSolution solve_sharpe(const AssetSet& assets) {
    const Eigen::Index r = assets.size();
    if (r < 1) throw PortfolioError("solve_sharpe: empty asset set");
    if (!((assets.returns.array() > assets.riskless_return).any()))
        throw PortfolioError("no investable asset: every return is at or below the riskless return");

    // Merge identical assets; investable ones only.
    std::map<std::vector<double>, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < r; ++i) {
        if (!(assets.returns[i] > assets.riskless_return)) continue;
        const Eigen::VectorXd row = assets.assets.row(i).transpose();
        groups[std::vector<double>(row.data(), row.data() + row.size())].push_back(i);
    }
    std::vector<std::vector<Eigen::Index>> members;
    for (auto& [key, idx] : groups) members.push_back(std::move(idx));
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });

    const auto k = static_cast<Eigen::Index>(members.size());
    Eigen::VectorXd ret(k);
    Eigen::MatrixXd cov(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        const Eigen::Index ia = members[static_cast<std::size_t>(a)].front();
        ret[a] = assets.returns[ia] - assets.riskless_return;
        for (Eigen::Index b = 0; b < k; ++b) cov(a, b) = assets.covariance(ia, members[static_cast<std::size_t>(b)].front());
    }
    const double trace = std::max(cov.trace(), 1e-300);
    cov.diagonal().array() += 1e-12 * trace / static_cast<double>(k);

    const NnqpResult qp = solve_nnqp(cov, ret);
    constexpr double kKktTolerance = 1e-9;
    const double total = qp.w.sum();
    if (!(total > 0.0) || qp.residual > kKktTolerance) {
        std::ostringstream os;
        os << "solve_sharpe: QP did not converge (KKT residual " << qp.residual << ", " << qp.iterations
           << " iterations, " << k << " distinct assets)";
        throw PortfolioError(os.str());
    }

    SharpeSolution sol;
    sol.weights = Eigen::VectorXd::Zero(r);
    for (Eigen::Index a = 0; a < k; ++a) {
        const auto& grp = members[static_cast<std::size_t>(a)];
        const double share = qp.w[a] / total / static_cast<double>(grp.size());
        for (Eigen::Index i : grp) sol.weights[i] = share;
    }
    sol.weights = sol.weights.cwiseMax(0.0);
    sol.weights /= sol.weights.sum();
    sol.sharpe_value = sharpe_ratio(assets, sol.weights);
    sol.kkt_residual = qp.residual;
    sol.iterations = qp.iterations;
    return sol;
}

// --------------------------------------------------------------- allocation

namespace {

int round_half_away(double v) { return static_cast<int>(std::round(v)); }

long long rounded_sum(const Eigen::VectorXd& z, double gamma) {
    long long s = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) s += round_half_away(gamma * z[i]);
    return s;
}

// Order of indices by key, ties broken by a seeded shuffle.
template <typename Key>
std::vector<Eigen::Index> random_tie_order(const std::vector<Eigen::Index>& idx, Key key, Rng& rng) {
    std::vector<Eigen::Index> order = idx;
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return key(a) < key(b); });
    return order;
}

BatchAllocation proportional(const Eigen::VectorXd& z, int q, Rng& rng) {
    BatchAllocation out;
    out.total = q;
    out.counts.assign(static_cast<std::size_t>(z.size()), 0);
    const double zmax = z.maxCoeff();
    double lo = 0.0;
    double hi = static_cast<double>(q) * static_cast<double>(z.size()) / zmax;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (rounded_sum(z, mid) >= q ? hi : lo) = mid;
    }
    out.gamma = hi;
    long long sum = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        out.counts[static_cast<std::size_t>(i)] = round_half_away(hi * z[i]);
        sum += out.counts[static_cast<std::size_t>(i)];
    }
    long long excess = sum - q;
    if (excess > 0) {
        // Prefer assets that crossed a rounding boundary between lo and hi,
        // then any asset, closest fractional part to 0.5 first.
        std::vector<Eigen::Index> crossed, rest;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            if (out.counts[static_cast<std::size_t>(i)] == 0) continue;
            (round_half_away(lo * z[i]) < out.counts[static_cast<std::size_t>(i)] ? crossed : rest).push_back(i);
        }
        auto key = [&](Eigen::Index i) {
            const double v = hi * z[i];
            return std::abs(v - std::floor(v) - 0.5);
        };
        for (auto* group : {&crossed, &rest}) {
            for (Eigen::Index i : random_tie_order(*group, key, rng)) {
                if (excess == 0) break;
                --out.counts[static_cast<std::size_t>(i)];
                --excess;
            }
        }
    }
    return out;
}

}  // namespace

BatchAllocation allocate(const Eigen::VectorXd& weights, int q, AllocationMode mode, std::uint64_t seed) {
    if (q < 1) throw std::invalid_argument("allocate: q must be >= 1");
    if (weights.size() < 1 || !(weights.array() >= 0.0).all() || !(weights.sum() > 0.0))
        throw std::invalid_argument("allocate: weights must be nonnegative with a positive sum");
    Rng rng(mix64(seed ^ 0x616c6c6fULL));

    if (mode == AllocationMode::Proportional) return proportional(weights, q, rng);

    std::vector<Eigen::Index> positive;
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        if (weights[i] > 0.0) positive.push_back(i);
    BatchAllocation out;
    out.total = q;
    out.counts.assign(static_cast<std::size_t>(weights.size()), 0);
    const auto order = random_tie_order(positive, [&](Eigen::Index i) { return -weights[i]; }, rng);
    const std::size_t take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(q));
    for (std::size_t k = 0; k < take; ++k) out.counts[static_cast<std::size_t>(order[k])] = 1;
    if (take < static_cast<std::size_t>(q)) {
        // Not enough distinct assets: spread the remaining slots proportionally.
        Eigen::VectorXd sub(static_cast<Eigen::Index>(positive.size()));
        for (std::size_t k = 0; k < positive.size(); ++k) sub[static_cast<Eigen::Index>(k)] = weights[positive[k]];
        const BatchAllocation extra = proportional(sub, q - static_cast<int>(take), rng);
        for (std::size_t k = 0; k < positive.size(); ++k)
            out.counts[static_cast<std::size_t>(positive[k])] += extra.counts[k];
        out.gamma = extra.gamma;
    }
    return out;
}

// ------------------------------------------------------------- qhsri_select

int Selection::total() const {
    int t = 0;
    for (const auto& d : designs) t += d.replicates;
    return t;
}

namespace {

// Candidates surviving the PI (one objective) or PND (several) filter.
std::vector<Candidate> filter_layer(std::span<const GpModel> models, std::vector<Candidate> layer, int slots,
                                    bool noise_present, const QhsriConfig& config) {
    if (models.size() == 1) {
        if (static_cast<int>(layer.size()) <= slots) return layer;
        return probability_improvement_threshold_filter(std::move(layer),
                                                        improvement_threshold(models.front(), noise_present),
                                                        config.pi);
    }
    const Eigen::MatrixXd front = predicted_front(models);
    for (auto& c : layer) c.pi_or_pnd = probability_non_domination(c.means, c.stds, front);
    std::vector<std::size_t> order(layer.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return layer[a].pi_or_pnd > layer[b].pi_or_pnd; });
    std::vector<std::size_t> keep;
    for (std::size_t i : order) {
        if (keep.size() >= config.pi.keep_max || layer[i].pi_or_pnd < config.pnd_min) break;
        keep.push_back(i);
    }
    if (keep.empty()) return layer;  // fall back to the unfiltered front
    std::sort(keep.begin(), keep.end());
    std::vector<Candidate> kept;
    kept.reserve(keep.size());
    for (std::size_t i : keep) kept.push_back(std::move(layer[i]));
    return kept;
}

// Drops candidates within merge tolerance of an earlier one.
std::vector<Candidate> distinct_designs(std::vector<Candidate> pool) {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pool[a].x[0] < pool[b].x[0] || (pool[a].x[0] == pool[b].x[0] && a < b);
    });
    std::vector<char> drop(pool.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (drop[order[i]]) continue;
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const std::size_t a = order[i], b = order[j];
            if (pool[b].x[0] - pool[a].x[0] >= kMergeTolerance) break;
            if (!drop[b] && (pool[a].x - pool[b].x).lpNorm<Eigen::Infinity>() < kMergeTolerance)
                drop[std::max(a, b)] = 1;
        }
    }
    std::vector<Candidate> out;
    out.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (!drop[i]) out.push_back(std::move(pool[i]));
    return out;
}

// Sharpe weights for a layer; a single candidate or an all-constant layer
// gets uniform weights.
Eigen::VectorXd layer_weights(const std::vector<Candidate>& layer, bool noise_present, double margin,
                              std::size_t& asset_count) {
    const auto n = static_cast<Eigen::Index>(layer.size());
    if (n == 1) return Eigen::VectorXd::Ones(1);
    try {
        const AssetSet assets = build_assets(layer, noise_present, margin);
        asset_count = std::max<std::size_t>(asset_count, static_cast<std::size_t>(assets.size()));
        return solve_sharpe(assets).weights;
    } catch (const PortfolioError& e) {
        if (std::string(e.what()).find("constant") == std::string::npos) throw;
        return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    }
}

}  // namespace

Selection qhsri_select(std::span<const GpModel> models, int q, bool noise_present, const QhsriConfig& config,
                       std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    if (models.empty()) throw std::invalid_argument("qhsri_select: no models");
    if (q < 1) throw std::invalid_argument("qhsri_select: q must be >= 1");
    const DesignSet& evaluated = models.front().design();

    FrontSearchOptions search = config.search;
    search.seed = stream_seed(seed, {0x73656172u});
    std::vector<Candidate> pool = candidate_pool(models, noise_present, search);
    if (noise_present && config.include_evaluated) {
        const auto existing = score_candidates(models, evaluated.points_matrix(), noise_present, search.threads);
        pool.insert(pool.end(), existing.begin(), existing.end());
    }
    if (!noise_present) {
        std::erase_if(pool, [&](const Candidate& c) { return evaluated.find(c.x).has_value(); });
    }
    pool = distinct_designs(std::move(pool));
    if (pool.empty()) throw std::runtime_error("qhsri_select: empty candidate pool");

    Selection sel;
    sel.pool_size = pool.size();
    std::vector<std::pair<Eigen::VectorXd, int>> picks;
    auto add_pick = [&](const Eigen::VectorXd& x, int count) {
        for (auto& [px, pc] : picks)
            if ((px - x).lpNorm<Eigen::Infinity>() < kMergeTolerance) {
                pc += count;
                return;
            }
        picks.emplace_back(x, count);
    };

    Rng rng = make_stream(seed, {0x616c6cu});
    std::vector<std::size_t> remaining(pool.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    int selected = 0;
    while (selected < q && !remaining.empty()) {
        std::vector<Candidate> sub;
        sub.reserve(remaining.size());
        for (std::size_t i : remaining) sub.push_back(pool[i]);
        const auto front_idx = non_dominated_filter(tradeoff_objectives(sub, noise_present));
        std::vector<Candidate> layer;
        std::vector<std::size_t> layer_pool;
        for (std::size_t i : front_idx) {
            layer.push_back(sub[i]);
            layer_pool.push_back(remaining[i]);
        }
        const int slots = q - selected;
        std::vector<Candidate> kept = filter_layer(models, layer, slots, noise_present, config);
        // Map kept candidates back to pool indices (filters copy candidates).
        std::vector<std::size_t> kept_pool;
        for (const auto& c : kept)
            for (std::size_t k = 0; k < layer.size(); ++k)
                if (layer[k].x == c.x) {
                    kept_pool.push_back(layer_pool[k]);
                    break;
                }

        const Eigen::VectorXd z = layer_weights(kept, noise_present, config.margin, sel.asset_count);
        if (noise_present) {
            const BatchAllocation alloc = allocate(z, slots, AllocationMode::Proportional, rng());
            for (std::size_t k = 0; k < kept.size(); ++k)
                if (alloc.counts[k] > 0) add_pick(kept[k].x, alloc.counts[k]);
            selected = q;
            break;
        }
        // Deterministic: one evaluation per distinct design. When fewer assets
        // carry weight than slots remain, take them all and solve again on the
        // candidates left over.
        int positive = 0;
        for (Eigen::Index i = 0; i < z.size(); ++i) positive += z[i] > 0.0;
        const BatchAllocation alloc = allocate(z, std::min(slots, positive), AllocationMode::TopQ, rng());
        std::vector<std::size_t> taken;
        for (std::size_t k = 0; k < kept.size(); ++k)
            if (alloc.counts[k] > 0) {
                add_pick(kept[k].x, 1);
                taken.push_back(kept_pool[k]);
                ++selected;
            }
        std::erase_if(remaining, [&](std::size_t i) { return std::find(taken.begin(), taken.end(), i) != taken.end(); });
    }

    for (auto& [x, count] : picks) {
        SelectedDesign d;
        d.x = x;
        d.replicates = count;
        d.existing = evaluated.find(x).has_value();
        sel.designs.push_back(std::move(d));
    }
    sel.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sel;
}

}  // namespace qhsri
