#include "qhsri/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qhsri/random.hpp"

namespace qhsri {

namespace {

constexpr double kPi = std::numbers::pi;

void expect_dim(const Eigen::VectorXd& x, Eigen::Index d, const char* name) {
    if (x.size() != d)
        throw std::invalid_argument(std::string(name) + ": expected " + std::to_string(d) + " inputs, got " +
                                    std::to_string(x.size()));
}

double hartmann(const Eigen::VectorXd& x, const double* alpha, const double* a, const double* p, int d) {
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
        double inner = 0.0;
        for (int j = 0; j < d; ++j) {
            const double diff = x[j] - p[i * d + j];
            inner += a[i * d + j] * diff * diff;
        }
        total += alpha[i] * std::exp(-inner);
    }
    return -total;
}

Problem scalar_problem(std::string name, Eigen::VectorXd lower, Eigen::VectorXd upper,
                       std::function<double(const Eigen::VectorXd&)> f) {
    Problem prob;
    prob.name = std::move(name);
    prob.dim = lower.size();
    prob.objectives = 1;
    prob.lower = std::move(lower);
    prob.upper = std::move(upper);
    const Eigen::VectorXd lo = prob.lower, span = prob.upper - prob.lower;
    prob.eval = [f = std::move(f), lo, span](const Eigen::VectorXd& u) {
        return Eigen::VectorXd::Constant(1, f(lo + span.cwiseProduct(u)));
    };
    return prob;
}

}  // namespace

double branin(const Eigen::VectorXd& x) {
    expect_dim(x, 2, "branin");
    const double b = 5.1 / (4.0 * kPi * kPi), c = 5.0 / kPi, t = 1.0 / (8.0 * kPi);
    const double u = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
    return u * u + 10.0 * (1.0 - t) * std::cos(x[0]) + 10.0;
}

double hartmann3(const Eigen::VectorXd& x) {
    expect_dim(x, 3, "hartmann3");
    static constexpr double alpha[4] = {1.0, 1.2, 3.0, 3.2};
    static constexpr double a[12] = {3.0, 10, 30, 0.1, 10, 35, 3.0, 10, 30, 0.1, 10, 35};
    static constexpr double p[12] = {0.3689, 0.1170, 0.2673, 0.4699, 0.4387, 0.7470,
                                     0.1091, 0.8732, 0.5547, 0.0381, 0.5743, 0.8828};
    return hartmann(x, alpha, a, p, 3);
}

double hartmann6(const Eigen::VectorXd& x) {
    expect_dim(x, 6, "hartmann6");
    static constexpr double alpha[4] = {1.0, 1.2, 3.0, 3.2};
    static constexpr double a[24] = {10,   3,   17,   3.5, 1.7, 8,  0.05, 10, 17, 0.1, 8,   14,
                                     3,    3.5, 1.7,  10,  17,  8,  17,   8,  0.05, 10, 0.1, 14};
    static constexpr double p[24] = {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886, 0.2329, 0.4135,
                                     0.8307, 0.3736, 0.1004, 0.9991, 0.2348, 0.1451, 0.3522, 0.2883,
                                     0.3047, 0.6650, 0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381};
    return hartmann(x, alpha, a, p, 6);
}

Eigen::VectorXd p1(const Eigen::VectorXd& x) {
    expect_dim(x, 2, "p1");
    const double b1 = 15.0 * x[0] - 5.0, b2 = 15.0 * x[1];
    const double t = 1.0 / (8.0 * kPi);
    const double w = b2 - 5.1 * (b1 / (2.0 * kPi)) * (b1 / (2.0 * kPi)) - 6.0;
    Eigen::VectorXd out(2);
    out[0] = branin(Eigen::Vector2d(b1, b2));
    out[1] = -std::sqrt((10.5 - b1) * (b1 + 5.5) * (b2 + 0.5)) - w * w / 30.0 -
             ((1.0 - t) * std::cos(b1) + 1.0) / 3.0;
    return out;
}

Eigen::VectorXd p2(const Eigen::VectorXd& x) {
    expect_dim(x, 2, "p2");
    const double a1 = 0.5 * std::sin(1.0) - 2.0 * std::cos(1.0) + std::sin(2.0) - 1.5 * std::cos(2.0);
    const double a2 = 1.5 * std::sin(1.0) - std::cos(1.0) + 2.0 * std::sin(2.0) - 0.5 * std::cos(2.0);
    const double b1 = 0.5 * std::sin(x[0]) - 2.0 * std::cos(x[0]) + std::sin(x[1]) - 1.5 * std::cos(x[1]);
    const double b2 = 1.5 * std::sin(x[0]) - std::cos(x[0]) + 2.0 * std::sin(x[1]) - 0.5 * std::cos(x[1]);
    Eigen::VectorXd out(2);
    out[0] = 1.0 + (a1 - b1) * (a1 - b1) + (a2 - b2) * (a2 - b2);
    out[1] = (x[0] + 3.0) * (x[0] + 3.0) + (x[1] + 1.0) * (x[1] + 1.0);
    return out;
}

Eigen::VectorXd Problem::to_native(const Eigen::VectorXd& unit) const {
    return lower + (upper - lower).cwiseProduct(unit);
}

Eigen::VectorXd Problem::observe(const Eigen::VectorXd& x, std::uint64_t seed, std::uint64_t replicate) const {
    Eigen::VectorXd y = eval(x);
    if (!noise_sd) return y;
    const Eigen::VectorXd sd = noise_sd(x);
    Rng rng = make_stream(seed, {hash_point(x), replicate});
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sd[i] * standard_normal(rng);
    return y;
}

Problem branin_problem() {
    Problem prob = scalar_problem("branin", Eigen::Vector2d(-5.0, 0.0), Eigen::Vector2d(10.0, 15.0),
                                  [](const Eigen::VectorXd& x) { return branin(x); });
    prob.optimum = kBraninMinimum;
    prob.minimizer = Eigen::VectorXd(Eigen::Vector2d((kPi + 5.0) / 15.0, 2.275 / 15.0));
    return prob;
}

Problem hartmann3_problem() {
    Problem prob = scalar_problem("hartmann3", Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3),
                                  [](const Eigen::VectorXd& x) { return hartmann3(x); });
    prob.optimum = kHartmann3Minimum;
    prob.minimizer = Eigen::VectorXd(Eigen::Vector3d(0.114614, 0.555649, 0.852547));
    return prob;
}

Problem hartmann6_problem() {
    Problem prob = scalar_problem("hartmann6", Eigen::VectorXd::Zero(6), Eigen::VectorXd::Ones(6),
                                  [](const Eigen::VectorXd& x) { return hartmann6(x); });
    prob.optimum = kHartmann6Minimum;
    Eigen::VectorXd m(6);
    m << 0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573;
    prob.minimizer = m;
    return prob;
}

Problem p1_problem() {
    Problem prob;
    prob.name = "p1";
    prob.dim = 2;
    prob.objectives = 2;
    prob.lower = Eigen::VectorXd::Zero(2);
    prob.upper = Eigen::VectorXd::Ones(2);
    prob.eval = [](const Eigen::VectorXd& u) { return p1(u); };
    return prob;
}

Problem p2_problem() {
    Problem prob;
    prob.name = "p2";
    prob.dim = 2;
    prob.objectives = 2;
    prob.lower = Eigen::VectorXd::Constant(2, -kPi);
    prob.upper = Eigen::VectorXd::Constant(2, kPi);
    const Eigen::VectorXd lo = prob.lower, span = prob.upper - prob.lower;
    prob.eval = [lo, span](const Eigen::VectorXd& u) { return p2(lo + span.cwiseProduct(u)); };
    return prob;
}

Problem repeat_problem(const Problem& base, int k) {
    if (k < 1) throw std::invalid_argument("repeat_problem: k must be >= 1");
    if (k == 1) return base;
    Problem prob = base;
    const Eigen::Index d = base.dim;
    prob.name = base.name + "-rep" + std::to_string(k);
    prob.dim = d * k;
    prob.lower = base.lower.replicate(k, 1);
    prob.upper = base.upper.replicate(k, 1);
    auto block_mean = [d, k](const Problem::VectorFn& f) {
        return [f, d, k](const Eigen::VectorXd& u) {
            Eigen::VectorXd acc = f(u.segment(0, d));
            for (int b = 1; b < k; ++b) acc += f(u.segment(b * d, d));
            return Eigen::VectorXd(acc / static_cast<double>(k));
        };
    };
    prob.eval = block_mean(base.eval);
    if (base.noise_sd) prob.noise_sd = block_mean(base.noise_sd);
    if (base.minimizer) prob.minimizer = base.minimizer->replicate(k, 1);
    return prob;
}

Problem with_noise(const Problem& base, const Problem& sd_source, double factor) {
    if (sd_source.dim != base.dim)
        throw std::invalid_argument("with_noise: noise source " + sd_source.name + " has dimension " +
                                    std::to_string(sd_source.dim) + ", expected " + std::to_string(base.dim));
    if (!(factor >= 0.0)) throw std::invalid_argument("with_noise: factor must be >= 0");
    Problem prob = base;
    prob.name = base.name + "-noisy";
    const auto src = sd_source.eval;
    const Eigen::Index p = base.objectives;
    if (p > 1 && sd_source.objectives == p) {
        prob.noise_sd = [src, factor](const Eigen::VectorXd& x) {
            return Eigen::VectorXd(factor * src(x).cwiseAbs());
        };
    } else {
        prob.noise_sd = [src, factor, p](const Eigen::VectorXd& x) {
            return Eigen::VectorXd::Constant(p, factor * std::abs(src(x)[0]));
        };
    }
    return prob;
}

Problem make_problem(const std::string& id) {
    const auto pos = id.rfind("-rep");
    if (pos != std::string::npos) {
        const std::string tail = id.substr(pos + 4);
        int k = 0;
        try {
            std::size_t used = 0;
            k = std::stoi(tail, &used);
            if (used != tail.size()) k = 0;
        } catch (const std::exception&) {
            k = 0;
        }
        if (k < 1) throw std::invalid_argument("unknown problem id '" + id + "'");
        return repeat_problem(make_problem(id.substr(0, pos)), k);
    }
    if (id == "branin") return branin_problem();
    if (id == "hartmann3") return hartmann3_problem();
    if (id == "hartmann6") return hartmann6_problem();
    if (id == "p1") return p1_problem();
    if (id == "p2") return p2_problem();
    throw std::invalid_argument("unknown problem id '" + id +
                                "' (known: branin, hartmann3, hartmann6, p1, p2, <id>-rep<k>)");
}

std::string default_noise_source(const std::string& id) {
    std::string base = id, suffix;
    const auto pos = id.rfind("-rep");
    if (pos != std::string::npos) {
        base = id.substr(0, pos);
        suffix = id.substr(pos);
    }
    if (base == "branin") return "p1" + suffix;
    if (base == "hartmann6") {
        const int k = suffix.empty() ? 1 : std::stoi(suffix.substr(4));
        return "hartmann3-rep" + std::to_string(2 * k);
    }
    if (base == "p1") return "p2" + suffix;
    if (base == "p2") return "p1" + suffix;
    return "";
}

}  // namespace qhsri
