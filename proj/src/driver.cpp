#include "qhsri/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "qhsri/acquisition.hpp"
#include "qhsri/design.hpp"
#include "qhsri/parallel.hpp"
#include "qhsri/pareto.hpp"
#include "qhsri/random.hpp"

namespace qhsri {

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Qhsri: return "qhsri";
        case Strategy::Random: return "random";
        case Strategy::McQei: return "mc_qei";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "qhsri") return Strategy::Qhsri;
    if (name == "random") return Strategy::Random;
    if (name == "mc_qei" || name == "qei") return Strategy::McQei;
    throw std::invalid_argument("unknown strategy '" + name + "' (expected qhsri, random or mc_qei)");
}

std::string canonical_string(const ExperimentConfig& c) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "problem=" << c.problem << '\n'
       << "noise.enabled=" << c.noise.enabled << '\n'
       << "noise.source=" << c.noise.source << '\n'
       << "noise.factor=" << c.noise.factor << '\n'
       << "noise.known=" << c.noise.known << '\n'
       << "strategy=" << to_string(c.strategy) << '\n'
       << "n_init=" << c.n_init << '\n'
       << "q=" << c.q << '\n'
       << "n_max=" << c.n_max << '\n'
       << "macro_runs=" << c.macro_runs << '\n'
       << "seed=" << c.seed << '\n'
       << "kernel=" << to_string(c.kernel) << '\n'
       << "gp.restarts=" << c.fit_restarts << '\n'
       << "gp.warm_restarts=" << c.warm_restarts << '\n'
       << "qhsri.n_uniform=" << c.qhsri.search.n_uniform << '\n'
       << "qhsri.nsga_pop=" << c.qhsri.search.nsga_pop << '\n'
       << "qhsri.nsga_gens=" << c.qhsri.search.nsga_gens << '\n'
       << "qhsri.margin=" << c.qhsri.margin << '\n'
       << "qhsri.pi_min=" << c.qhsri.pi.pi_min << '\n'
       << "qhsri.keep_max=" << c.qhsri.pi.keep_max << '\n'
       << "qhsri.pnd_min=" << c.qhsri.pnd_min << '\n'
       << "qhsri.include_evaluated=" << c.qhsri.include_evaluated << '\n'
       << "mc_qei.samples=" << c.mc_qei.n_samples << '\n'
       << "mc_qei.n_uniform=" << c.mc_qei.n_uniform << '\n'
       << "mc_qei.local_evaluations=" << c.mc_qei.local_evaluations << '\n'
       << "mc_qei.swarm_size=" << c.mc_qei.swarm_size << '\n'
       << "mc_qei.swarm_iterations=" << c.mc_qei.swarm_iterations << '\n'
       << "reference.pop=" << c.reference_pop << '\n'
       << "reference.generations=" << c.reference_generations << '\n';
    return os.str();
}

std::string config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_string(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

Problem build_problem(const ExperimentConfig& config) {
    Problem base = make_problem(config.problem);
    if (!config.noise.enabled) return base;
    std::string source = config.noise.source.empty() ? default_noise_source(config.problem) : config.noise.source;
    if (source.empty())
        throw std::invalid_argument("noise.source: no default noise source for problem '" + config.problem + "'");
    return with_noise(base, make_problem(source), config.noise.factor);
}

void validate(const ExperimentConfig& c, const Problem& problem) {
    auto fail = [](const std::string& field, const std::string& msg) {
        throw std::invalid_argument(field + ": " + msg);
    };
    if (c.n_init < problem.dim + 2)
        fail("n_init", "must be at least d+2 = " + std::to_string(problem.dim + 2) + " for problem " + problem.name);
    if (c.q < 1) fail("q", "must be >= 1");
    if (c.n_max < c.n_init + c.q) fail("n_max", "must be >= n_init + q = " + std::to_string(c.n_init + c.q));
    if (c.macro_runs < 1) fail("macro_runs", "must be >= 1");
    if (c.threads < 1) fail("threads", "must be >= 1");
    if (c.fit_restarts < 1) fail("gp.restarts", "must be >= 1");
    if (c.warm_restarts < 1) fail("gp.warm_restarts", "must be >= 1");
    if (c.strategy == Strategy::McQei && problem.objectives != 1)
        fail("strategy", "mc_qei supports single-objective problems only");
    if (problem.objectives > 3) fail("problem", "at most three objectives are supported");
    if (problem.objectives == 1 && !problem.optimum)
        fail("problem", "single-objective problem without a known optimum");
    if (c.qhsri.search.nsga_pop < 4 || c.qhsri.search.nsga_pop % 2 != 0)
        fail("qhsri.nsga_pop", "must be even and >= 4");
    if (c.qhsri.search.nsga_gens < 0) fail("qhsri.nsga_gens", "must be >= 0");
    if (c.qhsri.search.n_uniform < 0) fail("qhsri.n_uniform", "must be >= 0");
    if (!(c.qhsri.margin > 0.0)) fail("qhsri.margin", "must be > 0");
    if (!(c.qhsri.pi.pi_min >= 0.0 && c.qhsri.pi.pi_min < 1.0)) fail("qhsri.pi_min", "must be in [0,1)");
    if (!(c.qhsri.pnd_min >= 0.0 && c.qhsri.pnd_min < 1.0)) fail("qhsri.pnd_min", "must be in [0,1)");
    if (c.qhsri.pi.keep_max < 1) fail("qhsri.keep_max", "must be >= 1");
    if (c.mc_qei.n_samples < 2) fail("mc_qei.samples", "must be >= 2");
    if (c.mc_qei.n_uniform < 0) fail("mc_qei.n_uniform", "must be >= 0");
    if (c.mc_qei.local_evaluations < 0) fail("mc_qei.local_evaluations", "must be >= 0");
    if (c.mc_qei.swarm_size < 0) fail("mc_qei.swarm_size", "must be >= 0");
    if (c.mc_qei.swarm_iterations < 0) fail("mc_qei.swarm_iterations", "must be >= 0");
    if (c.reference_pop < 4 || c.reference_pop % 2 != 0) fail("reference.pop", "must be even and >= 4");
    if (c.reference_generations < 1) fail("reference.generations", "must be >= 1");
    if (c.noise.enabled && !(c.noise.factor >= 0.0)) fail("noise.factor", "must be >= 0");
}

std::string ExperimentTrace::metric_name() const { return objectives > 1 ? "hv_diff" : "gap"; }

std::string ExperimentTrace::estimated_metric_name() const {
    return objectives > 1 ? "estimated_hv_diff" : "estimated_gap";
}

Eigen::MatrixXd initial_design(Eigen::Index d, int n_init, std::uint64_t seed) {
    Rng rng = make_stream(seed, {0x696e6974u});
    return maximin_latin_hypercube(n_init, d, rng);
}

const ReferenceFront& reference_front(const Problem& problem, int pop_size, int generations) {
    static std::mutex mutex;
    static std::map<std::string, std::unique_ptr<ReferenceFront>> cache;
    const std::string key = problem.name + "|" + std::to_string(pop_size) + "|" + std::to_string(generations);
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return *it->second;

    const auto eval = problem.eval;
    const Eigen::Index p = problem.objectives;
    BatchObjective objective = [eval, p](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd out(x.rows(), p);
        for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = eval(x.row(i).transpose()).transpose();
        return out;
    };
    Nsga2Options opt;
    opt.pop_size = pop_size;
    opt.generations = generations;
    opt.seed = 0x5245465fULL;
    const FrontArchive archive = nsga2(objective, problem.dim, opt);

    auto ref = std::make_unique<ReferenceFront>();
    const auto keep = non_dominated_filter(archive.objectives);
    ref->front.resize(static_cast<Eigen::Index>(keep.size()), p);
    for (std::size_t k = 0; k < keep.size(); ++k)
        ref->front.row(static_cast<Eigen::Index>(k)) = archive.objectives.row(static_cast<Eigen::Index>(keep[k]));
    const Eigen::VectorXd ideal = ref->front.colwise().minCoeff().transpose();
    const Eigen::VectorXd nadir = ref->front.colwise().maxCoeff().transpose();
    ref->ref_point = nadir + 0.2 * (nadir - ideal);
    ref->hypervolume = hypervolume(ref->front, ref->ref_point);
    return *cache.emplace(key, std::move(ref)).first->second;
}

std::vector<double> optimality_gap(const ExperimentTrace& trace, double reference) {
    std::vector<double> gaps;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rec : trace.records) {
        for (const auto& e : rec.batch) best = std::min(best, e.truth[0]);
        gaps.push_back(best - reference);
    }
    return gaps;
}

double hypervolume_difference(const Eigen::MatrixXd& values, const ReferenceFront& reference) {
    if (values.rows() == 0) return reference.hypervolume;
    const auto keep = non_dominated_filter(values);
    Eigen::MatrixXd front(static_cast<Eigen::Index>(keep.size()), values.cols());
    for (std::size_t k = 0; k < keep.size(); ++k)
        front.row(static_cast<Eigen::Index>(k)) = values.row(static_cast<Eigen::Index>(keep[k]));
    return reference.hypervolume - hypervolume(front, reference.ref_point);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Evaluation state shared by the loop: one DesignSet per objective plus the
// noiseless values of each unique design.
struct RunState {
    const Problem& problem;
    std::uint64_t seed;
    int threads;
    std::vector<DesignSet> designs;
    std::vector<Eigen::VectorXd> truths;

    RunState(const Problem& prob, std::uint64_t s, int t)
        : problem(prob), seed(s), threads(t),
          designs(static_cast<std::size_t>(prob.objectives), DesignSet(prob.dim)) {}

    // Evaluates every entry (in parallel) and commits results in entry order.
    void evaluate(std::vector<BatchEntry>& entries) {
        struct Task {
            std::size_t entry;
            std::uint64_t replicate;
        };
        std::vector<Task> tasks;
        for (std::size_t e = 0; e < entries.size(); ++e) {
            const auto found = designs.front().find(entries[e].x);
            const int prior = found ? designs.front().rep_count(*found) : 0;
            for (int r = 0; r < entries[e].replicates; ++r)
                tasks.push_back({e, static_cast<std::uint64_t>(prior + r)});
            entries[e].y.resize(entries[e].replicates, problem.objectives);
        }
        std::vector<Eigen::VectorXd> values(tasks.size());
        parallel_for(tasks.size(), threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t t = begin; t < end; ++t)
                values[t] = problem.observe(entries[tasks[t].entry].x, seed, tasks[t].replicate);
        });
        parallel_for(entries.size(), threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t e = begin; e < end; ++e) entries[e].truth = problem.eval(entries[e].x);
        });
        std::vector<int> filled(entries.size(), 0);
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            BatchEntry& entry = entries[tasks[t].entry];
            entry.y.row(filled[tasks[t].entry]++) = values[t].transpose();
            std::size_t idx = 0;
            for (std::size_t i = 0; i < designs.size(); ++i)
                idx = designs[i].add(entry.x, values[t][static_cast<Eigen::Index>(i)]);
            if (idx == truths.size()) truths.push_back(entry.truth);
        }
    }

    Eigen::MatrixXd truth_matrix(const std::vector<std::size_t>& rows) const {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), problem.objectives);
        for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = truths[rows[k]].transpose();
        return out;
    }
};

std::vector<BatchEntry> entries_from_rows(const Eigen::MatrixXd& rows) {
    std::vector<BatchEntry> entries;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        BatchEntry e;
        e.x = rows.row(i).transpose();
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace

ExperimentTrace run_experiment(const ExperimentConfig& config, int macro_run, const ProgressCallback& progress) {
    return run_experiment(config, build_problem(config), macro_run, progress);
}

ExperimentTrace run_experiment(const ExperimentConfig& config, const Problem& problem, int macro_run,
                               const ProgressCallback& progress) {
    validate(config, problem);
    const bool noisy = problem.noisy();
    const Eigen::Index p = problem.objectives, d = problem.dim;

    ExperimentTrace trace;
    trace.problem = config.problem;
    trace.strategy = config.strategy;
    trace.noisy = noisy;
    trace.objectives = p;
    trace.dim = d;
    trace.q = config.q;
    trace.macro_run = macro_run;
    trace.seed = stream_seed(config.seed, {static_cast<std::uint64_t>(macro_run)});
    trace.config_hash = config_hash(config);
    const std::uint64_t run_seed = trace.seed;

    const ReferenceFront* reference =
        p > 1 ? &reference_front(problem, config.reference_pop, config.reference_generations) : nullptr;
    const bool needs_model = config.strategy != Strategy::Random || noisy;

    NoiseMode noise_modes[3];
    for (Eigen::Index i = 0; i < p; ++i) {
        if (!noisy) {
            noise_modes[i] = NoiseMode::noiseless();
        } else if (!config.noise.known) {
            noise_modes[i] = NoiseMode::estimate_nugget();
        } else {
            const auto sd = problem.noise_sd;
            noise_modes[i] = NoiseMode::known([sd, i](const Eigen::VectorXd& x) {
                const double s = sd(x)[i];
                return s * s;
            });
        }
    }

    RunState state(problem, stream_seed(run_seed, {0x6576616cu}), config.threads);
    std::vector<GpModel> models;
    std::vector<std::optional<KernelSpec>> previous(static_cast<std::size_t>(p));

    auto fit_models = [&](int iteration) {
        std::vector<GpModel> fitted;
        for (Eigen::Index i = 0; i < p; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            FitOptions opt;
            opt.seed = stream_seed(run_seed, {static_cast<std::uint64_t>(iteration), ui, 0x666974u});
            opt.restarts = config.fit_restarts;
            if (previous[ui]) {
                opt.warm_start = previous[ui];
                opt.restarts = config.warm_restarts - 1;
            }
            std::optional<GpModel> model;
            try {
                model = fit(state.designs[ui], config.kernel, noise_modes[i], opt);
            } catch (const FitError&) {
                FitOptions retry = opt;
                retry.warm_start.reset();
                retry.restarts = config.fit_restarts;
                retry.nugget_floor = 1e-6;
                model = fit(state.designs[ui], config.kernel, NoiseMode::estimate_nugget(), retry);
            }
            previous[ui] = model->kernel();
            fitted.push_back(std::move(*model));
        }
        models = std::move(fitted);
    };

    auto compute_metrics = [&](IterationRecord& rec) {
        std::vector<std::size_t> all(state.truths.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        const Eigen::MatrixXd truth = state.truth_matrix(all);
        if (p == 1) {
            rec.metric = truth.col(0).minCoeff() - *problem.optimum;
        } else {
            rec.metric = hypervolume_difference(truth, *reference);
        }
        if (!noisy) return;
        Eigen::MatrixXd means(static_cast<Eigen::Index>(all.size()), p);
        const Eigen::MatrixXd pts = state.designs.front().points_matrix();
        for (Eigen::Index i = 0; i < p; ++i) means.col(i) = models[static_cast<std::size_t>(i)].predict(pts).mean;
        if (p == 1) {
            Eigen::Index best = 0;
            means.col(0).minCoeff(&best);
            rec.estimated_metric = truth(best, 0) - *problem.optimum;
        } else {
            rec.estimated_metric = hypervolume_difference(state.truth_matrix(non_dominated_filter(means)), *reference);
        }
    };

    auto finish_record = [&](IterationRecord& rec, int iteration) {
        if (needs_model) {
            const auto t0 = Clock::now();
            fit_models(iteration);
            rec.fit_seconds = seconds_since(t0);
        }
        compute_metrics(rec);
        trace.records.push_back(rec);
        if (progress) progress(trace, trace.records.back());
    };

    int n = 0;
    int iteration = 0;
    try {
        IterationRecord rec;
        rec.batch = entries_from_rows(initial_design(d, config.n_init, stream_seed(run_seed, {0x64657369u})));
        state.evaluate(rec.batch);
        n = config.n_init;
        rec.n = n;
        finish_record(rec, 0);

        while (n + config.q <= config.n_max) {
            ++iteration;
            const std::uint64_t select_seed = stream_seed(run_seed, {static_cast<std::uint64_t>(iteration), 0x73656cu});
            IterationRecord next;
            next.iteration = iteration;
            const auto t0 = Clock::now();
            switch (config.strategy) {
                case Strategy::Qhsri: {
                    QhsriConfig qc = config.qhsri;
                    qc.search.threads = config.threads;
                    const Selection sel = qhsri_select(models, config.q, noisy, qc, select_seed);
                    next.selection_seconds = sel.seconds;
                    for (const auto& s : sel.designs) {
                        BatchEntry e;
                        e.x = s.x;
                        e.replicates = s.replicates;
                        e.existing = s.existing;
                        next.batch.push_back(std::move(e));
                    }
                    break;
                }
                case Strategy::Random: {
                    Rng rng(select_seed);
                    next.batch = entries_from_rows(uniform_points(config.q, d, rng));
                    next.selection_seconds = seconds_since(t0);
                    break;
                }
                case Strategy::McQei: {
                    McQeiBatchOptions mo = config.mc_qei;
                    mo.seed = select_seed;
                    const double threshold = improvement_threshold(models.front(), noisy);
                    next.batch = entries_from_rows(mc_qei_batch(models.front(), config.q, threshold, mo));
                    next.selection_seconds = seconds_since(t0);
                    break;
                }
            }
            int added = 0;
            for (auto& e : next.batch) {
                e.existing = state.designs.front().find(e.x).has_value();
                added += e.replicates;
            }
            if (added == 0) break;
            state.evaluate(next.batch);
            n += added;
            next.n = n;
            finish_record(next, iteration);
        }
    } catch (const std::exception& e) {
        trace.valid = false;
        trace.error = "iteration " + std::to_string(iteration) + ": " + e.what();
    }
    return trace;
}

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary aggregate(const std::vector<ExperimentTrace>& traces) {
    Summary out;
    std::map<std::string, std::vector<const ExperimentTrace*>> groups;
    for (const auto& t : traces) groups[to_string(t.strategy)].push_back(&t);

    for (const auto& [group, members] : groups) {
        const std::string metric = members.front()->metric_name();
        const std::string estimated = members.front()->estimated_metric_name();
        std::map<int, std::vector<double>> values, est_values;
        std::map<int, int> ns;
        double sel_total = 0.0;
        int sel_count = 0;
        for (const ExperimentTrace* t : members) {
            for (const auto& r : t->records) {
                values[r.iteration].push_back(r.metric);
                if (r.estimated_metric) est_values[r.iteration].push_back(*r.estimated_metric);
                ns.emplace(r.iteration, r.n);
                if (r.iteration > 0) {
                    sel_total += r.selection_seconds;
                    ++sel_count;
                }
            }
        }
        auto emit = [&](const std::string& name, const std::map<int, std::vector<double>>& table) {
            for (const auto& [it, v] : table) {
                SummaryRow row;
                row.group = group;
                row.metric = name;
                row.iteration = it;
                row.n = ns[it];
                row.median = quantile(v, 0.5);
                row.q05 = quantile(v, 0.05);
                row.q95 = quantile(v, 0.95);
                row.count = static_cast<int>(v.size());
                out.rows.push_back(row);
            }
        };
        emit(metric, values);
        emit(estimated, est_values);
        TimingRow timing;
        timing.group = group;
        timing.iterations = sel_count;
        timing.runs = static_cast<int>(members.size());
        timing.mean_selection_seconds = sel_count > 0 ? sel_total / sel_count : 0.0;
        out.timing.push_back(timing);
    }
    return out;
}

}  // namespace qhsri
