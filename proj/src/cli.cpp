#include "qhsri/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "qhsri/config.hpp"
#include "qhsri/csv.hpp"
#include "qhsri/driver.hpp"
#include "qhsri/gp.hpp"
#include "qhsri/portfolio.hpp"
#include "qhsri/random.hpp"

namespace fs = std::filesystem;

namespace qhsri {

namespace {

std::string run_file(const std::string& prefix, const ExperimentTrace& t) {
    std::ostringstream os;
    os << prefix << '_' << to_string(t.strategy) << "_run" << std::setw(3) << std::setfill('0') << t.macro_run
       << ".csv";
    return os.str();
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    fn(f);
    if (!f) throw std::runtime_error("error writing " + path.string());
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::vector<std::string>& overrides,
            std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
    ExperimentConfig config;
    try {
        std::vector<std::string> all = overrides;
        if (seed) all.push_back("seed=" + std::to_string(*seed));
        config = load_config(config_path, all);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "resolved_config.txt", [&](std::ostream& f) { f << canonical_string(config); });
        const Problem problem = build_problem(config);
        std::vector<ExperimentTrace> traces;
        for (int m = 0; m < config.macro_runs; ++m) {
            auto progress = [&](const ExperimentTrace& t, const IterationRecord& r) {
                out << "run " << t.macro_run << " iteration " << r.iteration << " n=" << r.n << ' ' << t.metric_name()
                    << '=' << format_number(r.metric);
                if (r.estimated_metric) out << ' ' << t.estimated_metric_name() << '=' << format_number(*r.estimated_metric);
                out << " selection_seconds=" << format_number(r.selection_seconds) << '\n';
                out.flush();
            };
            ExperimentTrace trace = run_experiment(config, problem, m, progress);
            const fs::path trace_path = fs::path(out_dir) / run_file("trace", trace);
            write_file(trace_path, [&](std::ostream& f) { write_trace_csv(f, trace); });
            write_file(fs::path(out_dir) / run_file("batches", trace),
                       [&](std::ostream& f) { write_batches_csv(f, trace); });
            if (!trace.valid) {
                err << "error: run " << m << " failed (" << trace.error << "); partial trace: " << trace_path.string()
                    << '\n';
                return kExitFailure;
            }
            traces.push_back(std::move(trace));
        }
        const Summary summary = aggregate(traces);
        write_file(fs::path(out_dir) / "summary.csv", [&](std::ostream& f) { write_summary_csv(f, summary); });
        write_file(fs::path(out_dir) / "summary_timing.csv", [&](std::ostream& f) { write_timing_csv(f, summary); });
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::pair<double, double>> parse_bounds(const std::string& text, Eigen::Index d) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("--bounds: expected lo:hi, got '" + item + "'");
        const double lo = parse_number(item.substr(0, colon), "--bounds");
        const double hi = parse_number(item.substr(colon + 1), "--bounds");
        if (!(hi > lo)) throw UsageError("--bounds: upper bound must exceed lower bound in '" + item + "'");
        out.emplace_back(lo, hi);
    }
    if (static_cast<Eigen::Index>(out.size()) != d)
        throw UsageError("--bounds: expected " + std::to_string(d) + " ranges, got " + std::to_string(out.size()));
    return out;
}

}  // namespace

int cmd_suggest(const SuggestOptions& options, std::ostream& out, std::ostream& err) {
    try {
        if (options.q < 1) throw UsageError("--q must be >= 1");
        CsvTable table;
        try {
            table = read_csv_file(options.data_path);
        } catch (const CsvError& e) {
            throw UsageError(e.what());
        }
        std::vector<int> xcols, ycols;
        for (int k = 1;; ++k) {
            const int c = table.column("x" + std::to_string(k));
            if (c < 0) break;
            xcols.push_back(c);
        }
        for (int k = 1;; ++k) {
            const int c = table.column("y" + std::to_string(k));
            if (c < 0) break;
            ycols.push_back(c);
        }
        if (xcols.empty() || ycols.empty())
            throw UsageError(options.data_path + ": header must name columns x1..xd and y1..yp");
        if (ycols.size() > 3) throw UsageError(options.data_path + ": at most three objectives are supported");
        const auto d = static_cast<Eigen::Index>(xcols.size());
        const auto p = static_cast<Eigen::Index>(ycols.size());

        std::vector<std::pair<double, double>> bounds(static_cast<std::size_t>(d), {0.0, 1.0});
        if (!options.bounds.empty()) bounds = parse_bounds(options.bounds, d);

        std::vector<DesignSet> designs(static_cast<std::size_t>(p), DesignSet(d));
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const std::string where = options.data_path + ": row " + std::to_string(table.lines[r]);
            Eigen::VectorXd x(d);
            for (Eigen::Index j = 0; j < d; ++j) {
                double v;
                try {
                    v = parse_number(table.rows[r][static_cast<std::size_t>(xcols[static_cast<std::size_t>(j)])], where);
                } catch (const CsvError& e) {
                    throw UsageError(e.what());
                }
                const auto [lo, hi] = bounds[static_cast<std::size_t>(j)];
                x[j] = (v - lo) / (hi - lo);
                if (!(x[j] >= -1e-12 && x[j] <= 1.0 + 1e-12))
                    throw UsageError(where + ": x" + std::to_string(j + 1) + " outside the design domain");
                x[j] = std::clamp(x[j], 0.0, 1.0);
            }
            for (Eigen::Index i = 0; i < p; ++i) {
                double y;
                try {
                    y = parse_number(table.rows[r][static_cast<std::size_t>(ycols[static_cast<std::size_t>(i)])], where);
                } catch (const CsvError& e) {
                    throw UsageError(e.what());
                }
                if (!std::isfinite(y)) throw UsageError(where + ": non-finite y" + std::to_string(i + 1));
                designs[static_cast<std::size_t>(i)].add(x, y);
            }
        }
        const auto unique = static_cast<Eigen::Index>(designs.front().size());
        if (unique < d + 2)
            throw UsageError("need at least d+2 = " + std::to_string(d + 2) + " unique designs, got " +
                             std::to_string(unique));

        std::vector<GpModel> models;
        for (Eigen::Index i = 0; i < p; ++i) {
            const NoiseMode noise = options.noisy ? NoiseMode::estimate_nugget() : NoiseMode::noiseless();
            FitOptions fo;
            fo.seed = stream_seed(options.seed, {static_cast<std::uint64_t>(i), 0x666974u});
            try {
                models.push_back(fit(designs[static_cast<std::size_t>(i)], KernelFamily::Matern52, noise, fo));
            } catch (const FitError&) {
                fo.nugget_floor = 1e-6;
                models.push_back(fit(designs[static_cast<std::size_t>(i)], KernelFamily::Matern52,
                                     NoiseMode::estimate_nugget(), fo));
            }
        }
        QhsriConfig qc;
        qc.search.threads = options.threads;
        const Selection sel = qhsri_select(models, options.q, options.noisy, qc, options.seed);

        std::ostringstream buf;
        for (Eigen::Index j = 0; j < d; ++j) buf << 'x' << j + 1 << ',';
        buf << "replicates,existing\n";
        for (const auto& s : sel.designs) {
            for (Eigen::Index j = 0; j < d; ++j) {
                const auto [lo, hi] = bounds[static_cast<std::size_t>(j)];
                buf << format_number(lo + (hi - lo) * s.x[j]) << ',';
            }
            buf << s.replicates << ',' << (s.existing ? 1 : 0) << '\n';
        }
        if (options.out_path.empty()) {
            out << buf.str();
        } else {
            std::ofstream f(options.out_path);
            if (!(f << buf.str())) throw std::runtime_error("cannot write " + options.out_path);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_report(const std::string& trace_dir, const std::string& out_csv, std::ostream& out, std::ostream& err) {
    if (!fs::is_directory(trace_dir)) {
        err << "error: " << trace_dir << " is not a directory\n";
        return kExitUsage;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(trace_dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("trace", 0) == 0 && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<ExperimentTrace> traces;
    for (const auto& f : files) {
        try {
            traces.push_back(read_trace_csv(f.string()));
        } catch (const std::exception& e) {
            err << "warning: skipping " << f.string() << ": " << e.what() << '\n';
        }
    }
    if (traces.empty()) {
        err << "error: no valid trace files in " << trace_dir << '\n';
        return kExitUsage;
    }
    std::map<std::string, std::set<std::string>> hashes;
    for (const auto& t : traces) hashes[to_string(t.strategy)].insert(t.config_hash);
    for (const auto& [group, set] : hashes)
        if (set.size() > 1)
            err << "warning: strategy " << group << " mixes " << set.size() << " config hashes\n";

    try {
        const Summary summary = aggregate(traces);
        const fs::path path(out_csv);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        write_file(path, [&](std::ostream& f) { write_summary_csv(f, summary); });
        const fs::path timing = path.parent_path() / (path.stem().string() + "_timing.csv");
        write_file(timing, [&](std::ostream& f) { write_timing_csv(f, summary); });
        out << "aggregated " << traces.size() << " traces into " << summary.timing.size() << " group(s)\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace qhsri
