#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qhsri/cli.hpp"
#include "qhsri/config.hpp"
#include "qhsri/csv.hpp"
#include "qhsri/problems.hpp"
#include "qhsri/random.hpp"

using namespace qhsri;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / ("qhsri_" + std::string(info->test_suite_name()) + "_" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string file(const std::string& name, const std::string& content) const {
        std::ofstream(path_ / name) << content;
        return (path_ / name).string();
    }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const char* kSmallConfig = R"(problem: branin
strategy: random
n_init: 10
q: 10
n_max: 30
macro_runs: 2
seed: 3
)";

// Rows x1,x2,y1 from Branin at a Latin-like grid.
std::string branin_data(int n, bool replicate) {
    std::ostringstream os;
    os << "x1,x2,y1\n";
    const Problem b = branin_problem();
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d x((i + 0.5) / n, std::fmod(0.37 * i + 0.11, 1.0));
        os << format_number(x[0]) << ',' << format_number(x[1]) << ',' << format_number(b.eval(x)[0]) << '\n';
        if (replicate)
            os << format_number(x[0]) << ',' << format_number(x[1]) << ','
               << format_number(b.eval(x)[0] + 0.5 * std::sin(7.0 * i)) << '\n';
    }
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QHSRI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST(Config, ParsesSectionsAndDefaults) {
    const ExperimentConfig c = parse_config(R"(problem: p1
strategy: qhsri
n_init: 12
q: 5
n_max: 40
noise:
  enabled: true
  factor: 0.5
qhsri:
  nsga_pop: 100
  margin: 0.3
)");
    EXPECT_EQ(c.problem, "p1");
    EXPECT_EQ(c.strategy, Strategy::Qhsri);
    EXPECT_TRUE(c.noise.enabled);
    EXPECT_EQ(c.noise.factor, 0.5);
    EXPECT_EQ(c.qhsri.search.nsga_pop, 100);
    EXPECT_EQ(c.qhsri.margin, 0.3);
    EXPECT_EQ(c.fit_restarts, 5);
}

TEST(Config, UnknownKeyIsLineAnchored) {
    try {
        parse_config("problem: branin\nq: 5\nqq: 3\n", {}, "exp.yaml");
        FAIL();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("exp.yaml:3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("qq"), std::string::npos) << msg;
    }
    try {
        parse_config("problem: branin\nqhsri:\n  nsga_pops: 3\n", {}, "exp.yaml");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("exp.yaml:3"), std::string::npos) << e.what();
    }
}

TEST(Config, InvalidValuesAreLineAnchored) {
    try {
        parse_config("problem: branin\nn_init: 2\nq: 5\nn_max: 40\n", {}, "exp.yaml");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("exp.yaml:2"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("n_init"), std::string::npos) << e.what();
    }
    try {
        parse_config("problem: branin\nq: many\n", {}, "exp.yaml");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("exp.yaml:2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_config("problem: nowhere\n"), ConfigError);
    EXPECT_THROW(parse_config("strategy: simplex\n"), ConfigError);
}

TEST(Config, OverridesSupersedeFile) {
    const ExperimentConfig c = parse_config(kSmallConfig, {"q=5", "qhsri.margin=0.4", "noise.enabled=true"});
    EXPECT_EQ(c.q, 5);
    EXPECT_EQ(c.qhsri.margin, 0.4);
    EXPECT_TRUE(c.noise.enabled);
    EXPECT_THROW(parse_config(kSmallConfig, {"nope=1"}), ConfigError);
    EXPECT_THROW(parse_config(kSmallConfig, {"q"}), ConfigError);
    try {
        parse_config(kSmallConfig, {"q=0"});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("override"), std::string::npos) << e.what();
    }
}

TEST(Csv, NumbersRoundTrip) {
    Rng rng(61);
    for (int i = 0; i < 1000; ++i) {
        const double v = (uniform01(rng) - 0.5) * std::pow(10.0, 20 * uniform01(rng) - 10);
        EXPECT_EQ(parse_number(format_number(v), "t"), v);
    }
    EXPECT_THROW(parse_number("1.5x", "t"), CsvError);
    EXPECT_THROW(parse_number("", "t"), CsvError);
}

TEST(Csv, RaggedRowNamesLine) {
    std::istringstream in("# c\nx1,y1\n1,2\n3\n");
    try {
        read_csv(in, "d.csv");
        FAIL();
    } catch (const CsvError& e) {
        EXPECT_NE(std::string(e.what()).find("4"), std::string::npos) << e.what();
    }
}

TEST(Csv, TraceRoundTrip) {
    TempDir dir;
    ExperimentTrace t;
    t.problem = "branin";
    t.strategy = Strategy::Random;
    t.noisy = true;
    t.q = 10;
    t.seed = 9;
    t.dim = 2;
    t.config_hash = "0123456789abcdef";
    for (int i = 0; i < 3; ++i) {
        IterationRecord r;
        r.iteration = i;
        r.n = 10 * (i + 1);
        r.metric = 1.0 / (i + 3);
        r.estimated_metric = 2.0 / (i + 3);
        r.selection_seconds = 0.25;
        t.records.push_back(r);
    }
    {
        std::ofstream f(dir.path() / "trace.csv");
        write_trace_csv(f, t);
    }
    const ExperimentTrace back = read_trace_csv((dir.path() / "trace.csv").string());
    EXPECT_EQ(back.config_hash, t.config_hash);
    EXPECT_EQ(back.strategy, t.strategy);
    EXPECT_TRUE(back.noisy);
    ASSERT_EQ(back.records.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.records[i].metric, t.records[i].metric);
        EXPECT_EQ(back.records[i].estimated_metric, t.records[i].estimated_metric);
        EXPECT_EQ(back.records[i].n, t.records[i].n);
    }
    EXPECT_TRUE(is_wall_clock_column("selection_seconds"));
    EXPECT_FALSE(is_wall_clock_column("metric"));
}

TEST(CmdRun, WritesTracesAndSummary) {
    TempDir dir;
    const std::string cfg = dir.file("exp.yaml", kSmallConfig);
    std::ostringstream out, err;
    const auto outdir = dir.path() / "out";
    ASSERT_EQ(cmd_run(cfg, outdir.string(), {}, std::nullopt, out, err), kExitOk) << err.str();
    EXPECT_TRUE(fs::exists(outdir / "trace_random_run000.csv"));
    EXPECT_TRUE(fs::exists(outdir / "trace_random_run001.csv"));
    EXPECT_TRUE(fs::exists(outdir / "batches_random_run000.csv"));
    EXPECT_TRUE(fs::exists(outdir / "summary.csv"));
    EXPECT_TRUE(fs::exists(outdir / "summary_timing.csv"));
    EXPECT_NE(out.str().find("iteration 2 n=30"), std::string::npos) << out.str();
}

TEST(CmdRun, OverrideEchoedInHeader) {
    TempDir dir;
    const std::string cfg = dir.file("exp.yaml", kSmallConfig);
    std::ostringstream out, err;
    const auto outdir = dir.path() / "out";
    ASSERT_EQ(cmd_run(cfg, outdir.string(), {"q=5", "macro_runs=1"}, 11u, out, err), kExitOk) << err.str();
    const std::string trace = slurp(outdir / "trace_random_run000.csv");
    EXPECT_NE(trace.find("q=5"), std::string::npos) << trace;
    EXPECT_NE(trace.find("seed="), std::string::npos);
    EXPECT_NE(slurp(outdir / "resolved_config.txt").find("seed=11"), std::string::npos);
}

TEST(CmdRun, IdenticalRunsAreByteIdenticalApartFromWallClock) {
    TempDir dir;
    const std::string cfg = dir.file("exp.yaml", kSmallConfig);
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(cfg, (dir.path() / "a").string(), {"strategy=qhsri"}, std::nullopt, out, err), kExitOk);
    ASSERT_EQ(cmd_run(cfg, (dir.path() / "b").string(), {"strategy=qhsri", "threads=4"}, std::nullopt, out, err),
              kExitOk);
    for (const char* name : {"batches_qhsri_run000.csv", "batches_qhsri_run001.csv"})
        EXPECT_EQ(slurp(dir.path() / "a" / name), slurp(dir.path() / "b" / name)) << name;
    for (const char* name : {"trace_qhsri_run000.csv", "trace_qhsri_run001.csv"}) {
        const CsvTable a = read_csv_file((dir.path() / "a" / name).string());
        const CsvTable b = read_csv_file((dir.path() / "b" / name).string());
        EXPECT_EQ(a.comments, b.comments);
        ASSERT_EQ(a.header, b.header);
        ASSERT_EQ(a.rows.size(), b.rows.size());
        for (std::size_t c = 0; c < a.header.size(); ++c) {
            if (is_wall_clock_column(a.header[c])) continue;
            for (std::size_t r = 0; r < a.rows.size(); ++r) EXPECT_EQ(a.rows[r][c], b.rows[r][c]);
        }
    }
}

TEST(CmdRun, BadConfigExitsWithUsage) {
    TempDir dir;
    const std::string cfg = dir.file("exp.yaml", "problem: branin\nbogus: 1\n");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run(cfg, (dir.path() / "o").string(), {}, std::nullopt, out, err), kExitUsage);
    EXPECT_NE(err.str().find("exp.yaml:2"), std::string::npos) << err.str();
    EXPECT_EQ(cmd_run((dir.path() / "missing.yaml").string(), (dir.path() / "o").string(), {}, std::nullopt, out,
                      err),
              kExitUsage);
}

TEST(CmdSuggest, DeterministicBatch) {
    TempDir dir;
    SuggestOptions o;
    o.data_path = dir.file("d.csv", branin_data(12, false));
    o.q = 5;
    o.out_path = (dir.path() / "s.csv").string();
    std::ostringstream out, err;
    ASSERT_EQ(cmd_suggest(o, out, err), kExitOk) << err.str();
    const CsvTable t = read_csv_file(o.out_path);
    EXPECT_EQ(t.header, (std::vector<std::string>{"x1", "x2", "replicates", "existing"}));
    ASSERT_EQ(t.rows.size(), 5u);
    for (const auto& row : t.rows) {
        EXPECT_EQ(row[2], "1");
        EXPECT_EQ(row[3], "0");
        for (int j = 0; j < 2; ++j) {
            const double v = parse_number(row[static_cast<std::size_t>(j)], "s");
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
    std::ostringstream again;
    o.out_path.clear();
    ASSERT_EQ(cmd_suggest(o, again, err), kExitOk);
    EXPECT_EQ(again.str(), slurp(dir.path() / "s.csv"));
}

TEST(CmdSuggest, NoisyCountsSumToQ) {
    TempDir dir;
    SuggestOptions o;
    o.data_path = dir.file("d.csv", branin_data(15, true));
    o.q = 25;
    o.noisy = true;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_suggest(o, out, err), kExitOk) << err.str();
    std::istringstream in(out.str());
    const CsvTable t = read_csv(in);
    int total = 0;
    for (const auto& row : t.rows) total += std::stoi(row[2]);
    EXPECT_EQ(total, 25);
}

TEST(CmdSuggest, BoundsMapNativeCoordinates) {
    TempDir dir;
    std::ostringstream data;
    data << "x1,y1\n";
    for (int i = 0; i < 6; ++i) data << 10 + 2 * i << ',' << std::sin(i) << '\n';
    SuggestOptions o;
    o.data_path = dir.file("d.csv", data.str());
    o.q = 3;
    o.bounds = "10:20";
    std::ostringstream out, err;
    ASSERT_EQ(cmd_suggest(o, out, err), kExitOk) << err.str();
    std::istringstream in(out.str());
    const CsvTable t = read_csv(in);
    for (const auto& row : t.rows) {
        const double v = parse_number(row[0], "s");
        EXPECT_GE(v, 10.0);
        EXPECT_LE(v, 20.0);
    }
}

TEST(CmdSuggest, UsageErrors) {
    TempDir dir;
    std::ostringstream out, err;
    SuggestOptions o;
    o.q = 2;
    o.data_path = dir.file("few.csv", "x1,x2,y1\n0.1,0.2,1\n0.3,0.4,2\n0.5,0.5,3\n");
    EXPECT_EQ(cmd_suggest(o, out, err), kExitUsage);
    EXPECT_NE(err.str().find("need at least d+2 = 4"), std::string::npos) << err.str();

    err.str("");
    o.data_path = dir.file("bad.csv", "x1,y1\n0.1,1\n0.2,oops\n0.3,2\n");
    EXPECT_EQ(cmd_suggest(o, out, err), kExitUsage);
    EXPECT_NE(err.str().find("row 3"), std::string::npos) << err.str();

    err.str("");
    o.data_path = dir.file("out.csv", "x1,y1\n0.1,1\n1.2,2\n0.3,2\n");
    EXPECT_EQ(cmd_suggest(o, out, err), kExitUsage);
}

TEST(CmdReport, GroupsAndWarnings) {
    TempDir dir;
    const std::string cfg = dir.file("exp.yaml", kSmallConfig);
    std::ostringstream out, err;
    const auto traces = dir.path() / "traces";
    ASSERT_EQ(cmd_run(cfg, traces.string(), {}, std::nullopt, out, err), kExitOk);
    ASSERT_EQ(cmd_run(cfg, (dir.path() / "tmp").string(), {"strategy=qhsri", "macro_runs=1"}, std::nullopt, out, err),
              kExitOk);
    fs::copy_file(dir.path() / "tmp" / "trace_qhsri_run000.csv", traces / "trace_qhsri_run000.csv");
    std::ofstream(traces / "trace_corrupt.csv") << "garbage\n1,2,3\n";

    std::ostringstream rout, rerr;
    const auto report = dir.path() / "rep" / "summary.csv";
    ASSERT_EQ(cmd_report(traces.string(), report.string(), rout, rerr), kExitOk) << rerr.str();
    EXPECT_NE(rerr.str().find("trace_corrupt.csv"), std::string::npos) << rerr.str();
    const CsvTable timing = read_csv_file((dir.path() / "rep" / "summary_timing.csv").string());
    EXPECT_EQ(timing.rows.size(), 2u);

    // A second random run with another config hash triggers the mixed-hash warning.
    ASSERT_EQ(cmd_run(cfg, (dir.path() / "tmp2").string(), {"q=5", "macro_runs=1"}, std::nullopt, out, err), kExitOk);
    fs::copy_file(dir.path() / "tmp2" / "trace_random_run000.csv", traces / "trace_random_other.csv");
    std::ostringstream r2out, r2err;
    ASSERT_EQ(cmd_report(traces.string(), report.string(), r2out, r2err), kExitOk);
    EXPECT_NE(r2err.str().find("mixes"), std::string::npos) << r2err.str();

    fs::create_directories(dir.path() / "empty");
    EXPECT_EQ(cmd_report((dir.path() / "empty").string(), report.string(), rout, rerr), kExitUsage);
}

TEST(Binary, ExitCodes) {
    TempDir dir;
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("run --out x"), 2);
    EXPECT_EQ(run_cli("suggest --data nothing.csv --q 0"), 2);
    const std::string cfg = dir.file("exp.yaml", kSmallConfig);
    EXPECT_EQ(run_cli("run --config " + cfg + " --out " + (dir.path() / "o").string() + " --set q=5 --set macro_runs=1"),
              0);
    EXPECT_TRUE(fs::exists(dir.path() / "o" / "summary.csv"));
    EXPECT_EQ(run_cli("report --traces " + (dir.path() / "o").string() + " --out " +
                      (dir.path() / "r.csv").string()),
              0);
}
