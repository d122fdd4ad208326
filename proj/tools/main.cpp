#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qhsri/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Batch Bayesian optimization with qHSRI"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> run_seed;
    auto* run = app.add_subcommand("run", "Run experiments described by a config file");
    run->add_option("--config", config_path, "YAML experiment config")->required();
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--seed", run_seed, "Base seed (overrides the config)");
    run->add_option("--set", overrides, "Override a config field, key=value")->allow_extra_args(false);

    qhsri::SuggestOptions suggest_opts;
    auto* suggest = app.add_subcommand("suggest", "Suggest one batch from a data file");
    suggest->add_option("--data", suggest_opts.data_path, "CSV with columns x1..xd, y1..yp")->required();
    suggest->add_option("--q", suggest_opts.q, "Batch size")->required();
    suggest->add_flag("--noisy", suggest_opts.noisy, "Observations are noisy; allow replication");
    suggest->add_option("--out", suggest_opts.out_path, "Output CSV (default: stdout)");
    suggest->add_option("--seed", suggest_opts.seed, "Random seed");
    suggest->add_option("--bounds", suggest_opts.bounds, "Native bounds lo:hi,lo:hi,...");
    suggest->add_option("--threads", suggest_opts.threads, "Scoring threads");

    std::string trace_dir, report_out;
    auto* report = app.add_subcommand("report", "Aggregate trace files");
    report->add_option("--traces", trace_dir, "Directory holding trace CSVs")->required();
    report->add_option("--out", report_out, "Summary CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? qhsri::kExitOk : qhsri::kExitUsage;
    }

    if (*run) return qhsri::cmd_run(config_path, out_dir, overrides, run_seed, std::cout, std::cerr);
    if (*suggest) return qhsri::cmd_suggest(suggest_opts, std::cout, std::cerr);
    return qhsri::cmd_report(trace_dir, report_out, std::cout, std::cerr);
}
