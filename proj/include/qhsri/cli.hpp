#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qhsri {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs config.macro_runs experiments and writes, in out_dir:
/// trace_<strategy>_run<k>.csv, batches_<strategy>_run<k>.csv, summary.csv,
/// summary_timing.csv and resolved_config.txt.
int cmd_run(const std::string& config_path, const std::string& out_dir, const std::vector<std::string>& overrides,
            std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);

struct SuggestOptions {
    std::string data_path;
    int q = 1;
    bool noisy = false;
    /// Empty writes to `out`.
    std::string out_path;
    std::uint64_t seed = 1;
    /// "lo:hi,lo:hi,..." native bounds of the x columns; empty means [0,1]^d.
    std::string bounds;
    int threads = 1;
};

/// Fits one GP per y column of the data and prints one qHSRI batch:
/// x1..xd, replicates, existing.
int cmd_suggest(const SuggestOptions& options, std::ostream& out, std::ostream& err);

/// Aggregates every trace*.csv file of trace_dir into out_csv (quantiles)
/// and <stem>_timing.csv (mean selection time per strategy).
int cmd_report(const std::string& trace_dir, const std::string& out_csv, std::ostream& out, std::ostream& err);

}  // namespace qhsri
