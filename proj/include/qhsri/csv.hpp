#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qhsri/driver.hpp"

namespace qhsri {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A comma-separated table. Leading lines starting with '#' are kept as
/// comments; the first other line is the header.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based file line of each row.
    std::vector<int> lines;

    /// Column index by name, or -1.
    int column(const std::string& name) const;
};

/// Throws CsvError naming the line on ragged rows.
CsvTable read_csv(std::istream& in, const std::string& source = "<csv>");
CsvTable read_csv_file(const std::string& path);

/// Strict number parsing; throws CsvError naming source, line and column.
double parse_number(const std::string& text, const std::string& where);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

/// "# config_hash=... seed=... problem=... strategy=... q=..." plus the
/// noise flag and macro-run index.
std::string trace_header(const ExperimentTrace& trace);

/// key=value pairs of a header comment line.
std::map<std::string, std::string> parse_header(const std::string& line);

/// iteration, n, selection_seconds, fit_seconds, metric[, estimated metric].
void write_trace_csv(std::ostream& out, const ExperimentTrace& trace);
/// iteration, x1..xd, replicates, existing, y1..yp (mean over the replicates).
void write_batches_csv(std::ostream& out, const ExperimentTrace& trace);

/// Reads a trace written by write_trace_csv (batches are not restored).
ExperimentTrace read_trace_csv(const std::string& path);

void write_summary_csv(std::ostream& out, const Summary& summary);
void write_timing_csv(std::ostream& out, const Summary& summary);

/// Column names that hold wall-clock values.
bool is_wall_clock_column(const std::string& name);

}  // namespace qhsri
