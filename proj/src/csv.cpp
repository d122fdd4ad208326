#include "qhsri/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qhsri {

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

CsvTable read_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (!have_header && line[0] == '#') {
            table.comments.push_back(line);
            continue;
        }
        auto cells = split(line);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size())
            throw CsvError(source + ": row " + std::to_string(lineno) + ": expected " +
                           std::to_string(table.header.size()) + " fields, got " + std::to_string(cells.size()));
        table.rows.push_back(std::move(cells));
        table.lines.push_back(lineno);
    }
    if (!have_header) throw CsvError(source + ": missing header row");
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(path + ": cannot open");
    return read_csv(in, path);
}

double parse_number(const std::string& text, const std::string& where) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != end)
        throw CsvError(where + ": not a number: '" + text + "'");
    return v;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string trace_header(const ExperimentTrace& t) {
    std::ostringstream os;
    os << "# config_hash=" << t.config_hash << " seed=" << t.seed << " problem=" << t.problem
       << " strategy=" << to_string(t.strategy) << " q=" << t.q << " noisy=" << (t.noisy ? 1 : 0)
       << " objectives=" << t.objectives << " dim=" << t.dim << " macro_run=" << t.macro_run
       << " valid=" << (t.valid ? 1 : 0);
    return os.str();
}

std::map<std::string, std::string> parse_header(const std::string& line) {
    std::map<std::string, std::string> out;
    std::stringstream ss(line);
    for (std::string tok; ss >> tok;) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos) out[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return out;
}

void write_trace_csv(std::ostream& out, const ExperimentTrace& t) {
    out << trace_header(t) << '\n';
    if (!t.valid) out << "# error=" << t.error << '\n';
    out << "iteration,n,selection_seconds,fit_seconds," << t.metric_name();
    if (t.noisy) out << ',' << t.estimated_metric_name();
    out << '\n';
    for (const auto& r : t.records) {
        out << r.iteration << ',' << r.n << ',' << format_number(r.selection_seconds) << ','
            << format_number(r.fit_seconds) << ',' << format_number(r.metric);
        if (t.noisy) out << ',' << format_number(r.estimated_metric.value_or(std::nan("")));
        out << '\n';
    }
}

void write_batches_csv(std::ostream& out, const ExperimentTrace& t) {
    out << trace_header(t) << '\n' << "iteration";
    for (Eigen::Index j = 0; j < t.dim; ++j) out << ",x" << j + 1;
    out << ",replicates,existing";
    for (Eigen::Index j = 0; j < t.objectives; ++j) out << ",y" << j + 1;
    out << '\n';
    for (const auto& r : t.records) {
        for (const auto& e : r.batch) {
            out << r.iteration;
            for (Eigen::Index j = 0; j < e.x.size(); ++j) out << ',' << format_number(e.x[j]);
            out << ',' << e.replicates << ',' << (e.existing ? 1 : 0);
            const Eigen::VectorXd mean = e.y.colwise().mean().transpose();
            for (Eigen::Index j = 0; j < mean.size(); ++j) out << ',' << format_number(mean[j]);
            out << '\n';
        }
    }
}

ExperimentTrace read_trace_csv(const std::string& path) {
    const CsvTable table = read_csv_file(path);
    if (table.comments.empty()) throw CsvError(path + ": missing header comment");
    const auto meta = parse_header(table.comments.front());
    for (const char* key : {"config_hash", "seed", "problem", "strategy", "q"})
        if (!meta.count(key)) throw CsvError(path + ": header comment lacks " + key);

    ExperimentTrace t;
    t.config_hash = meta.at("config_hash");
    t.problem = meta.at("problem");
    try {
        t.seed = std::stoull(meta.at("seed"));
        t.strategy = strategy_from_string(meta.at("strategy"));
        t.q = std::stoi(meta.at("q"));
        if (meta.count("macro_run")) t.macro_run = std::stoi(meta.at("macro_run"));
        if (meta.count("valid")) t.valid = meta.at("valid") == "1";
    } catch (const std::exception& e) {
        throw CsvError(path + ": bad header comment: " + e.what());
    }
    const int it = table.column("iteration"), n = table.column("n");
    const int sel = table.column("selection_seconds"), fit = table.column("fit_seconds");
    int metric = table.column("gap"), est = table.column("estimated_gap");
    t.objectives = 1;
    if (metric < 0) {
        metric = table.column("hv_diff");
        est = table.column("estimated_hv_diff");
        t.objectives = 2;
    }
    if (it < 0 || n < 0 || sel < 0 || metric < 0) throw CsvError(path + ": missing trace columns");
    t.noisy = est >= 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path + ": row " + std::to_string(table.lines[r]);
        IterationRecord rec;
        rec.iteration = static_cast<int>(parse_number(row[static_cast<std::size_t>(it)], where));
        rec.n = static_cast<int>(parse_number(row[static_cast<std::size_t>(n)], where));
        rec.selection_seconds = parse_number(row[static_cast<std::size_t>(sel)], where);
        if (fit >= 0) rec.fit_seconds = parse_number(row[static_cast<std::size_t>(fit)], where);
        rec.metric = parse_number(row[static_cast<std::size_t>(metric)], where);
        if (est >= 0) rec.estimated_metric = parse_number(row[static_cast<std::size_t>(est)], where);
        t.records.push_back(rec);
    }
    return t;
}

void write_summary_csv(std::ostream& out, const Summary& s) {
    out << "strategy,metric,iteration,n,median,q05,q95,count\n";
    for (const auto& r : s.rows)
        out << r.group << ',' << r.metric << ',' << r.iteration << ',' << r.n << ',' << format_number(r.median) << ','
            << format_number(r.q05) << ',' << format_number(r.q95) << ',' << r.count << '\n';
}

void write_timing_csv(std::ostream& out, const Summary& s) {
    out << "strategy,mean_selection_seconds,iterations,runs\n";
    for (const auto& r : s.timing)
        out << r.group << ',' << format_number(r.mean_selection_seconds) << ',' << r.iterations << ',' << r.runs << '\n';
}

bool is_wall_clock_column(const std::string& name) {
    return name == "selection_seconds" || name == "fit_seconds" || name == "mean_selection_seconds";
}

}  // namespace qhsri
