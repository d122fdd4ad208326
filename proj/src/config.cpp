#include "qhsri/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace qhsri {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"", {"problem", "noise", "strategy", "n_init", "q", "n_max", "macro_runs", "seed", "threads", "kernel", "gp",
              "qhsri", "mc_qei", "reference"}},
        {"noise", {"enabled", "source", "factor", "known"}},
        {"gp", {"restarts", "warm_restarts"}},
        {"qhsri", {"n_uniform", "nsga_pop", "nsga_gens", "margin", "pi_min", "pnd_min", "keep_max", "include_evaluated"}},
        {"mc_qei", {"samples", "n_uniform", "local_evaluations", "swarm_size", "swarm_iterations"}},
        {"reference", {"pop", "generations"}},
    };
    return s;
}

class Reader {
public:
    Reader(std::string source) : source_(std::move(source)) {}

    std::string where(const YAML::Node& node) const {
        const YAML::Mark mark = node.Mark();
        if (mark.is_null() || mark.line < 0) return source_ + " (override)";
        return source_ + ":" + std::to_string(mark.line + 1);
    }

    [[noreturn]] void fail(const YAML::Node& node, const std::string& key, const std::string& msg) const {
        throw ConfigError(where(node) + ": " + key + ": " + msg);
    }

    template <typename T>
    void get(const YAML::Node& parent, const std::string& name, const std::string& key, T& out) {
        const YAML::Node node = parent[name];
        if (!node) return;
        marks_[key] = node;
        if (!node.IsScalar()) fail(node, key, "expected a scalar value");
        try {
            out = node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, key, "cannot parse '" + node.Scalar() + "'");
        }
    }

    // Node where a validated field was defined, for line-anchored messages.
    std::string where_key(const std::string& key, const YAML::Node& root) const {
        if (auto it = marks_.find(key); it != marks_.end()) return where(it->second);
        return where(root);
    }

    void check_keys(const YAML::Node& node, const std::string& section) const {
        if (!node.IsMap()) fail(node, section.empty() ? "config" : section, "expected a mapping");
        const auto& allowed = schema().at(section);
        for (const auto& kv : node) {
            const std::string key = kv.first.as<std::string>();
            const std::string full = section.empty() ? key : section + "." + key;
            if (!allowed.count(key)) fail(kv.first, full, "unknown key");
            if (schema().count(key) && section.empty()) check_keys(kv.second, key);
        }
    }

private:
    std::string source_;
    std::map<std::string, YAML::Node> marks_;
};

void apply_override(YAML::Node& root, const std::string& item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set " + item + ": expected key=value");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    if (parts.empty() || parts.size() > 2) throw ConfigError("--set " + item + ": unknown key '" + key + "'");
    YAML::Node parsed;
    try {
        parsed = YAML::Load(value);
    } catch (const YAML::Exception& e) {
        throw ConfigError("--set " + item + ": " + e.what());
    }
    if (!parsed.IsScalar()) parsed = YAML::Node(value);
    // Re-create the scalar so it carries no mark from the parsed string.
    YAML::Node fresh(parsed.Scalar());
    if (parts.size() == 1) {
        root[parts[0]] = fresh;
    } else {
        YAML::Node section = root[parts[0]];
        if (!section || section.IsNull()) {
            YAML::Node created(YAML::NodeType::Map);
            created[parts[1]] = fresh;
            root[parts[0]] = created;
        } else {
            section[parts[1]] = fresh;
        }
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides,
                              const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    for (const auto& item : overrides) apply_override(root, item);

    Reader reader(source);
    reader.check_keys(root, "");

    ExperimentConfig c;
    std::string strategy = to_string(c.strategy), kernel = to_string(c.kernel);
    reader.get(root, "problem", "problem", c.problem);
    reader.get(root, "strategy", "strategy", strategy);
    reader.get(root, "n_init", "n_init", c.n_init);
    reader.get(root, "q", "q", c.q);
    reader.get(root, "n_max", "n_max", c.n_max);
    reader.get(root, "macro_runs", "macro_runs", c.macro_runs);
    reader.get(root, "seed", "seed", c.seed);
    reader.get(root, "threads", "threads", c.threads);
    reader.get(root, "kernel", "kernel", kernel);
    if (const YAML::Node n = root["noise"]) {
        reader.get(n, "enabled", "noise.enabled", c.noise.enabled);
        reader.get(n, "source", "noise.source", c.noise.source);
        reader.get(n, "factor", "noise.factor", c.noise.factor);
        reader.get(n, "known", "noise.known", c.noise.known);
    }
    if (const YAML::Node n = root["gp"]) {
        reader.get(n, "restarts", "gp.restarts", c.fit_restarts);
        reader.get(n, "warm_restarts", "gp.warm_restarts", c.warm_restarts);
    }
    if (const YAML::Node n = root["qhsri"]) {
        reader.get(n, "n_uniform", "qhsri.n_uniform", c.qhsri.search.n_uniform);
        reader.get(n, "nsga_pop", "qhsri.nsga_pop", c.qhsri.search.nsga_pop);
        reader.get(n, "nsga_gens", "qhsri.nsga_gens", c.qhsri.search.nsga_gens);
        reader.get(n, "margin", "qhsri.margin", c.qhsri.margin);
        reader.get(n, "pi_min", "qhsri.pi_min", c.qhsri.pi.pi_min);
        reader.get(n, "pnd_min", "qhsri.pnd_min", c.qhsri.pnd_min);
        reader.get(n, "keep_max", "qhsri.keep_max", c.qhsri.pi.keep_max);
        reader.get(n, "include_evaluated", "qhsri.include_evaluated", c.qhsri.include_evaluated);
    }
    if (const YAML::Node n = root["mc_qei"]) {
        reader.get(n, "samples", "mc_qei.samples", c.mc_qei.n_samples);
        reader.get(n, "n_uniform", "mc_qei.n_uniform", c.mc_qei.n_uniform);
        reader.get(n, "local_evaluations", "mc_qei.local_evaluations", c.mc_qei.local_evaluations);
        reader.get(n, "swarm_size", "mc_qei.swarm_size", c.mc_qei.swarm_size);
        reader.get(n, "swarm_iterations", "mc_qei.swarm_iterations", c.mc_qei.swarm_iterations);
    }
    if (const YAML::Node n = root["reference"]) {
        reader.get(n, "pop", "reference.pop", c.reference_pop);
        reader.get(n, "generations", "reference.generations", c.reference_generations);
    }

    try {
        c.strategy = strategy_from_string(strategy);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(reader.where_key("strategy", root) + ": strategy: " + e.what());
    }
    try {
        c.kernel = kernel_family_from_string(kernel);
    } catch (const std::exception& e) {
        throw ConfigError(reader.where_key("kernel", root) + ": kernel: " + e.what());
    }

    Problem problem;
    try {
        problem = build_problem(c);
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        const std::string key = msg.rfind("noise.source", 0) == 0 || msg.find("noise source") != std::string::npos
                                    ? "noise.source"
                                    : "problem";
        throw ConfigError(reader.where_key(key, root) + ": " + msg);
    }
    try {
        validate(c, problem);
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        const std::string key = msg.substr(0, msg.find(':'));
        throw ConfigError(reader.where_key(key, root) + ": " + msg);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), overrides, path);
}

}  // namespace qhsri
