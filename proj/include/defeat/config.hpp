#pragma once

// Run configuration files: one `key = value` per line, dotted keys, `#`
// starts a comment. Numeric values may be constant expressions such as
// `1e-3 / (2*pi)`.
//
//   experiment.name = poisson_internal_feature
//   experiment.exact = true
//   sweep.logspace = 0.25, 1e-3, 8        # or sweep.linspace / sweep.values
//   mesh.resolution = 40
//   mesh.refinement_depth = 0
//   output.path = internal.csv
//   run.jobs = 1

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "experiments.hpp"

namespace defeat {

namespace detail {

inline std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split_list(const std::string &s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        out.push_back(trim(item));
    return out;
}

struct ConfigEntry {
    std::string value;
    int line = 0;
};

inline ConfigError config_error(int line, const std::string &msg)
{
    return ConfigError(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg);
}

inline double config_number(const ConfigEntry &e)
{
    if (e.value.empty())
        throw config_error(e.line, "empty number");
    try {
        const Expression ex = Expression::parse(e.value);
        for (Var v : {Var::X, Var::Y, Var::T, Var::Theta})
            if (ex.depends_on(v))
                throw config_error(e.line, "'" + e.value + "' is not a constant");
        return ex.eval({});
    } catch (const ExpressionError &err) {
        throw config_error(e.line, err.what());
    }
}

inline int config_int(const ConfigEntry &e)
{
    const double v = config_number(e);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw config_error(e.line, "'" + e.value + "' is not an integer");
    return static_cast<int>(v);
}

inline bool config_bool(const ConfigEntry &e)
{
    if (e.value == "true" || e.value == "yes" || e.value == "1")
        return true;
    if (e.value == "false" || e.value == "no" || e.value == "0")
        return false;
    throw config_error(e.line, "'" + e.value + "' is not a boolean");
}

} // namespace detail

inline ExperimentConfig parse_config(std::istream &in)
{
    static const std::vector<std::string> known = {
        "experiment.name", "experiment.exact",  "sweep.values",          "sweep.logspace", "sweep.linspace",
        "mesh.resolution", "mesh.refinement_depth", "output.path", "run.jobs"};
    std::map<std::string, detail::ConfigEntry> entries;
    std::string raw;
    for (int line = 1; std::getline(in, raw); ++line) {
        const std::string text = detail::trim(raw.substr(0, raw.find('#')));
        if (text.empty())
            continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw detail::config_error(line, "expected 'key = value'");
        const std::string key = detail::trim(text.substr(0, eq));
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw detail::config_error(line, "unknown key '" + key + "'");
        if (entries.count(key))
            throw detail::config_error(line, "duplicate key '" + key + "'");
        entries[key] = {detail::trim(text.substr(eq + 1)), line};
    }

    const auto it = entries.find("experiment.name");
    if (it == entries.end())
        throw ConfigError("missing experiment.name");
    ExperimentConfig cfg;
    try {
        cfg.kind = parse_experiment_kind(it->second.value);
    } catch (const ConfigError &e) {
        throw detail::config_error(it->second.line, e.what());
    }

    int sweep_keys = 0;
    for (const char *k : {"sweep.values", "sweep.logspace", "sweep.linspace"}) {
        const auto s = entries.find(k);
        if (s == entries.end())
            continue;
        if (++sweep_keys > 1)
            throw detail::config_error(s->second.line, "only one of sweep.values/logspace/linspace may be given");
        std::vector<double> nums;
        for (const auto &item : detail::split_list(s->second.value))
            nums.push_back(detail::config_number({item, s->second.line}));
        if (std::string(k) == "sweep.values") {
            if (nums.empty())
                throw detail::config_error(s->second.line, "empty sweep");
            cfg.sweep = nums;
        } else {
            if (nums.size() != 3 || nums[2] != std::floor(nums[2]))
                throw detail::config_error(s->second.line, "expected 'start, stop, count'");
            try {
                cfg.sweep = std::string(k) == "sweep.logspace"
                                ? logspace(nums[0], nums[1], static_cast<int>(nums[2]))
                                : linspace(nums[0], nums[1], static_cast<int>(nums[2]));
            } catch (const ConfigError &e) {
                throw detail::config_error(s->second.line, e.what());
            }
        }
    }
    if (cfg.sweep.empty())
        cfg.sweep = default_sweep(cfg.kind);

    if (auto e = entries.find("experiment.exact"); e != entries.end())
        cfg.with_exact = detail::config_bool(e->second);
    if (auto e = entries.find("mesh.resolution"); e != entries.end()) {
        cfg.resolution = detail::config_int(e->second);
        if (cfg.resolution < 4)
            throw detail::config_error(e->second.line, "mesh.resolution must be at least 4");
    }
    if (auto e = entries.find("mesh.refinement_depth"); e != entries.end()) {
        cfg.refinement_depth = detail::config_int(e->second);
        if (cfg.refinement_depth < 0 || cfg.refinement_depth > 6)
            throw detail::config_error(e->second.line, "mesh.refinement_depth must lie in [0, 6]");
    }
    if (auto e = entries.find("run.jobs"); e != entries.end()) {
        cfg.jobs = detail::config_int(e->second);
        if (cfg.jobs < 1)
            throw detail::config_error(e->second.line, "run.jobs must be positive");
    }
    if (auto e = entries.find("output.path"); e != entries.end())
        cfg.output_path = e->second.value;
    return cfg;
}

inline ExperimentConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

} // namespace defeat
