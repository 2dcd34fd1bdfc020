#pragma once

// Run configuration: flat `key=value` text (one per line, '#' comments) with
// per-key overrides. Every key is known up front; anything else is rejected.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "asca/pipeline.hpp"

namespace asca {

enum class DatasetKind { pgm_dir, cifar10, patch_cache };

inline const char* to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::pgm_dir: return "pgm-dir";
        case DatasetKind::cifar10: return "cifar10";
        case DatasetKind::patch_cache: return "patch-cache";
    }
    return "?";
}

struct RunSpec {
    SessionConfig session{};
    std::string dataset;
    DatasetKind dataset_kind = DatasetKind::patch_cache;
    std::string out_dir = "run";
    bool baseline = false;
    std::size_t baseline_dim = 500;
    std::size_t limit = 0;  // max images (patch caches: 4 patches per image); 0 = all

    // Session configuration actually driven by this spec.
    SessionConfig effective_session() const {
        SessionConfig c = session;
        if (baseline) {
            c.controller = false;
            c.initial_dim = baseline_dim;
        }
        return c;
    }

    friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

enum class ConfigErrc {
    unknown_key,
    bad_value,
    bad_line,
    missing_dataset,
    bad_actions,
    bad_sigma,
    bad_threshold,
};

struct ConfigError : std::invalid_argument {
    ConfigError(ConfigErrc code, const std::string& what) : std::invalid_argument(what), code(code) {}
    ConfigErrc code;
};

struct ConfigKey {
    const char* name;
    const char* help;
};

// Order here is the order keys appear in manifests.
inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"dataset", "dataset path (directory, CIFAR-10 batch file or patch cache)"},
        {"dataset_kind", "pgm-dir | cifar10 | patch-cache"},
        {"limit", "max images to load, 0 = all (default 0)"},
        {"out_dir", "output directory (default run)"},
        {"lambda", "sparsity weight (default 0.1)"},
        {"gamma", "temporal weight for dynamic mode (default 0)"},
        {"max_iters", "max solver iterations per solve (default 500)"},
        {"rel_tol", "solver relative energy tolerance (default 1e-6)"},
        {"initial_dim", "starting dictionary size (default 50)"},
        {"actions", "comma list of strictly increasing growth amounts (default 5,15,20,30,35)"},
        {"threshold", "T-MSE threshold (default 0.5)"},
        {"sigma", "automaton memory rate in (0,1) (default 0.5)"},
        {"controller_period", "samples between controller checks (default 4)"},
        {"alternations_max", "max solve/update alternations per sample (default 10)"},
        {"outer_rel_tol", "alternation energy tolerance (default 1e-4)"},
        {"odl_passes", "dictionary update passes per alternation (default 1)"},
        {"seed", "RNG seed (default 1; env ASCA_SEED overrides the file)"},
        {"dynamic_mode", "true: temporal sparse coding with A = I (default false)"},
        {"normalize", "unit | none: per-patch l2 normalization (default unit)"},
        {"baseline", "true: fixed-dimension run without controller (default false)"},
        {"baseline_dim", "dictionary size for baseline runs (default 500)"},
    };
    return keys;
}

inline RunSpec default_run_spec() {
    RunSpec s;
    s.session.unit_normalize = true;
    return s;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(ConfigErrc::bad_value, key + ": not a finite number: '" + v + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc{} || ptr != end)
        throw ConfigError(ConfigErrc::bad_value, key + ": not a non-negative integer: '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(ConfigErrc::bad_value, key + ": expected true/false, got '" + v + "'");
}

inline std::vector<std::size_t> parse_actions(const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        out.push_back(static_cast<std::size_t>(parse_u64("actions", item)));
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void apply(RunSpec& s, const std::string& key, const std::string& v) {
    auto& c = s.session;
    if (key == "dataset") s.dataset = v;
    else if (key == "dataset_kind") {
        if (v == "pgm-dir") s.dataset_kind = DatasetKind::pgm_dir;
        else if (v == "cifar10") s.dataset_kind = DatasetKind::cifar10;
        else if (v == "patch-cache") s.dataset_kind = DatasetKind::patch_cache;
        else throw ConfigError(ConfigErrc::bad_value, "dataset_kind: unknown kind '" + v + "'");
    }
    else if (key == "limit") s.limit = parse_u64(key, v);
    else if (key == "out_dir") s.out_dir = v;
    else if (key == "lambda") c.solve_opts.lambda = parse_double(key, v);
    else if (key == "gamma") c.solve_opts.gamma = parse_double(key, v);
    else if (key == "max_iters") c.solve_opts.max_iters = parse_u64(key, v);
    else if (key == "rel_tol") c.solve_opts.rel_tol = parse_double(key, v);
    else if (key == "initial_dim") c.initial_dim = parse_u64(key, v);
    else if (key == "actions") c.actions = parse_actions(v);
    else if (key == "threshold") c.threshold = parse_double(key, v);
    else if (key == "sigma") c.sigma = parse_double(key, v);
    else if (key == "controller_period") c.controller_period = parse_u64(key, v);
    else if (key == "alternations_max") c.alternations_max = parse_u64(key, v);
    else if (key == "outer_rel_tol") c.outer_rel_tol = parse_double(key, v);
    else if (key == "odl_passes") c.odl_passes = parse_u64(key, v);
    else if (key == "seed") c.seed = parse_u64(key, v);
    else if (key == "dynamic_mode") c.dynamic_mode = parse_bool(key, v);
    else if (key == "normalize") {
        if (v == "unit") c.unit_normalize = true;
        else if (v == "none") c.unit_normalize = false;
        else throw ConfigError(ConfigErrc::bad_value, "normalize: expected unit or none, got '" + v + "'");
    }
    else if (key == "baseline") s.baseline = parse_bool(key, v);
    else if (key == "baseline_dim") s.baseline_dim = parse_u64(key, v);
    else throw ConfigError(ConfigErrc::unknown_key, "unknown config key '" + key + "'");
}

}  // namespace detail

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Splits `key=value` lines; blank lines and '#' comments are skipped.
inline ConfigEntries parse_config_text(const std::string& text) {
    ConfigEntries out;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(ConfigErrc::bad_line, "line " + std::to_string(lineno) + ": expected key=value");
        out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return out;
}

inline void validate(const RunSpec& s) {
    if (s.dataset.empty()) throw ConfigError(ConfigErrc::missing_dataset, "no dataset given");
    const auto& c = s.session;
    const auto& a = c.actions;
    if (a.empty()) throw ConfigError(ConfigErrc::bad_actions, "actions: list is empty");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) throw ConfigError(ConfigErrc::bad_actions, "actions: entries must be >= 1");
        if (i > 0 && a[i] <= a[i - 1])
            throw ConfigError(ConfigErrc::bad_actions, "actions: must be strictly increasing");
    }
    if (!(c.sigma > 0.0 && c.sigma < 1.0))
        throw ConfigError(ConfigErrc::bad_sigma, "sigma must lie in (0, 1), got " + detail::format_double(c.sigma));
    if (!(c.threshold > 0.0)) throw ConfigError(ConfigErrc::bad_threshold, "threshold must be > 0");
    if (!(c.solve_opts.lambda > 0.0)) throw ConfigError(ConfigErrc::bad_value, "lambda must be > 0");
    if (c.solve_opts.gamma < 0.0) throw ConfigError(ConfigErrc::bad_value, "gamma must be >= 0");
    if (!(c.solve_opts.rel_tol > 0.0)) throw ConfigError(ConfigErrc::bad_value, "rel_tol must be > 0");
    if (!(c.outer_rel_tol > 0.0)) throw ConfigError(ConfigErrc::bad_value, "outer_rel_tol must be > 0");
    if (c.initial_dim < 1) throw ConfigError(ConfigErrc::bad_value, "initial_dim must be >= 1");
    if (c.controller_period < 1) throw ConfigError(ConfigErrc::bad_value, "controller_period must be >= 1");
    if (c.alternations_max < 1) throw ConfigError(ConfigErrc::bad_value, "alternations_max must be >= 1");
    if (c.solve_opts.max_iters < 1) throw ConfigError(ConfigErrc::bad_value, "max_iters must be >= 1");
    if (s.baseline && s.baseline_dim < 1) throw ConfigError(ConfigErrc::bad_value, "baseline_dim must be >= 1");
}

/// Defaults, then `file` entries, then `overrides` (later wins), validated.
inline RunSpec parse_config(const ConfigEntries& file, const ConfigEntries& overrides = {}) {
    RunSpec s = default_run_spec();
    for (const auto& [k, v] : file) detail::apply(s, k, v);
    for (const auto& [k, v] : overrides) detail::apply(s, k, v);
    validate(s);
    return s;
}

/// The fully resolved spec as config text; parsing it back yields the same spec.
inline std::string manifest_text(const RunSpec& s) {
    const auto& c = s.session;
    std::string actions;
    for (std::size_t i = 0; i < c.actions.size(); ++i)
        actions += (i ? "," : "") + std::to_string(c.actions[i]);
    const std::map<std::string, std::string> values = {
        {"dataset", s.dataset},
        {"dataset_kind", to_string(s.dataset_kind)},
        {"limit", std::to_string(s.limit)},
        {"out_dir", s.out_dir},
        {"lambda", detail::format_double(c.solve_opts.lambda)},
        {"gamma", detail::format_double(c.solve_opts.gamma)},
        {"max_iters", std::to_string(c.solve_opts.max_iters)},
        {"rel_tol", detail::format_double(c.solve_opts.rel_tol)},
        {"initial_dim", std::to_string(c.initial_dim)},
        {"actions", actions},
        {"threshold", detail::format_double(c.threshold)},
        {"sigma", detail::format_double(c.sigma)},
        {"controller_period", std::to_string(c.controller_period)},
        {"alternations_max", std::to_string(c.alternations_max)},
        {"outer_rel_tol", detail::format_double(c.outer_rel_tol)},
        {"odl_passes", std::to_string(c.odl_passes)},
        {"seed", std::to_string(c.seed)},
        {"dynamic_mode", c.dynamic_mode ? "true" : "false"},
        {"normalize", c.unit_normalize ? "unit" : "none"},
        {"baseline", s.baseline ? "true" : "false"},
        {"baseline_dim", std::to_string(s.baseline_dim)},
    };
    std::string out;
    for (const auto& key : config_keys()) out += std::string(key.name) + "=" + values.at(key.name) + "\n";
    return out;
}

}  // namespace asca
