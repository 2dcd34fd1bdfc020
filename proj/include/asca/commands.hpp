#pragma once

// Experiment commands behind the `asca` CLI. Each cmd_* returns a process
// exit status: 0 success, 1 usage, 2 data error, 3 numeric failure.
//
// Run directory contents:
//   series.csv     k,sq_error,tmse,dim,state,action,growth (one row per sample;
//                  state is 0-based, state/action empty when the controller
//                  did not act, growth is 1 on samples followed by growth)
//   automaton.csv  state,action,lb,ub,memory,best_err (controller runs only)
//   manifest.txt   resolved configuration, parseable as a config file
//   checkpoint.asca final session

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "asca/checkpoint.hpp"
#include "asca/config.hpp"
#include "asca/dataio.hpp"
#include "asca/pipeline.hpp"

namespace asca {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- CSV ----

inline constexpr const char* kSeriesHeader = "k,sq_error,tmse,dim,state,action,growth";
inline constexpr const char* kAutomatonHeader = "state,action,lb,ub,memory,best_err";

namespace detail {

inline std::string fmt_real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

inline double parse_real(const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw CsvError("bad number '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(DataErrc::io, "cannot write " + path.string());
    out << text;
    if (!out) throw DataError(DataErrc::io, "write failed: " + path.string());
}

inline std::string opt_str(const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : std::string();
}

}  // namespace detail

inline std::string series_csv(const SessionLedger& ledger) {
    std::string out = std::string(kSeriesHeader) + "\n";
    for (const auto& r : ledger.series) {
        out += std::to_string(r.k) + "," + detail::fmt_real(r.sq_error) + "," +
               detail::fmt_real(r.tmse) + "," + std::to_string(r.dim) + "," +
               detail::opt_str(r.state_visited) + "," + detail::opt_str(r.action_taken) + "," +
               (r.action_taken ? "1" : "0") + "\n";
    }
    return out;
}

inline std::vector<SampleRecord> parse_series_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line) || line != kSeriesHeader)
        throw CsvError("series.csv: unexpected header '" + line + "'");
    std::vector<SampleRecord> out;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != 7) throw CsvError("series.csv: expected 7 columns in '" + line + "'");
        try {
            SampleRecord r;
            r.k = std::stoull(cells[0]);
            r.sq_error = detail::parse_real(cells[1]);
            r.tmse = detail::parse_real(cells[2]);
            r.dim = std::stoull(cells[3]);
            if (!cells[4].empty()) r.state_visited = std::stoull(cells[4]);
            if (!cells[5].empty()) r.action_taken = std::stoull(cells[5]);
            out.push_back(r);
        } catch (const std::logic_error&) {
            throw CsvError("series.csv: malformed row '" + line + "'");
        }
    }
    return out;
}

inline std::string automaton_csv(const Automaton& aut) {
    std::string out = std::string(kAutomatonHeader) + "\n";
    for (std::size_t i = 0; i < aut.states.size(); ++i) {
        const auto& s = aut.states[i];
        out += std::to_string(i) + "," + std::to_string(s.action_ell) + "," + detail::fmt_real(s.lb) +
               "," + detail::fmt_real(s.ub) + "," + detail::fmt_real(s.memory) + "," +
               detail::fmt_real(s.best_err) + "\n";
    }
    return out;
}

inline std::vector<ScaState> parse_automaton_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line) || line != kAutomatonHeader)
        throw CsvError("automaton.csv: unexpected header '" + line + "'");
    std::vector<ScaState> out;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != 6) throw CsvError("automaton.csv: expected 6 columns");
        ScaState s;
        s.action_ell = std::stoull(cells[1]);
        s.lb = detail::parse_real(cells[2]);
        s.ub = detail::parse_real(cells[3]);
        s.memory = detail::parse_real(cells[4]);
        s.best_err = detail::parse_real(cells[5]);
        out.push_back(s);
    }
    return out;
}

// ---- dataset loading ----

inline std::vector<Vec> load_dataset(const RunSpec& spec) {
    switch (spec.dataset_kind) {
        case DatasetKind::pgm_dir:
            return make_patch_stream(load_pgm_dir(spec.dataset, spec.limit)).patches;
        case DatasetKind::cifar10: {
            auto images = load_cifar10_batch(spec.dataset);
            if (spec.limit > 0 && images.size() > spec.limit) images.resize(spec.limit);
            return make_patch_stream(images).patches;
        }
        case DatasetKind::patch_cache: {
            auto patches = load_patch_cache(spec.dataset);
            if (spec.limit > 0 && patches.size() > 4 * spec.limit) patches.resize(4 * spec.limit);
            return patches;
        }
    }
    return {};
}

/// Maps an in-flight exception to an exit status and writes its message.
inline int report_failure(std::ostream& err) {
    try {
        throw;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SampleError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const CheckpointError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const CsvError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
}

// ---- run ----

/// Runs one session over `patches`, writing the run directory. On a numeric
/// failure the partial series is still written before the error propagates.
inline Session run_to_directory(const RunSpec& spec, const std::vector<Vec>& patches) {
    namespace fs = std::filesystem;
    if (patches.empty()) throw DataError(DataErrc::bad_length, "dataset produced no patches");
    const fs::path dir = spec.out_dir;
    fs::create_directories(dir);
    detail::write_text(dir / "manifest.txt",
                       "# asca run manifest\n# checkpoint_format_version=" +
                           std::to_string(kCheckpointVersion) + "\n# series_schema=" + kSeriesHeader +
                           "\n" + manifest_text(spec));

    Session session(spec.effective_session(), patches.front().size());
    try {
        session.run_stream(patches);
    } catch (...) {
        detail::write_text(dir / "series.csv", series_csv(session.ledger()));
        throw;
    }
    detail::write_text(dir / "series.csv", series_csv(session.ledger()));
    if (session.automaton()) detail::write_text(dir / "automaton.csv", automaton_csv(*session.automaton()));
    checkpoint_save(session, dir / "checkpoint.asca");
    return session;
}

inline int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    try {
        const auto patches = load_dataset(spec);
        const Session s = run_to_directory(spec, patches);
        out << "processed " << s.ledger().k << " samples, final tmse "
            << detail::format_double(tmse(s.ledger())) << ", final dim " << s.dim() << "\n";
        return kExitOk;
    } catch (...) {
        return report_failure(err);
    }
}

// ---- compare ----

struct RunSummary {
    std::string name;
    std::size_t samples = 0;
    double final_tmse = 0.0;
    std::size_t final_dim = 0;
    std::size_t growth_events = 0;
};

inline RunSummary summarize(const std::string& name, const std::vector<SampleRecord>& series) {
    RunSummary s;
    s.name = name;
    s.samples = series.size();
    if (series.empty()) return s;
    s.final_tmse = series.back().tmse;
    s.final_dim = series.back().dim + series.back().action_taken.value_or(0);
    s.growth_events = static_cast<std::size_t>(std::count_if(
        series.begin(), series.end(), [](const SampleRecord& r) { return r.action_taken.has_value(); }));
    return s;
}

struct CompareResult {
    std::string compare_csv;
    std::string summary_csv;
    std::vector<RunSummary> runs;
};

inline CompareResult compare_runs(const std::vector<std::filesystem::path>& dirs) {
    if (dirs.size() < 2) throw ConfigError(ConfigErrc::bad_value, "compare needs at least two run directories");
    std::vector<std::vector<SampleRecord>> series;
    std::vector<std::string> names;
    std::map<std::string, int> seen;
    for (const auto& d : dirs) {
        series.push_back(parse_series_csv(detail::read_file(d / "series.csv")));
        std::string name = d.filename().empty() ? d.parent_path().filename().string() : d.filename().string();
        if (seen[name]++ > 0) name += "#" + std::to_string(seen[name]);
        names.push_back(name);
    }
    for (const auto& s : series) {
        if (s.size() != series.front().size()) {
            std::string counts;
            for (std::size_t i = 0; i < series.size(); ++i)
                counts += (i ? ", " : "") + names[i] + "=" + std::to_string(series[i].size());
            throw DataError(DataErrc::bad_length, "sample counts differ: " + counts);
        }
    }
    CompareResult res;
    res.compare_csv = "k";
    for (const auto& n : names) res.compare_csv += "," + n;
    res.compare_csv += "\n";
    for (std::size_t row = 0; row < series.front().size(); ++row) {
        res.compare_csv += std::to_string(series.front()[row].k);
        for (const auto& s : series) res.compare_csv += "," + detail::fmt_real(s[row].tmse);
        res.compare_csv += "\n";
    }
    res.summary_csv = "run,samples,final_tmse,final_dim,growth_events\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        res.runs.push_back(summarize(names[i], series[i]));
        const auto& r = res.runs.back();
        res.summary_csv += r.name + "," + std::to_string(r.samples) + "," + detail::fmt_real(r.final_tmse) +
                           "," + std::to_string(r.final_dim) + "," + std::to_string(r.growth_events) + "\n";
    }
    return res;
}

inline int cmd_compare(const std::vector<std::filesystem::path>& dirs, const std::filesystem::path& out_dir,
                       std::ostream& out, std::ostream& err) {
    try {
        const auto res = compare_runs(dirs);
        std::filesystem::create_directories(out_dir);
        detail::write_text(out_dir / "compare.csv", res.compare_csv);
        detail::write_text(out_dir / "compare_summary.csv", res.summary_csv);
        out << res.summary_csv;
        return kExitOk;
    } catch (...) {
        return report_failure(err);
    }
}

// ---- reconstruct ----

struct AffineMap {
    double min = 0.0;
    double max = 0.0;
};

// Per-image affine map of [min, max] onto [0, 255]; a flat image maps to 0.
inline std::vector<std::uint8_t> quantize(std::span<const double> v, AffineMap& map) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    map = {*lo, *hi};
    std::vector<std::uint8_t> out(v.size(), 0);
    const double range = map.max - map.min;
    if (range <= 0.0) return out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::lround((v[i] - map.min) / range * 255.0));
    return out;
}

inline Vec dequantize(std::span<const std::uint8_t> q, const AffineMap& map) {
    Vec out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = map.min + (map.max - map.min) * q[i] / 255.0;
    return out;
}

/// Sidecar `mapping.csv` rows: file,min,max.
inline std::map<std::string, AffineMap> parse_mapping_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    std::getline(ss, line);
    if (line != "file,min,max") throw CsvError("mapping.csv: unexpected header");
    std::map<std::string, AffineMap> out;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto c = detail::split_csv(line);
        if (c.size() != 3) throw CsvError("mapping.csv: expected 3 columns");
        out[c[0]] = {detail::parse_real(c[1]), detail::parse_real(c[2])};
    }
    return out;
}

/// Writes orig_<i>.pgm / recon_<i>.pgm for each requested patch (both in the
/// session's input space, re-encoded from zero under the final dictionary),
/// atom_<j>.pgm for every atom, and mapping.csv.
inline void reconstruct_to_directory(const Session& session, const std::vector<Vec>& patches,
                                     const std::vector<std::size_t>& indices,
                                     const std::filesystem::path& out_dir) {
    const std::size_t m = session.input_dim();
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(m))));
    if (side * side != m) throw DataError(DataErrc::wrong_size, "input dimension is not a square patch");
    for (std::size_t i : indices)
        if (i >= patches.size())
            throw DataError(DataErrc::wrong_size, "patch index " + std::to_string(i) + " out of range (" +
                                                      std::to_string(patches.size()) + " patches)");
    std::filesystem::create_directories(out_dir);
    const Mat& b = session.dictionary().basis;
    std::string mapping = "file,min,max\n";
    auto emit = [&](const std::string& file, std::span<const double> v) {
        AffineMap map;
        const auto bytes = quantize(v, map);
        write_pgm(out_dir / file, side, side, bytes);
        mapping += file + "," + detail::fmt_real(map.min) + "," + detail::fmt_real(map.max) + "\n";
    };
    for (std::size_t i : indices) {
        if (patches[i].size() != m) throw DataError(DataErrc::wrong_size, "patch length != input dimension");
        const Vec y = session.prepare(patches[i]);
        const Code code = fista_solve(b, y, Vec(b.cols(), 0.0), session.config().solve_opts);
        emit("orig_" + std::to_string(i) + ".pgm", y);
        emit("recon_" + std::to_string(i) + ".pgm", matvec(b, code.coeffs));
    }
    for (std::size_t j = 0; j < b.cols(); ++j) emit("atom_" + std::to_string(j) + ".pgm", b.col(j));
    detail::write_text(out_dir / "mapping.csv", mapping);
}

inline int cmd_reconstruct(const std::filesystem::path& checkpoint, const std::filesystem::path& cache,
                           const std::vector<std::size_t>& indices, const std::filesystem::path& out_dir,
                           std::ostream& out, std::ostream& err) {
    try {
        const Session s = checkpoint_load(checkpoint);
        const auto patches = load_patch_cache(cache);
        reconstruct_to_directory(s, patches, indices, out_dir);
        out << "wrote " << indices.size() << " reconstructions and " << s.dim() << " atoms to "
            << out_dir.string() << "\n";
        return kExitOk;
    } catch (...) {
        return report_failure(err);
    }
}

// ---- cache-patches ----

struct CacheRequest {
    std::string source;  // pgm-dir | cifar10 | synthetic
    std::string dataset;
    std::size_t limit = 0;
    MixtureSpec mixture{};
};

inline std::vector<Vec> build_patches(const CacheRequest& req) {
    if (req.source == "synthetic") return synthetic_mixture_patches(req.mixture);
    RunSpec spec = default_run_spec();
    spec.dataset = req.dataset;
    spec.limit = req.limit;
    if (req.source == "pgm-dir") spec.dataset_kind = DatasetKind::pgm_dir;
    else if (req.source == "cifar10") spec.dataset_kind = DatasetKind::cifar10;
    else throw ConfigError(ConfigErrc::bad_value, "cache-patches: unknown source '" + req.source + "'");
    return load_dataset(spec);
}

inline int cmd_cache_patches(const CacheRequest& req, const std::filesystem::path& out_file,
                             std::ostream& out, std::ostream& err) {
    try {
        const auto patches = build_patches(req);
        if (out_file.has_parent_path()) std::filesystem::create_directories(out_file.parent_path());
        save_patch_cache(out_file, patches);
        out << "wrote " << patches.size() << " patches to " << out_file.string() << "\n";
        return kExitOk;
    } catch (...) {
        return report_failure(err);
    }
}

}  // namespace asca
