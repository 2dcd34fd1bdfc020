#pragma once

// Session checkpoints.
//
// Layout (all integers and floats little-endian):
//   "ASCA" | u16 version | u64 payload length | payload | u32 CRC32(everything
//   before the CRC)
// payload:
//   config, matrices (u64 rows, u64 cols, rows*cols f64) for B, Σxxᵀ, Σyxᵀ,
//   dictionary counters, automaton table, ledger, warm-start code, growth log,
//   power-iteration vector.
// A file is decoded completely into a fresh Session or rejected; nothing
// partially decoded escapes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "asca/dataio.hpp"
#include "asca/pipeline.hpp"

namespace asca {

inline constexpr std::uint16_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'A', 'S', 'C', 'A'};
inline constexpr std::size_t kHeaderBytes = 4 + 2 + 8;

enum class CheckpointErrc { io, bad_magic, version_mismatch, truncated, checksum, malformed };

struct CheckpointError : std::runtime_error {
    CheckpointError(CheckpointErrc code, const std::string& what)
        : std::runtime_error("checkpoint: " + what), code(code) {}
    CheckpointErrc code;
};

namespace detail {

inline std::uint32_t crc32_of(const std::string& buf, std::size_t len) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(len)));
}

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { put_le(buf_, v); }
    void u32(std::uint32_t v) { put_le(buf_, v); }
    void u64(std::uint64_t v) { put_le(buf_, v); }
    void f64(double v) { put_le(buf_, v); }
    void size(std::size_t v) { u64(static_cast<std::uint64_t>(v)); }
    void flag(bool v) { u8(v ? 1 : 0); }
    void vec(const Vec& v) {
        size(v.size());
        for (double e : v) f64(e);
    }
    void mat(const Mat& m) {
        size(m.rows());
        size(m.cols());
        for (double e : m.data()) f64(e);
    }
    void opt_index(const std::optional<std::size_t>& v) {
        flag(v.has_value());
        size(v.value_or(0));
    }
    std::string& buffer() { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(const std::string& buf, std::size_t begin, std::size_t end)
        : buf_(buf), pos_(begin), end_(end) {}

    std::uint8_t u8() { need(1); return static_cast<std::uint8_t>(buf_[pos_++]); }
    std::uint16_t u16() { return take<std::uint16_t>(); }
    std::uint32_t u32() { return take<std::uint32_t>(); }
    std::uint64_t u64() { return take<std::uint64_t>(); }
    double f64() { return take<double>(); }
    std::size_t size() { return static_cast<std::size_t>(u64()); }
    bool flag() {
        const auto v = u8();
        if (v > 1) throw CheckpointError(CheckpointErrc::malformed, "bad flag byte");
        return v == 1;
    }
    Vec vec() {
        const std::size_t n = count(8);
        Vec v(n);
        for (double& e : v) e = f64();
        return v;
    }
    Mat mat() {
        const std::size_t r = size();
        const std::size_t c = size();
        if (c != 0 && r > (end_ - pos_) / 8 / c)
            throw CheckpointError(CheckpointErrc::truncated, "matrix larger than remaining data");
        std::vector<double> data(r * c);
        for (double& e : data) e = f64();
        return Mat(r, c, std::move(data));
    }
    std::optional<std::size_t> opt_index() {
        const bool has = flag();
        const std::size_t v = size();
        return has ? std::optional<std::size_t>(v) : std::nullopt;
    }
    // Element count whose payload (elem_bytes each) must fit in what is left.
    std::size_t count(std::size_t elem_bytes) {
        const std::size_t n = size();
        if (elem_bytes != 0 && n > (end_ - pos_) / elem_bytes)
            throw CheckpointError(CheckpointErrc::truncated, "count exceeds remaining data");
        return n;
    }
    bool at_end() const { return pos_ == end_; }

private:
    void need(std::size_t n) const {
        if (end_ - pos_ < n) throw CheckpointError(CheckpointErrc::truncated, "unexpected end of data");
    }
    template <typename T>
    T take() {
        need(sizeof(T));
        const T v = get_le<T>(buf_, pos_);
        pos_ += sizeof(T);
        return v;
    }

    const std::string& buf_;
    std::size_t pos_;
    std::size_t end_;
};

inline void write_config(Writer& w, const SessionConfig& c) {
    w.f64(c.solve_opts.lambda);
    w.f64(c.solve_opts.gamma);
    w.size(c.solve_opts.max_iters);
    w.f64(c.solve_opts.rel_tol);
    w.size(c.initial_dim);
    w.size(c.actions.size());
    for (auto a : c.actions) w.size(a);
    w.f64(c.threshold);
    w.f64(c.sigma);
    w.size(c.controller_period);
    w.size(c.alternations_max);
    w.f64(c.outer_rel_tol);
    w.u64(c.seed);
    w.flag(c.dynamic_mode);
    w.flag(c.controller);
    w.flag(c.unit_normalize);
    w.size(c.odl_passes);
}

inline SessionConfig read_config(Reader& r) {
    SessionConfig c;
    c.solve_opts.lambda = r.f64();
    c.solve_opts.gamma = r.f64();
    c.solve_opts.max_iters = r.size();
    c.solve_opts.rel_tol = r.f64();
    c.initial_dim = r.size();
    c.actions.resize(r.count(8));
    for (auto& a : c.actions) a = r.size();
    c.threshold = r.f64();
    c.sigma = r.f64();
    c.controller_period = r.size();
    c.alternations_max = r.size();
    c.outer_rel_tol = r.f64();
    c.seed = r.u64();
    c.dynamic_mode = r.flag();
    c.controller = r.flag();
    c.unit_normalize = r.flag();
    c.odl_passes = r.size();
    return c;
}

}  // namespace detail

inline std::string encode_checkpoint(const Session& s) {
    detail::Writer w;
    for (char ch : kCheckpointMagic) w.u8(static_cast<std::uint8_t>(ch));
    w.u16(kCheckpointVersion);
    w.u64(0);  // payload length, patched below

    detail::write_config(w, s.config());

    const Dictionary& d = s.dictionary();
    w.mat(d.basis);
    w.mat(d.gram_acc);
    w.mat(d.cross_acc);
    w.u64(d.samples_seen);
    w.f64(d.unit_c);

    w.flag(s.automaton().has_value());
    if (const auto& aut = s.automaton()) {
        w.f64(aut->sigma);
        w.f64(aut->threshold);
        w.f64(aut->memory_init);
        w.size(aut->states.size());
        for (const auto& st : aut->states) {
            w.f64(st.lb);
            w.f64(st.ub);
            w.f64(st.memory);
            w.f64(st.best_err);
            w.size(st.action_ell);
        }
    }

    const SessionLedger& l = s.ledger();
    w.f64(l.err_sum);
    w.u64(l.k);
    w.size(l.series.size());
    for (const auto& rec : l.series) {
        w.u64(rec.k);
        w.f64(rec.sq_error);
        w.f64(rec.tmse);
        w.size(rec.dim);
        w.opt_index(rec.state_visited);
        w.opt_index(rec.action_taken);
    }

    w.vec(s.last_code());

    w.size(s.growths().size());
    for (const auto& g : s.growths()) {
        w.u64(g.at_sample);
        w.size(g.old_dim);
        w.size(g.added);
        w.u64(g.rng_seed_used);
    }

    w.vec(s.power_vector());

    std::string& buf = w.buffer();
    std::string len;
    detail::put_le<std::uint64_t>(len, buf.size() - kHeaderBytes);
    buf.replace(6, 8, len);
    const std::uint32_t crc = detail::crc32_of(buf, buf.size());
    detail::put_le(buf, crc);
    return buf;
}

inline Session decode_checkpoint(const std::string& buf) {
    if (buf.size() < 4 || buf.compare(0, 4, kCheckpointMagic, 4) != 0)
        throw CheckpointError(CheckpointErrc::bad_magic, "bad magic bytes");
    if (buf.size() < 6) throw CheckpointError(CheckpointErrc::truncated, "file too short");
    const auto version = detail::get_le<std::uint16_t>(buf, 4);
    if (version != kCheckpointVersion)
        throw CheckpointError(CheckpointErrc::version_mismatch,
                              "format version " + std::to_string(version) + ", expected " +
                                  std::to_string(kCheckpointVersion));
    if (buf.size() < kHeaderBytes) throw CheckpointError(CheckpointErrc::truncated, "header cut off");
    const auto payload_len = detail::get_le<std::uint64_t>(buf, 6);
    if (payload_len > buf.size() - kHeaderBytes || buf.size() - kHeaderBytes - payload_len < 4)
        throw CheckpointError(CheckpointErrc::truncated, "file shorter than declared payload");
    const std::size_t body_end = kHeaderBytes + static_cast<std::size_t>(payload_len);
    if (buf.size() != body_end + 4)
        throw CheckpointError(CheckpointErrc::malformed, "trailing bytes after CRC");
    const auto stored_crc = detail::get_le<std::uint32_t>(buf, body_end);
    if (stored_crc != detail::crc32_of(buf, body_end))
        throw CheckpointError(CheckpointErrc::checksum, "CRC32 mismatch");

    detail::Reader r(buf, kHeaderBytes, body_end);
    SessionConfig config = detail::read_config(r);

    Dictionary d;
    d.basis = r.mat();
    d.gram_acc = r.mat();
    d.cross_acc = r.mat();
    d.samples_seen = r.u64();
    d.unit_c = r.f64();
    const std::size_t n = d.basis.cols();
    if (d.gram_acc.rows() != n || d.gram_acc.cols() != n || d.cross_acc.rows() != d.basis.rows() ||
        d.cross_acc.cols() != n)
        throw CheckpointError(CheckpointErrc::malformed, "inconsistent dictionary shapes");

    std::optional<Automaton> aut;
    if (r.flag()) {
        Automaton a;
        a.sigma = r.f64();
        a.threshold = r.f64();
        a.memory_init = r.f64();
        a.states.resize(r.count(40));
        for (auto& st : a.states) {
            st.lb = r.f64();
            st.ub = r.f64();
            st.memory = r.f64();
            st.best_err = r.f64();
            st.action_ell = r.size();
        }
        aut = std::move(a);
    }

    SessionLedger l;
    l.err_sum = r.f64();
    l.k = r.u64();
    l.series.resize(r.count(8 * 4 + 2 * 9));
    for (auto& rec : l.series) {
        rec.k = r.u64();
        rec.sq_error = r.f64();
        rec.tmse = r.f64();
        rec.dim = r.size();
        rec.state_visited = r.opt_index();
        rec.action_taken = r.opt_index();
    }

    Vec last = r.vec();
    if (last.size() > n) throw CheckpointError(CheckpointErrc::malformed, "warm-start code too long");

    std::vector<GrowthRecord> growths(r.count(32));
    for (auto& g : growths) {
        g.at_sample = r.u64();
        g.old_dim = r.size();
        g.added = r.size();
        g.rng_seed_used = r.u64();
    }
    Vec power = r.vec();
    if (power.size() > n) throw CheckpointError(CheckpointErrc::malformed, "power vector too long");
    if (!r.at_end()) throw CheckpointError(CheckpointErrc::malformed, "trailing bytes before CRC");

    return Session(std::move(config), std::move(d), std::move(aut), std::move(l), std::move(last),
                   std::move(growths), std::move(power));
}

inline void checkpoint_save(const Session& s, const std::filesystem::path& path) {
    const std::string buf = encode_checkpoint(s);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(CheckpointErrc::io, "cannot write " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError(CheckpointErrc::io, "write failed: " + path.string());
}

inline Session checkpoint_load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointErrc::io, "cannot open " + path.string());
    const std::string buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_checkpoint(buf);
}

}  // namespace asca
