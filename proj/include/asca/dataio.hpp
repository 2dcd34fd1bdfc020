#pragma once

// Dataset ingestion: grayscale images → 40×40 → four 20×20 patches → R⁴⁰⁰.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "asca/random.hpp"
#include "asca/tensor.hpp"

namespace asca {

inline constexpr std::size_t kImageSide = 40;
inline constexpr std::size_t kPatchSide = 20;
inline constexpr std::size_t kPatchLen = kPatchSide * kPatchSide;
inline constexpr std::size_t kCifarRecord = 3073;
inline constexpr std::size_t kCifarSide = 32;

enum class DataErrc {
    io,
    bad_magic,
    unsupported_format,
    bad_header,
    truncated,
    zero_dimensions,
    bad_length,
    wrong_size,
};

struct DataError : std::runtime_error {
    DataError(DataErrc code, const std::string& what) : std::runtime_error(what), code(code) {}
    DataErrc code;
};

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;  // row-major, values in [0, 1]

    double at(std::size_t x, std::size_t y) const noexcept { return pixels[y * width + x]; }
    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

struct PatchSource {
    std::size_t image = 0;
    std::size_t patch = 0;
    friend bool operator==(const PatchSource&, const PatchSource&) = default;
};

struct PatchStream {
    std::vector<Vec> patches;
    std::vector<PatchSource> source_ids;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(DataErrc::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Next whitespace-delimited PNM header token, skipping '#' comments.
inline std::string pnm_token(const std::string& buf, std::size_t& pos) {
    for (;;) {
        while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
        if (pos < buf.size() && buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    const std::size_t start = pos;
    while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    return buf.substr(start, pos - start);
}

inline std::size_t pnm_number(const std::string& buf, std::size_t& pos, const char* field) {
    const std::string tok = pnm_token(buf, pos);
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw DataError(DataErrc::bad_header, std::string("PGM: bad ") + field);
    return std::stoul(tok);
}

}  // namespace detail

/// Binary PGM (P5). 16-bit samples are big-endian.
inline GrayImage parse_pgm(const std::string& buf) {
    if (buf.size() < 2 || buf[0] != 'P')
        throw DataError(DataErrc::bad_magic, "PGM: missing P magic");
    if (buf[1] != '5')
        throw DataError(DataErrc::unsupported_format,
                        std::string("PGM: unsupported format P") + buf[1] + " (only P5)");
    std::size_t pos = 2;
    const std::size_t w = detail::pnm_number(buf, pos, "width");
    const std::size_t h = detail::pnm_number(buf, pos, "height");
    const std::size_t maxval = detail::pnm_number(buf, pos, "maxval");
    if (w == 0 || h == 0) throw DataError(DataErrc::zero_dimensions, "PGM: zero dimensions");
    if (maxval == 0 || maxval > 65535) throw DataError(DataErrc::bad_header, "PGM: bad maxval");
    ++pos;  // single whitespace before raster
    const std::size_t bps = maxval < 256 ? 1 : 2;
    const std::size_t need = w * h * bps;
    if (pos > buf.size() || buf.size() - pos < need)
        throw DataError(DataErrc::truncated, "PGM: truncated raster");

    GrayImage img{w, h, std::vector<double>(w * h)};
    const auto* raw = reinterpret_cast<const unsigned char*>(buf.data() + pos);
    for (std::size_t i = 0; i < w * h; ++i) {
        const unsigned v = bps == 1 ? raw[i] : (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1];
        img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return img;
}

inline GrayImage load_pgm(const std::filesystem::path& path) {
    return parse_pgm(detail::read_file(path));
}

inline void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
                      const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() != width * height)
        throw DataError(DataErrc::wrong_size, "write_pgm: byte count != width*height");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(DataErrc::io, "cannot write " + path.string());
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError(DataErrc::io, "write failed: " + path.string());
}

inline std::vector<GrayImage> parse_cifar10_batch(const std::string& buf) {
    if (buf.size() % kCifarRecord != 0)
        throw DataError(DataErrc::bad_length, "CIFAR-10: length " + std::to_string(buf.size()) +
                                                  " is not a multiple of 3073");
    constexpr std::size_t plane = kCifarSide * kCifarSide;
    std::vector<GrayImage> out;
    out.reserve(buf.size() / kCifarRecord);
    const auto* raw = reinterpret_cast<const unsigned char*>(buf.data());
    for (std::size_t off = 0; off < buf.size(); off += kCifarRecord) {
        const unsigned char* r = raw + off + 1;  // skip label
        GrayImage img{kCifarSide, kCifarSide, std::vector<double>(plane)};
        for (std::size_t i = 0; i < plane; ++i) {
            const double lum = 0.299 * r[i] + 0.587 * r[plane + i] + 0.114 * r[2 * plane + i];
            img.pixels[i] = std::clamp(lum / 255.0, 0.0, 1.0);
        }
        out.push_back(std::move(img));
    }
    return out;
}

inline std::vector<GrayImage> load_cifar10_batch(const std::filesystem::path& path) {
    return parse_cifar10_batch(detail::read_file(path));
}

/// Bilinear resampling with pixel-center alignment.
inline GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w, std::size_t out_h) {
    if (img.width == 0 || img.height == 0)
        throw DataError(DataErrc::zero_dimensions, "resize: empty image");
    GrayImage out{out_w, out_h, std::vector<double>(out_w * out_h)};
    const double sx = static_cast<double>(img.width) / static_cast<double>(out_w);
    const double sy = static_cast<double>(img.height) / static_cast<double>(out_h);
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, double(img.height - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, double(img.width - 1));
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            const double top = img.at(x0, y0) * (1.0 - wx) + img.at(x1, y0) * wx;
            const double bot = img.at(x0, y1) * (1.0 - wx) + img.at(x1, y1) * wx;
            out.pixels[oy * out_w + ox] = std::clamp(top * (1.0 - wy) + bot * wy, 0.0, 1.0);
        }
    }
    return out;
}

inline GrayImage resize_to_40(const GrayImage& img) {
    return resize_bilinear(img, kImageSide, kImageSide);
}

/// Quadrants in order top-left, top-right, bottom-left, bottom-right, each
/// flattened row-major.
inline std::vector<Vec> extract_patches(const GrayImage& img) {
    if (img.width != kImageSide || img.height != kImageSide)
        throw DataError(DataErrc::wrong_size, "extract_patches: image must be 40x40, got " +
                                                  std::to_string(img.width) + "x" +
                                                  std::to_string(img.height));
    std::vector<Vec> out(4, Vec(kPatchLen));
    for (std::size_t q = 0; q < 4; ++q) {
        const std::size_t ox = (q % 2) * kPatchSide;
        const std::size_t oy = (q / 2) * kPatchSide;
        for (std::size_t y = 0; y < kPatchSide; ++y)
            for (std::size_t x = 0; x < kPatchSide; ++x)
                out[q][y * kPatchSide + x] = img.at(ox + x, oy + y);
    }
    return out;
}

inline GrayImage assemble_patches(const std::vector<Vec>& patches) {
    if (patches.size() != 4) throw DataError(DataErrc::wrong_size, "assemble_patches: need 4 patches");
    GrayImage img{kImageSide, kImageSide, std::vector<double>(kImageSide * kImageSide)};
    for (std::size_t q = 0; q < 4; ++q) {
        if (patches[q].size() != kPatchLen)
            throw DataError(DataErrc::wrong_size, "assemble_patches: patch length != 400");
        const std::size_t ox = (q % 2) * kPatchSide;
        const std::size_t oy = (q / 2) * kPatchSide;
        for (std::size_t y = 0; y < kPatchSide; ++y)
            for (std::size_t x = 0; x < kPatchSide; ++x)
                img.pixels[(oy + y) * kImageSide + ox + x] = patches[q][y * kPatchSide + x];
    }
    return img;
}

inline PatchStream make_patch_stream(const std::vector<GrayImage>& images) {
    PatchStream s;
    for (std::size_t i = 0; i < images.size(); ++i) {
        auto quads = extract_patches(resize_to_40(images[i]));
        for (std::size_t q = 0; q < quads.size(); ++q) {
            s.patches.push_back(std::move(quads[q]));
            s.source_ids.push_back({i, q});
        }
    }
    return s;
}

/// All *.pgm files in `dir`, ordered by file name.
inline std::vector<GrayImage> load_pgm_dir(const std::filesystem::path& dir, std::size_t limit = 0) {
    if (!std::filesystem::is_directory(dir))
        throw DataError(DataErrc::io, "not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
    if (limit > 0 && files.size() > limit) files.resize(limit);
    std::vector<GrayImage> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(load_pgm(f));
    return out;
}

// ---- patch cache: "PTCH", u32 count, then 400 little-endian f64 per patch ----

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>(bits & 0xff));
        bits = static_cast<U>(bits >> 8);
    }
}

template <typename T>
T get_le(const std::string& in, std::size_t pos) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        bits |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i));
    return std::bit_cast<T>(bits);
}

}  // namespace detail

inline std::string encode_patch_cache(const std::vector<Vec>& patches) {
    std::string out = "PTCH";
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(patches.size()));
    for (const auto& p : patches) {
        if (p.size() != kPatchLen) throw DataError(DataErrc::wrong_size, "patch cache: patch length != 400");
        for (double v : p) detail::put_le<double>(out, v);
    }
    return out;
}

inline std::vector<Vec> decode_patch_cache(const std::string& buf) {
    if (buf.size() < 8 || buf.compare(0, 4, "PTCH") != 0)
        throw DataError(DataErrc::bad_magic, "patch cache: bad magic");
    const auto count = detail::get_le<std::uint32_t>(buf, 4);
    const std::size_t need = 8 + std::size_t(count) * kPatchLen * 8;
    if (buf.size() < need) throw DataError(DataErrc::truncated, "patch cache: truncated");
    if (buf.size() > need) throw DataError(DataErrc::bad_length, "patch cache: trailing bytes");
    std::vector<Vec> out(count, Vec(kPatchLen));
    std::size_t pos = 8;
    for (auto& p : out)
        for (double& v : p) {
            v = detail::get_le<double>(buf, pos);
            pos += 8;
        }
    return out;
}

inline void save_patch_cache(const std::filesystem::path& path, const std::vector<Vec>& patches) {
    const std::string buf = encode_patch_cache(patches);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(DataErrc::io, "cannot write " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError(DataErrc::io, "write failed: " + path.string());
}

inline std::vector<Vec> load_patch_cache(const std::filesystem::path& path) {
    return decode_patch_cache(detail::read_file(path));
}

// ---- synthetic data ----

struct MixtureSpec {
    std::size_t count = 400;
    std::size_t clusters = 64;
    double noise = 0.1;  // per-entry noise std relative to the unit-norm center
    std::uint64_t seed = 7;
};

/// Gaussian-mixture patches: each sample is a random cluster center (a
/// unit-norm Gaussian vector in R⁴⁰⁰) plus isotropic Gaussian noise. Values
/// are not confined to [0, 1]; the stream stands in for image patches when no
/// dataset is at hand.
inline std::vector<Vec> synthetic_mixture_patches(const MixtureSpec& spec) {
    const std::uint64_t center_seed = derive_seed(spec.seed, 1);
    const std::uint64_t pick_seed = derive_seed(spec.seed, 2);
    const std::uint64_t noise_seed = derive_seed(spec.seed, 3);
    std::vector<Vec> centers(spec.clusters, Vec(kPatchLen));
    for (std::size_t c = 0; c < spec.clusters; ++c) {
        for (std::size_t i = 0; i < kPatchLen; ++i) centers[c][i] = normal01(center_seed, c * kPatchLen + i);
        const double nrm = norm2(centers[c]);
        for (double& v : centers[c]) v /= nrm;
    }
    const double per_entry = spec.noise / std::sqrt(static_cast<double>(kPatchLen));
    std::vector<Vec> out(spec.count, Vec(kPatchLen));
    for (std::size_t s = 0; s < spec.count; ++s) {
        const auto c = static_cast<std::size_t>(uniform01(pick_seed, s) * spec.clusters);
        for (std::size_t i = 0; i < kPatchLen; ++i)
            out[s][i] = centers[c][i] + per_entry * normal01(noise_seed, s * kPatchLen + i);
    }
    return out;
}

}  // namespace asca
