#pragma once

// Online dictionary learning with sufficient statistics and block-coordinate
// column updates under ‖b_j‖² ≤ c, plus column growth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "asca/random.hpp"
#include "asca/tensor.hpp"

namespace asca {

inline constexpr double kDeadAtomGram = 1e-10;

struct Dictionary {
    Mat basis;      // m × n
    Mat gram_acc;   // n × n, Σ x xᵀ
    Mat cross_acc;  // m × n, Σ y xᵀ
    std::uint64_t samples_seen = 0;
    double unit_c = 1.0;

    std::size_t input_dim() const noexcept { return basis.rows(); }
    std::size_t atoms() const noexcept { return basis.cols(); }

    friend bool operator==(const Dictionary&, const Dictionary&) = default;
};

struct GrowthRecord {
    std::uint64_t at_sample = 0;
    std::size_t old_dim = 0;
    std::size_t added = 0;
    std::uint64_t rng_seed_used = 0;

    friend bool operator==(const GrowthRecord&, const GrowthRecord&) = default;
};

namespace detail {

// Fills columns [first, first+count) of `b` with uniform(−1,1) entries drawn
// from (seed, column-local counter), each scaled to unit ℓ2 norm.
inline void fill_random_unit_columns(Mat& b, std::size_t first, std::size_t count,
                                     std::uint64_t seed) {
    const std::size_t m = b.rows();
    Vec col(m);
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t i = 0; i < m; ++i) col[i] = uniform_pm1(seed, k * m + i);
        const double nrm = norm2(col);
        for (std::size_t i = 0; i < m; ++i) b(i, first + k) = col[i] / nrm;
    }
}

}  // namespace detail

inline Dictionary init_dictionary(std::size_t m, std::size_t n, std::uint64_t seed) {
    if (m == 0 || n == 0) throw DimensionError("init_dictionary: m and n must be >= 1");
    Dictionary d;
    d.basis = Mat(m, n);
    detail::fill_random_unit_columns(d.basis, 0, n, seed);
    d.gram_acc = Mat(n, n);
    d.cross_acc = Mat(m, n);
    return d;
}

inline void accumulate(Dictionary& d, std::span<const double> x, std::span<const double> y) {
    const std::size_t n = d.atoms();
    const std::size_t m = d.input_dim();
    require_dims(x.size() == n, "accumulate: x.len != atoms");
    require_dims(y.size() == m, "accumulate: y.len != input dim");
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] == 0.0) continue;
        auto row = d.gram_acc.row(i);
        for (std::size_t j = 0; j < n; ++j) row[j] += x[i] * x[j];
    }
    for (std::size_t r = 0; r < m; ++r) {
        auto row = d.cross_acc.row(r);
        for (std::size_t j = 0; j < n; ++j) row[j] += y[r] * x[j];
    }
    ++d.samples_seen;
}

/// ½ tr(BᵀB·G) − tr(Bᵀ·C): the quadratic the column updates minimize.
inline double surrogate(const Dictionary& d) {
    const std::size_t n = d.atoms();
    const std::size_t m = d.input_dim();
    double quad = 0.0;
    double lin = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const auto brow = d.basis.row(r);
        const auto crow = d.cross_acc.row(r);
        // (B G)_{r,:} · B_{r,:}
        for (std::size_t j = 0; j < n; ++j) {
            double bg = 0.0;
            for (std::size_t l = 0; l < n; ++l) bg += brow[l] * d.gram_acc(l, j);
            quad += bg * brow[j];
            lin += brow[j] * crow[j];
        }
    }
    return 0.5 * quad - lin;
}

/// Block-coordinate descent over columns in ascending order:
///   u = b_j + (c_j − B g_j) / G_jj,  b_j = u / max(1, ‖u‖/√c).
/// Columns whose G_jj ≤ kDeadAtomGram are left untouched.
inline void odl_update(Dictionary& d, std::size_t passes = 1) {
    const std::size_t n = d.atoms();
    const std::size_t m = d.input_dim();
    const double radius = std::sqrt(d.unit_c);
    Vec u(m);
    std::vector<std::size_t> support;
    support.reserve(n);
    for (std::size_t pass = 0; pass < passes; ++pass) {
        for (std::size_t j = 0; j < n; ++j) {
            const double gjj = d.gram_acc(j, j);
            if (gjj <= kDeadAtomGram) continue;
            // g_j is typically sparse; skipping exact zeros does not change the sums.
            support.clear();
            for (std::size_t l = 0; l < n; ++l)
                if (d.gram_acc(l, j) != 0.0) support.push_back(l);
            for (std::size_t r = 0; r < m; ++r) {
                const auto brow = d.basis.row(r);
                double bg = 0.0;
                for (std::size_t l : support) bg += brow[l] * d.gram_acc(l, j);
                u[r] = brow[j] + (d.cross_acc(r, j) - bg) / gjj;
            }
            const double scale = std::max(1.0, norm2(u) / radius);
            for (std::size_t r = 0; r < m; ++r) d.basis(r, j) = u[r] / scale;
        }
    }
}

/// Appends `ell` random unit-norm atoms. Accumulators are zero-padded, so
/// every stored code is read as zero on the new atoms and every earlier
/// reconstruction B·x is unchanged.
inline GrowthRecord grow(Dictionary& d, std::size_t ell, std::uint64_t seed) {
    if (ell < 1) throw std::invalid_argument("grow: ell must be >= 1");
    const std::size_t n = d.atoms();
    const std::size_t m = d.input_dim();
    Mat basis = d.basis.padded(m, n + ell);
    detail::fill_random_unit_columns(basis, n, ell, seed);
    d.basis = std::move(basis);
    d.gram_acc = d.gram_acc.padded(n + ell, n + ell);
    d.cross_acc = d.cross_acc.padded(m, n + ell);
    return GrowthRecord{d.samples_seen, n, ell, seed};
}

inline Vec zero_pad(std::span<const double> x, std::size_t n) {
    require_dims(n >= x.size(), "zero_pad: target shorter than code");
    Vec out(n, 0.0);
    std::copy(x.begin(), x.end(), out.begin());
    return out;
}

}  // namespace asca
