#pragma once

// Dense row-major vector/matrix kernels used by the solvers and learners.
// Summation order is fixed (row-major, left to right) so that results are
// bit-reproducible across runs and across checkpoint round trips.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asca/random.hpp"

namespace asca {

using Vec = std::vector<double>;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void require_dims(bool ok, const char* what) {
    if (!ok) throw DimensionError(std::string("dimension mismatch: ") + what);
}

class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        require_dims(data_.size() == rows_ * cols_, "Mat data length != rows*cols");
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    Vec col(std::size_t c) const {
        Vec out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
        return out;
    }
    void set_col(std::size_t c, std::span<const double> v) {
        require_dims(v.size() == rows_, "set_col length");
        for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    // Returns a copy enlarged to (rows, cols) with existing entries kept in
    // place and the new region zero.
    Mat padded(std::size_t rows, std::size_t cols) const {
        require_dims(rows >= rows_ && cols >= cols_, "padded target smaller than source");
        Mat out(rows, cols);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out(r, c) = (*this)(r, c);
        return out;
    }

    bool all_finite() const noexcept {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    require_dims(a.size() == b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm1(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += std::fabs(v);
    return s;
}

inline Vec matvec(const Mat& m, std::span<const double> v) {
    require_dims(m.cols() == v.size(), "matvec: M.cols != v.len");
    Vec out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * v[c];
        out[r] = s;
    }
    return out;
}

// Mᵀv, accumulated row by row.
inline Vec matvec_t(const Mat& m, std::span<const double> v) {
    require_dims(m.rows() == v.size(), "matvec_t: M.rows != v.len");
    Vec out(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double vr = v[r];
        if (vr == 0.0) continue;
        const auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c] * vr;
    }
    return out;
}

// ‖y − Bx‖²₂ (no ½ factor).
inline double residual_sq(std::span<const double> y, const Mat& b, std::span<const double> x) {
    require_dims(y.size() == b.rows(), "residual_sq: y.len != B.rows");
    require_dims(x.size() == b.cols(), "residual_sq: x.len != B.cols");
    double s = 0.0;
    for (std::size_t r = 0; r < b.rows(); ++r) {
        const auto row = b.row(r);
        double bx = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) bx += row[c] * x[c];
        const double d = y[r] - bx;
        s += d * d;
    }
    return s;
}

inline constexpr double kLipschitzSafety = 1.01;

/// Power-iteration estimate of λ_max(BᵀB), inflated by kLipschitzSafety.
/// An all-zero B yields 1.0.
///
/// `warm`, when non-null, supplies the start vector (used if its length is
/// B.cols and it is nonzero) and receives the final iterate, so consecutive
/// calls on a slowly changing B converge in a few iterations.
inline double lipschitz_bound(const Mat& b, std::size_t iters = 200, double tol = 1e-6,
                              Vec* warm = nullptr) {
    const std::size_t n = b.cols();
    if (n == 0 || b.rows() == 0) return 1.0;
    bool any = false;
    for (double v : b.data())
        if (v != 0.0) { any = true; break; }
    if (!any) return 1.0;

    Vec v;
    if (warm && warm->size() == n && norm2(*warm) > 0.0) {
        v = *warm;
    } else {
        // Fixed pseudo-random start so the iteration cannot begin orthogonal
        // to the top eigenvector for structured B.
        v.resize(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = 0.5 + 0.5 * uniform_pm1(0x5eedULL, i);
    }
    const double nv = norm2(v);
    for (double& e : v) e /= nv;

    double est = 0.0;
    for (std::size_t it = 0; it < std::max<std::size_t>(iters, 1); ++it) {
        const Vec bv = matvec(b, v);
        const double rayleigh = dot(bv, bv);
        Vec w = matvec_t(b, bv);
        const double nw = norm2(w);
        if (nw == 0.0) break;  // start vector in the null space; keep the estimate
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
        const double prev = est;
        est = std::max(rayleigh, nw);  // both are lower bounds on λ_max
        if (it > 0 && std::fabs(est - prev) <= tol * est) break;
    }
    if (warm) *warm = v;
    if (est <= 0.0) return 1.0;
    return est * kLipschitzSafety;
}

}  // namespace asca
