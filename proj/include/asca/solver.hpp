#pragma once

// Inference-phase solvers for ½‖y − Bx‖² + λ‖x‖₁ (FISTA) and its temporally
// regularized variant ½‖y − Bx‖² + γ‖x − A x_prev‖₁ + λ‖x‖₁ (proximal ISTA).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asca/tensor.hpp"

namespace asca {

struct NumericError : std::runtime_error {
    NumericError(const std::string& what, std::size_t iteration)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration(iteration) {}
    std::size_t iteration;
};

inline constexpr double kNonzeroEps = 1e-12;

struct SolveOpts {
    double lambda = 0.1;
    double gamma = 0.0;
    std::size_t max_iters = 500;
    double rel_tol = 1e-6;

    friend bool operator==(const SolveOpts&, const SolveOpts&) = default;
};

inline void validate(const SolveOpts& o) {
    if (!(o.lambda > 0.0)) throw std::invalid_argument("SolveOpts: lambda must be > 0");
    if (!(o.gamma >= 0.0)) throw std::invalid_argument("SolveOpts: gamma must be >= 0");
    if (!(o.rel_tol > 0.0)) throw std::invalid_argument("SolveOpts: rel_tol must be > 0");
}

struct Code {
    Vec coeffs;
    double sq_error = 0.0;   // ‖y − Bx‖² at solve time
    std::size_t nnz = 0;     // |x_i| > kNonzeroEps
    std::size_t iters_used = 0;
};

inline std::size_t count_nonzero(std::span<const double> x) {
    return static_cast<std::size_t>(
        std::count_if(x.begin(), x.end(), [](double v) { return std::fabs(v) > kNonzeroEps; }));
}

inline double soft_threshold(double v, double tau) noexcept {
    const double mag = std::fabs(v) - tau;
    if (mag <= 0.0) return 0.0;
    return v > 0.0 ? mag : -mag;
}

inline double prox_two_l1_objective(double x, double v, double z, double lam, double gam) noexcept {
    const double d = x - v;
    return 0.5 * d * d + lam * std::fabs(x) + gam * std::fabs(x - z);
}

/// argmin_x ½(x−v)² + lam·|x| + gam·|x−z|.
///
/// The objective is piecewise quadratic with kinks at 0 and z, so the
/// minimizer is either a kink or the stationary point of one smooth piece.
/// All candidates are scored and ties go to the smaller magnitude.
inline double prox_two_l1(double v, double z, double lam, double gam) noexcept {
    double best = 0.0;
    double best_obj = prox_two_l1_objective(0.0, v, z, lam, gam);
    auto consider = [&](double x) {
        const double obj = prox_two_l1_objective(x, v, z, lam, gam);
        if (obj < best_obj || (obj == best_obj && std::fabs(x) < std::fabs(best))) {
            best = x;
            best_obj = obj;
        }
    };
    consider(z);
    for (const double s : {-1.0, 1.0}) {
        for (const double t : {-1.0, 1.0}) {
            const double x = v - lam * s - gam * t;
            const bool sign_ok = s > 0 ? x > 0.0 : x < 0.0;
            const bool side_ok = t > 0 ? x > z : x < z;
            if (sign_ok && side_ok) consider(x);
        }
    }
    return best;
}

inline double energy(const Mat& b, std::span<const double> y, std::span<const double> x,
                     double lambda) {
    return 0.5 * residual_sq(y, b, x) + lambda * norm1(x);
}

namespace detail {

inline double dynamic_energy(const Mat& b, std::span<const double> y, std::span<const double> x,
                             std::span<const double> z, double lambda, double gamma) {
    double temporal = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) temporal += std::fabs(x[i] - z[i]);
    return energy(b, y, x, lambda) + gamma * temporal;
}

inline bool converged(double prev, double cur, double rel_tol) {
    const double scale = std::max(std::fabs(prev), std::fabs(cur));
    return std::fabs(prev - cur) <= rel_tol * scale;
}

// ∇ of ½‖y − Bx‖²: Bᵀ(Bx − y).
inline Vec smooth_gradient(const Mat& b, std::span<const double> y, std::span<const double> x) {
    Vec r = matvec(b, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    return matvec_t(b, r);
}

inline Code finish(const Mat& b, std::span<const double> y, Vec x, std::size_t iters) {
    Code c;
    c.sq_error = residual_sq(y, b, x);
    c.nnz = count_nonzero(x);
    c.iters_used = iters;
    c.coeffs = std::move(x);
    return c;
}

}  // namespace detail

/// FISTA for the Lasso, in the monotone form: the accepted iterate is the
/// lower-energy of the new proximal point and the previous iterate, while the
/// momentum sequence t_{k+1} = (1 + √(1 + 4t_k²))/2 is unchanged. The returned
/// energy is therefore never above that of x0 or of the zero vector.
///
/// `lipschitz` > 0 overrides the step-size bound (otherwise estimated from B);
/// `energy_log`, when given, receives the accepted energy after every
/// iteration.
inline Code fista_solve(const Mat& b, std::span<const double> y, std::span<const double> x0,
                        const SolveOpts& opts, double lipschitz = 0.0,
                        std::vector<double>* energy_log = nullptr) {
    validate(opts);
    require_dims(b.rows() == y.size(), "fista_solve: B.rows != y.len");
    require_dims(b.cols() == x0.size(), "fista_solve: x0.len != B.cols");
    const std::size_t n = b.cols();

    Vec x(x0.begin(), x0.end());
    double e_x = energy(b, y, x, opts.lambda);
    {
        const Vec zero(n, 0.0);
        const double e_zero = energy(b, y, zero, opts.lambda);
        if (e_zero < e_x) {
            x = zero;
            e_x = e_zero;
        }
    }
    if (n == 0) return detail::finish(b, y, std::move(x), 0);

    const double lip = lipschitz > 0.0 ? lipschitz : lipschitz_bound(b);
    const double tau = opts.lambda / lip;
    Vec w = x;  // extrapolated point
    Vec z(n);
    double t = 1.0;
    std::size_t it = 0;
    while (it < opts.max_iters) {
        ++it;
        const Vec g = detail::smooth_gradient(b, y, w);
        for (std::size_t i = 0; i < n; ++i) z[i] = soft_threshold(w[i] - g[i] / lip, tau);
        const double e_z = energy(b, y, z, opts.lambda);
        if (!std::isfinite(e_z)) throw NumericError("fista_solve: non-finite energy", it);

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double e_prev = e_x;
        Vec x_prev = x;
        if (e_z <= e_x) {
            x = z;
            e_x = e_z;
        }
        for (std::size_t i = 0; i < n; ++i)
            w[i] = x[i] + (t / t_next) * (z[i] - x[i]) + ((t - 1.0) / t_next) * (x[i] - x_prev[i]);
        t = t_next;
        if (energy_log) energy_log->push_back(e_x);
        if (detail::converged(e_prev, e_z, opts.rel_tol)) break;
    }
    return detail::finish(b, y, std::move(x), it);
}

/// Proximal-gradient (ISTA) solve of the temporally regularized problem,
/// starting from A·x_prev. Each coordinate step is prox_two_l1 with the
/// anchor z_i = (A·x_prev)_i.
inline Code dynamic_solve(const Mat& b, std::span<const double> y, std::span<const double> x_prev,
                          const Mat& a, const SolveOpts& opts, double lipschitz = 0.0) {
    validate(opts);
    require_dims(b.rows() == y.size(), "dynamic_solve: B.rows != y.len");
    require_dims(a.rows() == a.cols(), "dynamic_solve: A not square");
    require_dims(a.cols() == b.cols(), "dynamic_solve: A.cols != B.cols");
    require_dims(x_prev.size() == b.cols(), "dynamic_solve: x_prev.len != B.cols");
    const std::size_t n = b.cols();

    const Vec anchor = matvec(a, x_prev);
    Vec x = anchor;
    double e_x = detail::dynamic_energy(b, y, x, anchor, opts.lambda, opts.gamma);
    if (n == 0) return detail::finish(b, y, std::move(x), 0);

    const double lip = lipschitz > 0.0 ? lipschitz : lipschitz_bound(b);
    const double lam = opts.lambda / lip;
    const double gam = opts.gamma / lip;
    Vec next(n);
    std::size_t it = 0;
    while (it < opts.max_iters) {
        ++it;
        const Vec g = detail::smooth_gradient(b, y, x);
        for (std::size_t i = 0; i < n; ++i)
            next[i] = prox_two_l1(x[i] - g[i] / lip, anchor[i], lam, gam);
        const double e_next = detail::dynamic_energy(b, y, next, anchor, opts.lambda, opts.gamma);
        if (!std::isfinite(e_next)) throw NumericError("dynamic_solve: non-finite energy", it);
        const double e_prev = e_x;
        x.swap(next);
        e_x = e_next;
        if (detail::converged(e_prev, e_x, opts.rel_tol)) break;
    }
    return detail::finish(b, y, std::move(x), it);
}

}  // namespace asca
