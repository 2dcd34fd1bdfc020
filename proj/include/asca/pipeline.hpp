#pragma once

// Streaming sparse coding with controller-driven dictionary growth.
//
// Per sample: alternate code inference and dictionary update until the
// energy settles, freeze the sample's squared residual into the ledger, and
// every `controller_period` samples hand the running T-MSE to the automaton;
// a returned action grows the dictionary by ℓ atoms.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asca/automaton.hpp"
#include "asca/dictionary.hpp"
#include "asca/solver.hpp"
#include "asca/tensor.hpp"

namespace asca {

struct SessionConfig {
    SolveOpts solve_opts{};
    std::size_t initial_dim = 50;
    std::vector<std::size_t> actions{5, 15, 20, 30, 35};
    double threshold = 0.5;
    double sigma = 0.5;
    std::size_t controller_period = 4;
    std::size_t alternations_max = 10;
    double outer_rel_tol = 1e-4;
    std::uint64_t seed = 1;
    bool dynamic_mode = false;
    bool controller = true;      // false: fixed-dimension baseline
    bool unit_normalize = false; // scale each input to unit ℓ2 norm before encoding
    std::size_t odl_passes = 1;

    friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

struct SampleRecord {
    std::uint64_t k = 0;
    double sq_error = 0.0;
    double tmse = 0.0;
    std::size_t dim = 0;
    std::optional<std::size_t> state_visited;
    std::optional<std::size_t> action_taken;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct SessionLedger {
    double err_sum = 0.0;
    std::uint64_t k = 0;
    std::vector<SampleRecord> series;

    friend bool operator==(const SessionLedger&, const SessionLedger&) = default;
};

inline double tmse(const SessionLedger& ledger) {
    if (ledger.k == 0) throw std::domain_error("tmse: empty ledger");
    return ledger.err_sum / static_cast<double>(ledger.k);
}

struct SampleError : std::runtime_error {
    SampleError(std::uint64_t sample, const std::string& what)
        : std::runtime_error("sample " + std::to_string(sample) + ": " + what), sample(sample) {}
    std::uint64_t sample;
};

inline void validate(const SessionConfig& c) {
    validate(c.solve_opts);
    if (c.initial_dim < 1) throw std::invalid_argument("initial_dim must be >= 1");
    if (c.controller_period < 1) throw std::invalid_argument("controller_period must be >= 1");
    if (c.alternations_max < 1) throw std::invalid_argument("alternations_max must be >= 1");
    if (!(c.outer_rel_tol > 0.0)) throw std::invalid_argument("outer_rel_tol must be > 0");
    if (c.controller) (void)init_automaton(c.actions, c.threshold, c.sigma);
}

class Session {
public:
    Session(SessionConfig config, std::size_t input_dim)
        : config_(std::move(config)) {
        validate(config_);
        dict_ = init_dictionary(input_dim, config_.initial_dim, config_.seed);
        if (config_.controller)
            automaton_ = init_automaton(config_.actions, config_.threshold, config_.sigma);
        last_code_.assign(config_.initial_dim, 0.0);
    }

    // Restores a session from previously saved state (checkpoint loading).
    Session(SessionConfig config, Dictionary dict, std::optional<Automaton> automaton,
            SessionLedger ledger, Vec last_code, std::vector<GrowthRecord> growths,
            Vec power_vec)
        : config_(std::move(config)),
          dict_(std::move(dict)),
          automaton_(std::move(automaton)),
          ledger_(std::move(ledger)),
          last_code_(std::move(last_code)),
          growths_(std::move(growths)),
          power_vec_(std::move(power_vec)) {}

    const SessionConfig& config() const noexcept { return config_; }
    const Dictionary& dictionary() const noexcept { return dict_; }
    const std::optional<Automaton>& automaton() const noexcept { return automaton_; }
    const SessionLedger& ledger() const noexcept { return ledger_; }
    const Vec& last_code() const noexcept { return last_code_; }
    const std::vector<GrowthRecord>& growths() const noexcept { return growths_; }
    const Vec& power_vector() const noexcept { return power_vec_; }
    std::size_t dim() const noexcept { return dict_.atoms(); }
    std::size_t input_dim() const noexcept { return dict_.input_dim(); }

    // Input as the session sees it (after optional unit normalization).
    Vec prepare(std::span<const double> y) const {
        Vec v(y.begin(), y.end());
        if (config_.unit_normalize) {
            const double nrm = norm2(v);
            if (nrm > 0.0)
                for (double& e : v) e /= nrm;
        }
        return v;
    }

    /// Codes y under the current dictionary. Refreshes the cached dominant
    /// direction of BᵀB used for the step size.
    Code encode(std::span<const double> y_prepared, std::span<const double> warm) {
        const double lip = lipschitz_bound(dict_.basis, 200, 1e-6, &power_vec_);
        if (config_.dynamic_mode)
            return dynamic_solve(dict_.basis, y_prepared, warm, Mat::identity(dict_.atoms()),
                                 config_.solve_opts, lip);
        return fista_solve(dict_.basis, y_prepared, warm, config_.solve_opts, lip);
    }

    SampleRecord process_sample(std::span<const double> y_raw) {
        const std::uint64_t k = ledger_.k + 1;
        if (y_raw.size() != input_dim())
            throw SampleError(k, "input length " + std::to_string(y_raw.size()) +
                                     " != " + std::to_string(input_dim()));
        const Vec y = prepare(y_raw);
        const Vec prev = zero_pad(last_code_, dim());
        if (power_vec_.size() < dim()) power_vec_ = zero_pad(power_vec_, dim());

        // This sample's statistics are re-applied on top of the pre-sample
        // accumulators at every alternation, so it is counted exactly once.
        const Mat gram_before = dict_.gram_acc;
        const Mat cross_before = dict_.cross_acc;
        const std::uint64_t seen_before = dict_.samples_seen;

        Code code;
        Vec warm = prev;
        double e_prev = 0.0;
        try {
            for (std::size_t alt = 0; alt < config_.alternations_max; ++alt) {
                code = config_.dynamic_mode ? encode(y, prev) : encode(y, warm);
                dict_.gram_acc = gram_before;
                dict_.cross_acc = cross_before;
                dict_.samples_seen = seen_before;
                accumulate(dict_, code.coeffs, y);
                odl_update(dict_, config_.odl_passes);
                warm = code.coeffs;
                const double e = energy(dict_.basis, y, code.coeffs, config_.solve_opts.lambda);
                if (!std::isfinite(e)) throw NumericError("non-finite energy after update", alt + 1);
                if (alt > 0 && detail::converged(e_prev, e, config_.outer_rel_tol)) break;
                e_prev = e;
            }
        } catch (const NumericError& err) {
            throw SampleError(k, err.what());
        }

        SampleRecord rec;
        rec.k = k;
        rec.sq_error = residual_sq(y, dict_.basis, code.coeffs);
        rec.dim = dim();
        ledger_.err_sum += rec.sq_error;
        ledger_.k = k;
        rec.tmse = tmse(ledger_);
        last_code_ = code.coeffs;

        if (automaton_ && k % config_.controller_period == 0) {
            if (auto decision = step(*automaton_, rec.tmse)) {
                rec.state_visited = decision->state;
                rec.action_taken = decision->ell;
                const std::uint64_t seed = derive_seed(config_.seed, growths_.size() + 1);
                growths_.push_back(grow(dict_, decision->ell, seed));
            }
        }
        ledger_.series.push_back(rec);
        return rec;
    }

    /// Folds process_sample over the stream. On failure the ledger keeps the
    /// samples processed so far and the error is rethrown.
    const SessionLedger& run_stream(std::span<const Vec> patches) {
        for (const auto& y : patches) process_sample(y);
        return ledger_;
    }

    friend bool operator==(const Session&, const Session&) = default;

private:
    SessionConfig config_;
    Dictionary dict_;
    std::optional<Automaton> automaton_;
    SessionLedger ledger_;
    Vec last_code_;
    std::vector<GrowthRecord> growths_;
    Vec power_vec_;  // warm start for the Lipschitz power iteration
};

}  // namespace asca
