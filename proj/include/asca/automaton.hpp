#pragma once

// Deterministic variable-structure automaton that maps the running
// reconstruction error to a dimension-increase action.
//
// Each state owns an error interval [lb, ub) and a fixed action ℓ_i with
// ℓ_1 < ℓ_2 < … < ℓ_h. Every state starts with [0, ∞), so the lowest-index
// (smallest-action) state is chosen first. When a state is penalized its
// memory accumulates σ·(e − threshold); once memory reaches 1 the state's
// upper bound (and the next state's lower bound) are committed to the best
// error the state has seen, and memory resets.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace asca {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ScaState {
    double lb = 0.0;
    double ub = kInf;
    double memory = 0.5;
    double best_err = kInf;
    std::size_t action_ell = 0;

    friend bool operator==(const ScaState&, const ScaState&) = default;
};

struct Automaton {
    std::vector<ScaState> states;
    double sigma = 0.5;
    double threshold = 0.5;
    double memory_init = 0.5;

    std::size_t size() const noexcept { return states.size(); }

    friend bool operator==(const Automaton&, const Automaton&) = default;
};

struct AutomatonError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline Automaton init_automaton(const std::vector<std::size_t>& actions, double threshold,
                                double sigma, double memory_init = 0.5) {
    if (actions.empty()) throw AutomatonError("automaton needs at least one action");
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i] < 1) throw AutomatonError("actions must be >= 1");
        if (i > 0 && actions[i] <= actions[i - 1])
            throw AutomatonError("actions must be strictly increasing");
    }
    if (!(sigma > 0.0 && sigma < 1.0)) throw AutomatonError("sigma must lie in (0, 1)");
    if (!(threshold > 0.0) || !std::isfinite(threshold))
        throw AutomatonError("threshold must be a finite value > 0");
    Automaton aut;
    aut.sigma = sigma;
    aut.threshold = threshold;
    aut.memory_init = memory_init;
    aut.states.reserve(actions.size());
    for (std::size_t ell : actions) aut.states.push_back(ScaState{0.0, kInf, memory_init, kInf, ell});
    return aut;
}

/// Lowest-index state whose [lb, ub) contains e.
inline std::size_t classify(const Automaton& aut, double e) {
    for (std::size_t i = 0; i < aut.states.size(); ++i) {
        const auto& s = aut.states[i];
        if (s.lb <= e && e < s.ub) return i;
    }
    // Unreachable while the partition invariant holds (last ub is +∞).
    throw std::logic_error("automaton intervals do not cover e = " + std::to_string(e));
}

inline std::size_t act(const Automaton& aut, std::size_t i) {
    if (i >= aut.states.size()) throw std::out_of_range("automaton state index out of range");
    return aut.states[i].action_ell;
}

/// Applies one penalty to state i for error e (> threshold). The last state
/// tracks best_err and memory but keeps ub = +∞ so [0, ∞) stays covered.
inline void penalize(Automaton& aut, std::size_t i, double e) {
    if (i >= aut.states.size()) throw std::out_of_range("automaton state index out of range");
    if (!(e > aut.threshold))
        throw AutomatonError("penalize called with e <= threshold");
    auto& s = aut.states[i];
    if (e < s.best_err) s.best_err = e;
    s.memory += aut.sigma * (e - aut.threshold);
    if (s.memory >= 1.0) {
        if (i + 1 < aut.states.size()) {
            s.ub = s.best_err;
            aut.states[i + 1].lb = s.best_err;
        }
        s.memory = aut.memory_init;
    }
}

struct Decision {
    std::size_t state = 0;
    std::size_t ell = 0;
};

/// Classify, penalize, act. Returns nothing when e is within threshold.
inline std::optional<Decision> step(Automaton& aut, double e) {
    if (!(e > aut.threshold)) return std::nullopt;
    const std::size_t i = classify(aut, e);
    penalize(aut, i, e);
    return Decision{i, act(aut, i)};
}

}  // namespace asca
