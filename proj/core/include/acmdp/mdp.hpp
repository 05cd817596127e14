#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "acmdp/errors.hpp"

namespace acmdp {

using Real = double;

/// Distinguished +infinity marking forbidden state-action pairs.
inline constexpr Real kInf = std::numeric_limits<Real>::infinity();

/// Extended costs and values are finite or +inf; never -inf and never NaN.
inline bool is_extended(Real v) { return !std::isnan(v) && v != -kInf; }

/// Row-sum tolerance for transition kernels. Rows outside this band are
/// rejected, never renormalized, so model bugs surface early.
inline constexpr Real kRowSumTol = 1e-12;

/// Deterministic decision rule: one action per state. Entries are positions
/// in the state's action list (0-based), not external action ids.
struct StationaryPolicy {
    std::vector<int> choice;

    int operator()(int state) const { return choice[static_cast<size_t>(state)]; }
    size_t size() const { return choice.size(); }
};

/**
 * Finite MDP: states 0..num_states-1, a nonempty action list per state,
 * an extended-real cost and a sparse stochastic kernel row per action.
 *
 * `lower_bound` is a finite bound with every finite cost >= lower_bound;
 * solvers use it to shift costs nonnegative internally.
 *
 * Instances are treated as immutable after validation and may be shared
 * read-only across threads.
 */
struct FiniteMdp {
    struct Action {
        int id = 0;                                 ///< external identifier
        Real cost = 0.0;                            ///< finite or +inf
        std::vector<std::pair<int, Real>> kernel;   ///< (successor, probability)
    };

    int num_states = 0;
    Real lower_bound = 0.0;
    std::vector<std::vector<Action>> states;        ///< states[x] = actions at x

    int num_actions(int x) const { return static_cast<int>(states[static_cast<size_t>(x)].size()); }
    const Action& action(int x, int a) const { return states[static_cast<size_t>(x)][static_cast<size_t>(a)]; }

    /// Total number of (state, action) pairs.
    size_t num_pairs() const {
        size_t n = 0;
        for (const auto& s : states) n += s.size();
        return n;
    }

    /// True if the policy picks a valid action index at every state.
    bool admits(const StationaryPolicy& policy) const {
        if (static_cast<int>(policy.size()) != num_states) return false;
        for (int x = 0; x < num_states; ++x)
            if (policy(x) < 0 || policy(x) >= num_actions(x)) return false;
        return true;
    }
};

/**
 * Checks every structural invariant of the model and returns it unchanged.
 *
 * Throws ValidationError naming the first violated invariant: a kernel row
 * whose entries are negative or whose sum is off 1 by more than 1e-12
 * ("row not stochastic"), an empty action set, a successor index out of
 * range, a cost below `lower_bound`, a NaN or -inf anywhere.
 */
FiniteMdp validate_mdp(FiniteMdp model);

/**
 * One-step lookahead value of action `a` at state `x` given a value
 * estimate `u`: c(x,a) + alpha * sum_y u(y) q(y|x,a).
 *
 * Returns +inf when c(x,a) is +inf, or when alpha > 0 and u is +inf on a
 * successor with positive probability. With alpha == 0 the result is
 * exactly c(x,a). Never produces NaN.
 */
Real action_value(const FiniteMdp& model, std::span<const Real> u, Real alpha, int x, int a);

/// Result of restrict_to_finite_costs. `state_map[x]` is the index of the
/// original state x in the new model, or the sink index if x was collapsed.
/// `sink` is set iff some state had no finite-cost action.
struct FiniteCostRestriction {
    FiniteMdp model;
    std::vector<int> state_map;
    std::optional<int> sink;
};

/**
 * Restricts every state to its finite-cost actions. States with no such
 * action are collapsed into a single absorbing sink state with one action
 * of cost +inf, and all kernel mass into collapsed states is redirected to
 * the sink. Models that already have a finite-cost action everywhere come
 * back unchanged up to relabeling.
 *
 * Throws ValidationError("trivial model ...") if every cost is infinite.
 */
FiniteCostRestriction restrict_to_finite_costs(const FiniteMdp& model);

/// Adds a finite constant to every finite cost and to `lower_bound`.
FiniteMdp add_cost_offset(FiniteMdp model, Real offset);

}  // namespace acmdp
