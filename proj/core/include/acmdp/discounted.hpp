#pragma once

#include <vector>

#include "acmdp/mdp.hpp"

namespace acmdp {

/// Converged discounted solution. `values` are in original cost units and
/// are +inf on states where every policy incurs infinite cost.
struct DiscountedSolution {
    Real alpha = 0.0;
    std::vector<Real> values;
    std::vector<std::vector<int>> opt_actions;  ///< per state, actions within match_tol of the Bellman minimum
    StationaryPolicy policy;                    ///< lowest-indexed member of each opt set
    long long iterations = 0;
    Real residual = 0.0;   ///< sup-norm of the last update over finite-valued states
    bool monotone = true;  ///< v_{n+1} >= v_n held at every sweep (shifted costs)
    Real tol = 0.0;
    Real match_tol = 0.0;  ///< opt-set membership tolerance (10 * tol)
};

/// Backward-recursion output: values[n] is the optimal n-step value vector
/// (values[0] is identically zero), policy[t] the decision rule applied at
/// time t when the remaining horizon is N - t.
struct FiniteHorizonSolution {
    std::vector<std::vector<Real>> values;
    std::vector<std::vector<int>> policy;
};

/**
 * Optimal N-step expected discounted cost via backward recursion,
 * v_{n+1}(x) = min_a [c(x,a) + alpha * sum u q], starting from 0.
 * alpha = 1 is permitted (undiscounted finite horizon).
 */
FiniteHorizonSolution finite_horizon_solve(const FiniteMdp& model, Real alpha, int horizon);

/**
 * Infinite-horizon value iteration for alpha in [0,1).
 *
 * Internally iterates on costs shifted by -lower_bound (so iterates start
 * at 0, stay nonnegative, and increase monotonically), then shifts values
 * back by lower_bound/(1-alpha). Stops when the sup-norm update over
 * finite-valued states falls below max(tol*(1-alpha)/max(alpha,0.5),
 * float noise floor); the returned values satisfy the discounted
 * optimality equation with residual <= tol.
 *
 * Throws NonConvergenceError (carrying the last iterate) if max_iter is
 * reached first, and SolverError for alpha outside [0,1).
 */
DiscountedSolution value_iteration(const FiniteMdp& model, Real alpha, Real tol = 1e-9,
                                   long long max_iter = 1000000);

/// Per-state residuals |v(x) - min_a action_value(v)(x,a)|. States where
/// both sides are +inf count as residual 0; a finite/infinite mismatch is
/// reported as +inf.
struct DcoeReport {
    std::vector<Real> residuals;
    Real max_residual = 0.0;
    bool pass = false;
    Real tol = 0.0;
};

/// Checks how far `values` is from satisfying the discounted optimality
/// equation; passes iff the largest residual is <= tol.
DcoeReport verify_dcoe(const FiniteMdp& model, Real alpha, std::span<const Real> values, Real tol);

/// True iff the policy's action at every state is optimal for `solution`,
/// i.e. within 10*tol of the Bellman minimum of solution.values.
bool check_policy_optimality(const FiniteMdp& model, Real alpha, const DiscountedSolution& solution,
                             const StationaryPolicy& policy, Real tol);

}  // namespace acmdp
