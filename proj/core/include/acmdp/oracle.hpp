#pragma once

#include <optional>
#include <vector>

#include "acmdp/mdp.hpp"

namespace acmdp {

/**
 * Exact per-state long-run average cost of the chain induced by `policy`:
 * recurrent classes are identified, each class's stationary distribution is
 * solved exactly, and transient states receive hitting-probability-weighted
 * class gains. States that can reach an infinite-cost chosen action get
 * gain +inf.
 *
 * Classes are solved by dense linear algebra; classes above ~1000 states
 * are out of scope for the oracle and raise SolverError.
 */
std::vector<Real> policy_gain(const FiniteMdp& model, const StationaryPolicy& policy);

enum class OracleMethod { enumeration, relative_value_iteration };

/// Ground-truth average-cost optimum, independent of the vanishing-discount
/// pipeline.
struct OracleResult {
    std::vector<Real> optimal_gain;  ///< pointwise minimum over policies
    StationaryPolicy optimal_policy;
    OracleMethod method = OracleMethod::enumeration;
    /// gains[policy][state]; kept only when requested from enumerate_optimal.
    std::optional<std::vector<std::vector<Real>>> per_policy_gains;
    bool aperiodicity_applied = false;  ///< relative VI switched to the damped operator
};

/**
 * Brute force over every stationary deterministic policy: the optimal gain
 * is the pointwise minimum of the exact per-policy gains, and the returned
 * policy is the lexicographically first one attaining it (lowest action
 * index per state).
 *
 * Throws SolverError when the number of policies exceeds `cap`, directing
 * the caller to relative_value_iteration.
 */
OracleResult enumerate_optimal(const FiniteMdp& model, long long cap = 1000000,
                               bool keep_table = false);

/// How relative_value_iteration deals with periodic chains.
enum class Aperiodicity {
    off,                  ///< plain Bellman operator; periodic models fail
    on,                   ///< damped operator (half self-loop) from the start
    auto_on_stagnation,   ///< switch to the damped operator when the span stalls
};

/**
 * Span-seminorm relative value iteration for unichain models: iterates the
 * undiscounted Bellman operator, stopping when the span of the update
 * drops below tol; the gain is the mid-range of the last update and the
 * policy is the greedy selection (lowest index tie-break).
 *
 * The half self-loop damping (q' = (q + I)/2) leaves gains invariant and
 * is applied per the `mode` flag; the result records whether it was used.
 * Non-convergence (periodicity with mode=off, or a multichain model)
 * raises NonConvergenceError suggesting the transform.
 */
OracleResult relative_value_iteration(const FiniteMdp& model, Real tol = 1e-9,
                                      long long max_iter = 1000000,
                                      Aperiodicity mode = Aperiodicity::auto_on_stagnation);

/// Scalar discrete-time Riccati solution for the linear-quadratic model
/// x' = gamma x + beta a + noise with cost q x^2 + r a^2.
struct RiccatiSolution {
    Real p = 0.0;             ///< fixed point of the Riccati map, >= 0
    Real feedback_gain = 0.0; ///< K; the optimal policy is a = -K x
    Real w_star = 0.0;        ///< optimal average cost, p * noise variance
};

/// Requires q, r > 0, gamma*beta > 0 and noise_variance >= 0. The fixed
/// point p -> q + gamma^2 p - gamma^2 beta^2 p^2 / (r + beta^2 p) is
/// iterated from p = q to 1e-12 absolute change.
RiccatiSolution lq_riccati(Real gamma, Real beta, Real q, Real r, Real noise_variance);

/// Both sides of the fatou-type inequality for weakly converging measures,
/// realized on the tail of a finite sequence.
struct WeakFatouResult {
    bool holds = false;
    Real lhs = 0.0;  ///< integral of the pointwise tail infimum against the limit
    Real rhs = 0.0;  ///< tail infimum of the per-step integrals
};

/**
 * Checks integral(liminf h_n) d mu <= liminf integral(h_n) d mu_n on a
 * common finite support, within 1e-12. A finite sequence carries no true
 * liminf, so both sides are realized as infima over the tail starting at
 * `tail_start` (default: second half); conforming inputs have mu_n equal
 * to mu entrywise on that tail. Functions are nonnegative, +inf allowed.
 *
 * Throws ValidationError on support size mismatch.
 */
WeakFatouResult weak_fatou_check(const std::vector<std::vector<Real>>& measures,
                                 const std::vector<Real>& limit_measure,
                                 const std::vector<std::vector<Real>>& functions,
                                 int tail_start = -1);

/// Exact fixed-policy expected discounted values (I - alpha P)^{-1} c for
/// alpha in [0,1), by dense linear solve. Chosen costs must be finite.
std::vector<Real> policy_discounted_values(const FiniteMdp& model, const StationaryPolicy& policy,
                                           Real alpha);

/// Undiscounted fixed-policy N-step values v_N^phi at the requested
/// horizons (increasing), by forward recursion.
std::vector<std::vector<Real>> policy_horizon_values(const FiniteMdp& model,
                                                     const StationaryPolicy& policy,
                                                     std::span<const long long> horizons);

}  // namespace acmdp
