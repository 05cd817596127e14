#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "acmdp/discretize.hpp"
#include "acmdp/mdp.hpp"

namespace acmdp {

/// Parameters of the linear-quadratic test model. The noise law is a finite
/// zero-mean atom list; the canonical choice is the two-atom +-sigma law.
struct LqParams {
    Real gamma = 1.0;
    Real beta = 1.0;
    Real q = 1.0;
    Real r = 1.0;
    std::vector<std::pair<Real, Real>> noise_atoms = {{-1.0, 0.5}, {1.0, 0.5}};

    Real noise_variance() const;
};

/// x' = gamma x + beta a + noise, c(x,a) = q x^2 + r a^2, on unbounded
/// intervals (the grid chooses the truncation). Requires q, r > 0,
/// gamma*beta > 0 and a zero-mean noise law.
ContinuousModelSpec lq_model(const LqParams& params);

/**
 * Single-item inventory model: state = stock level in [0, capacity],
 * action = order quantity, dynamics x' = clamp(x + a - demand, 0, capacity),
 * cost = holding_rate * x + order_cost * [a > 0]. Orders beyond the free
 * capacity clamp to it (still paying the fixed order cost), so they are
 * dominated but legal. The fixed order cost keeps the cost bounded in the
 * action, exercising noncompact-style behavior without blowing up.
 */
ContinuousModelSpec inventory_model(Real holding_rate, Real order_cost,
                                    std::vector<std::pair<Real, Real>> demand_atoms,
                                    Real capacity);

/**
 * Reproducible random model: same seed, same bits. Kernel rows are
 * normalized positive sparse vectors (each successor dropped with
 * probability `sparsity`, at least one kept); a fraction of (state,action)
 * pairs get cost +inf but every state keeps at least one finite-cost
 * action. lower_bound is cost_low. Output always passes validate_mdp.
 */
FiniteMdp random_mdp(std::uint64_t seed, int n_states, int n_actions,
                     std::pair<Real, Real> cost_range, Real sparsity = 0.0,
                     Real infinite_cost_fraction = 0.0);

}  // namespace acmdp
