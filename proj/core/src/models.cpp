#include "acmdp/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace acmdp {

namespace {

// Bit-reproducible uniform in [0,1): the generator is standard-specified,
// and this mapping avoids the implementation-defined std distributions.
Real canonical(std::mt19937_64& rng) {
    return static_cast<Real>(rng() >> 11) * 0x1.0p-53;
}

void check_atoms(const std::vector<std::pair<Real, Real>>& atoms, bool zero_mean) {
    if (atoms.empty()) throw ValidationError("noise law has no atoms");
    Real psum = 0.0, mean = 0.0;
    for (const auto& [value, prob] : atoms) {
        if (!std::isfinite(value) || !(prob >= 0.0))
            throw ValidationError("bad noise atom");
        psum += prob;
        mean += prob * value;
    }
    if (std::abs(psum - 1.0) > kRowSumTol)
        throw ValidationError("noise probabilities do not sum to 1");
    if (zero_mean && std::abs(mean) > kRowSumTol)
        throw ValidationError("noise law must have zero mean");
}

}  // namespace

Real LqParams::noise_variance() const {
    Real var = 0.0;
    for (const auto& [value, prob] : noise_atoms) var += prob * value * value;
    return var;
}

ContinuousModelSpec lq_model(const LqParams& params) {
    if (!(params.q > 0.0) || !(params.r > 0.0))
        throw ValidationError("lq_model requires q > 0 and r > 0");
    if (!(params.gamma * params.beta > 0.0))
        throw ValidationError("lq_model requires gamma * beta > 0");
    check_atoms(params.noise_atoms, /*zero_mean=*/true);

    ContinuousModelSpec spec;
    spec.state_low = -kInf;
    spec.state_high = kInf;
    spec.action_low = -kInf;
    spec.action_high = kInf;
    const Real gamma = params.gamma, beta = params.beta, q = params.q, r = params.r;
    spec.cost_fn = [q, r](Real x, Real a) { return q * x * x + r * a * a; };
    spec.next_state_fn = [gamma, beta](Real x, Real a, Real noise) {
        return gamma * x + beta * a + noise;
    };
    spec.noise_law = params.noise_atoms;
    return spec;
}

ContinuousModelSpec inventory_model(Real holding_rate, Real order_cost,
                                    std::vector<std::pair<Real, Real>> demand_atoms,
                                    Real capacity) {
    if (!(holding_rate >= 0.0) || !(order_cost >= 0.0))
        throw ValidationError("inventory_model requires nonnegative rates");
    if (!(capacity > 0.0)) throw ValidationError("inventory_model requires capacity > 0");
    check_atoms(demand_atoms, /*zero_mean=*/false);
    for (const auto& [value, prob] : demand_atoms)
        if (value < 0.0) throw ValidationError("demand atoms must be nonnegative");

    ContinuousModelSpec spec;
    spec.state_low = 0.0;
    spec.state_high = capacity;
    spec.action_low = 0.0;
    spec.action_high = capacity;
    spec.cost_fn = [holding_rate, order_cost](Real x, Real a) {
        return holding_rate * x + (a > 0.0 ? order_cost : 0.0);
    };
    spec.next_state_fn = [capacity](Real x, Real a, Real demand) {
        return std::clamp(x + a - demand, 0.0, capacity);
    };
    spec.noise_law = std::move(demand_atoms);
    return spec;
}

FiniteMdp random_mdp(std::uint64_t seed, int n_states, int n_actions,
                     std::pair<Real, Real> cost_range, Real sparsity,
                     Real infinite_cost_fraction) {
    if (n_states < 1 || n_actions < 1)
        throw ValidationError("random_mdp requires n_states, n_actions >= 1");
    if (!(cost_range.second >= cost_range.first))
        throw ValidationError("random_mdp cost range is empty");
    if (sparsity < 0.0 || sparsity > 1.0 || infinite_cost_fraction < 0.0 ||
        infinite_cost_fraction > 1.0)
        throw ValidationError("random_mdp fractions must lie in [0,1]");

    std::mt19937_64 rng(seed);
    const Real span = cost_range.second - cost_range.first;

    FiniteMdp m;
    m.num_states = n_states;
    m.lower_bound = cost_range.first;
    m.states.resize(static_cast<size_t>(n_states));

    for (int x = 0; x < n_states; ++x) {
        auto& actions = m.states[static_cast<size_t>(x)];
        actions.reserve(static_cast<size_t>(n_actions));
        bool have_finite = false;
        for (int a = 0; a < n_actions; ++a) {
            FiniteMdp::Action act;
            act.id = a;
            if (canonical(rng) < infinite_cost_fraction)
                act.cost = kInf;
            else {
                act.cost = cost_range.first + span * canonical(rng);
                have_finite = true;
            }

            // positive sparse row: drop each successor with probability
            // `sparsity`, keep at least one
            std::vector<char> keep(static_cast<size_t>(n_states), 0);
            int kept = 0;
            for (int y = 0; y < n_states; ++y)
                if (canonical(rng) >= sparsity) {
                    keep[static_cast<size_t>(y)] = 1;
                    ++kept;
                }
            if (kept == 0) keep[rng() % static_cast<std::uint64_t>(n_states)] = 1;

            Real sum = 0.0;
            for (int y = 0; y < n_states; ++y) {
                if (!keep[static_cast<size_t>(y)]) continue;
                const Real w = 0.05 + canonical(rng);  // bounded away from zero
                act.kernel.emplace_back(y, w);
                sum += w;
            }
            for (auto& [y, p] : act.kernel) p /= sum;
            // pin the row sum to 1 exactly on the largest entry
            Real total = 0.0;
            size_t largest = 0;
            for (size_t i = 0; i < act.kernel.size(); ++i) {
                total += act.kernel[i].second;
                if (act.kernel[i].second > act.kernel[largest].second) largest = i;
            }
            act.kernel[largest].second += 1.0 - total;

            actions.push_back(std::move(act));
        }
        if (!have_finite) {
            // every state keeps at least one finite-cost action
            const size_t pick = rng() % static_cast<std::uint64_t>(n_actions);
            actions[pick].cost = cost_range.first + span * canonical(rng);
        }
    }
    return validate_mdp(std::move(m));
}

}  // namespace acmdp
