#include "acmdp/discounted.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "compiled.hpp"

namespace acmdp {

namespace {

constexpr Real kEps = 2.220446049250313e-16;

struct SweepStats {
    Real residual = 0.0;      // sup-norm of the update over finite-valued states
    Real vmax = 0.0;          // largest finite value after the sweep
    bool partition_changed = false;  // some state flipped finite <-> infinite
    bool monotone = true;
};

// One Jacobi sweep out = T v on shifted costs. Infinite costs and infinite
// successor values propagate to +inf without NaN (zero-probability entries
// were dropped when compiling).
SweepStats bellman_sweep(const detail::CompiledModel& cm, Real alpha,
                         const std::vector<Real>& v, std::vector<Real>& out) {
    SweepStats stats;
    const Real* vp = v.data();
    const Real* cost = cm.costs.data();
    const int* kb = cm.kernel_begin.data();
    const int* succ = cm.succ.data();
    const Real* prob = cm.prob.data();
    for (int x = 0; x < cm.num_states; ++x) {
        Real best = kInf;
        const int pair_end = cm.state_begin[x + 1];
        for (int pair = cm.state_begin[x]; pair < pair_end; ++pair) {
            const Real c = cost[pair];
            if (c == kInf) continue;
            Real q;
            if (alpha == 0.0) {
                q = c;
            } else {
                Real s = 0.0;
                const int ke = kb[pair + 1];
                for (int k = kb[pair]; k < ke; ++k) s += prob[k] * vp[succ[k]];
                q = c + alpha * s;
            }
            if (q < best) best = q;
        }
        const Real old = v[static_cast<size_t>(x)];
        out[static_cast<size_t>(x)] = best;
        if (best == kInf) {
            if (old != kInf) stats.partition_changed = true;
        } else {
            if (old == kInf) stats.partition_changed = true;
            else {
                const Real diff = best - old;
                if (diff < 0.0) stats.monotone = false;
                const Real mag = diff < 0.0 ? -diff : diff;
                if (mag > stats.residual) stats.residual = mag;
            }
            if (best > stats.vmax) stats.vmax = best;
        }
    }
    return stats;
}

}  // namespace

FiniteHorizonSolution finite_horizon_solve(const FiniteMdp& model, Real alpha, int horizon) {
    if (!(alpha >= 0.0) || alpha > 1.0)
        throw SolverError("finite_horizon_solve requires alpha in [0,1]");
    if (horizon < 0) throw SolverError("horizon must be >= 0");

    const int n = model.num_states;
    FiniteHorizonSolution sol;
    sol.values.assign(static_cast<size_t>(horizon) + 1, std::vector<Real>(static_cast<size_t>(n), 0.0));
    sol.policy.assign(static_cast<size_t>(horizon), std::vector<int>(static_cast<size_t>(n), 0));

    detail::CompiledModel cm(model, 0.0);
    for (int step = 1; step <= horizon; ++step) {
        const auto& prev = sol.values[static_cast<size_t>(step) - 1];
        auto& next = sol.values[static_cast<size_t>(step)];
        // the rule chosen while building v_step applies at time horizon-step
        auto& rule = sol.policy[static_cast<size_t>(horizon - step)];
        for (int x = 0; x < n; ++x) {
            Real best = kInf;
            int best_a = 0;
            const int pair_begin = cm.state_begin[x];
            for (int pair = pair_begin; pair < cm.state_begin[x + 1]; ++pair) {
                const Real c = cm.costs[pair];
                Real q;
                if (c == kInf) {
                    q = kInf;
                } else if (alpha == 0.0) {
                    q = c;
                } else {
                    Real s = 0.0;
                    for (int k = cm.kernel_begin[pair]; k < cm.kernel_begin[pair + 1]; ++k)
                        s += cm.prob[k] * prev[static_cast<size_t>(cm.succ[k])];
                    q = c + alpha * s;
                }
                if (q < best) {
                    best = q;
                    best_a = pair - pair_begin;
                }
            }
            next[static_cast<size_t>(x)] = best;
            rule[static_cast<size_t>(x)] = best_a;
        }
    }
    return sol;
}

DiscountedSolution value_iteration(const FiniteMdp& model, Real alpha, Real tol, long long max_iter) {
    if (!(alpha >= 0.0) || alpha >= 1.0)
        throw SolverError("value_iteration requires alpha in [0,1)");
    if (!(tol > 0.0)) throw SolverError("tol must be positive");

    const int n = model.num_states;
    detail::CompiledModel cm(model, model.lower_bound);  // shifted costs >= 0

    std::vector<Real> v(static_cast<size_t>(n), 0.0), next(static_cast<size_t>(n), 0.0);
    const Real base_threshold = tol * (1.0 - alpha) / std::max(alpha, 0.5);

    bool monotone = true;
    long long iter = 0;
    Real residual = kInf;
    while (true) {
        const SweepStats stats = bellman_sweep(cm, alpha, v, next);
        v.swap(next);
        ++iter;
        monotone = monotone && stats.monotone;
        residual = stats.residual;
        // below ~8 ulp of the largest value the update is float noise, not signal
        const Real threshold = std::max(base_threshold, 8.0 * kEps * stats.vmax);
        if (!stats.partition_changed && residual <= threshold) break;
        if (iter >= max_iter)
            throw NonConvergenceError(
                "value_iteration: residual " + std::to_string(residual) + " after " +
                    std::to_string(iter) + " iterations (alpha " + std::to_string(alpha) + ")",
                std::move(v), iter, residual);
    }

    DiscountedSolution sol;
    sol.alpha = alpha;
    sol.iterations = iter;
    sol.residual = residual;
    sol.monotone = monotone;
    sol.tol = tol;
    sol.match_tol = 10.0 * tol;

    // opt sets on the shifted values: membership is q <= v(x) + match_tol,
    // which is shift-invariant bit for bit
    sol.opt_actions.assign(static_cast<size_t>(n), {});
    sol.policy.choice.assign(static_cast<size_t>(n), 0);
    for (int x = 0; x < n; ++x) {
        const Real vx = v[static_cast<size_t>(x)];
        auto& members = sol.opt_actions[static_cast<size_t>(x)];
        const int pair_begin = cm.state_begin[x];
        Real best = kInf;
        int best_a = 0;
        for (int pair = pair_begin; pair < cm.state_begin[x + 1]; ++pair) {
            const int a = pair - pair_begin;
            const Real c = cm.costs[pair];
            Real q = kInf;
            if (c != kInf) {
                if (alpha == 0.0) {
                    q = c;
                } else {
                    Real s = 0.0;
                    for (int k = cm.kernel_begin[pair]; k < cm.kernel_begin[pair + 1]; ++k)
                        s += cm.prob[k] * v[static_cast<size_t>(cm.succ[k])];
                    q = c + alpha * s;
                }
            }
            if (q <= vx + sol.match_tol) members.push_back(a);
            if (q < best) {
                best = q;
                best_a = a;
            }
        }
        if (members.empty()) members.push_back(best_a);  // argmin guard at float extremes
        sol.policy.choice[static_cast<size_t>(x)] = members.front();
    }

    // shift values back to original cost units
    const Real back = model.lower_bound / (1.0 - alpha);
    sol.values.assign(static_cast<size_t>(n), kInf);
    for (int x = 0; x < n; ++x)
        if (v[static_cast<size_t>(x)] != kInf) sol.values[static_cast<size_t>(x)] =
            v[static_cast<size_t>(x)] + back;
    return sol;
}

DcoeReport verify_dcoe(const FiniteMdp& model, Real alpha, std::span<const Real> values, Real tol) {
    const int n = model.num_states;
    bool any_finite = false;
    for (int x = 0; x < n; ++x) any_finite = any_finite || std::isfinite(values[static_cast<size_t>(x)]);
    if (!any_finite) throw SolverError("verify_dcoe requires a finite value somewhere");

    DcoeReport report;
    report.tol = tol;
    report.residuals.assign(static_cast<size_t>(n), 0.0);
    for (int x = 0; x < n; ++x) {
        Real best = kInf;
        for (int a = 0; a < model.num_actions(x); ++a)
            best = std::min(best, action_value(model, values, alpha, x, a));
        const Real vx = values[static_cast<size_t>(x)];
        Real r;
        if (vx == kInf && best == kInf) r = 0.0;
        else if (vx == kInf || best == kInf) r = kInf;
        else r = std::abs(vx - best);
        report.residuals[static_cast<size_t>(x)] = r;
        report.max_residual = std::max(report.max_residual, r);
    }
    report.pass = report.max_residual <= tol;
    return report;
}

bool check_policy_optimality(const FiniteMdp& model, Real alpha, const DiscountedSolution& solution,
                             const StationaryPolicy& policy, Real tol) {
    if (!model.admits(policy))
        throw ValidationError("policy picks an action outside the state's action set");
    const Real match_tol = 10.0 * tol;
    for (int x = 0; x < model.num_states; ++x) {
        const Real vx = solution.values[static_cast<size_t>(x)];
        const Real q = action_value(model, solution.values, alpha, x, policy(x));
        if (vx == kInf) continue;  // every action is optimal at a divergent state
        if (!(q <= vx + match_tol)) return false;
    }
    return true;
}

}  // namespace acmdp
