#include "acmdp/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "compiled.hpp"

namespace acmdp {

namespace {

constexpr int kMaxDenseStates = 1000;  // dense linear algebra cap for the oracle

struct PolicyChain {
    std::vector<std::vector<std::pair<int, Real>>> rows;  // positive entries only
    std::vector<Real> cost;
};

PolicyChain chain_of(const FiniteMdp& model, const StationaryPolicy& policy) {
    PolicyChain chain;
    const int n = model.num_states;
    chain.rows.resize(static_cast<size_t>(n));
    chain.cost.resize(static_cast<size_t>(n));
    for (int x = 0; x < n; ++x) {
        const auto& act = model.action(x, policy(x));
        chain.cost[static_cast<size_t>(x)] = act.cost;
        for (const auto& [y, p] : act.kernel)
            if (p > 0.0) chain.rows[static_cast<size_t>(x)].emplace_back(y, p);
    }
    return chain;
}

// States with positive probability of ever hitting `seed` (including seed).
std::vector<char> backward_closure(const PolicyChain& chain, const std::vector<char>& seed) {
    const int n = static_cast<int>(chain.rows.size());
    std::vector<std::vector<int>> rev(static_cast<size_t>(n));
    for (int x = 0; x < n; ++x)
        for (const auto& [y, p] : chain.rows[static_cast<size_t>(x)]) rev[static_cast<size_t>(y)].push_back(x);
    std::vector<char> mark = seed;
    std::vector<int> stack;
    for (int x = 0; x < n; ++x)
        if (mark[static_cast<size_t>(x)]) stack.push_back(x);
    while (!stack.empty()) {
        const int y = stack.back();
        stack.pop_back();
        for (int x : rev[static_cast<size_t>(y)])
            if (!mark[static_cast<size_t>(x)]) {
                mark[static_cast<size_t>(x)] = 1;
                stack.push_back(x);
            }
    }
    return mark;
}

// Iterative Tarjan restricted to states with keep[x]; returns component ids
// (-1 outside) and the component count.
std::pair<std::vector<int>, int> components(const PolicyChain& chain, const std::vector<char>& keep) {
    const int n = static_cast<int>(chain.rows.size());
    std::vector<int> comp(static_cast<size_t>(n), -1), index(static_cast<size_t>(n), -1),
        low(static_cast<size_t>(n), 0);
    std::vector<char> on_stack(static_cast<size_t>(n), 0);
    std::vector<int> stack;
    int next_index = 0, count = 0;

    struct Frame {
        int v;
        size_t edge;
    };
    std::vector<Frame> call;
    for (int root = 0; root < n; ++root) {
        if (!keep[static_cast<size_t>(root)] || index[static_cast<size_t>(root)] != -1) continue;
        call.push_back({root, 0});
        while (!call.empty()) {
            auto& frame = call.back();
            const int v = frame.v;
            if (frame.edge == 0) {
                index[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = next_index++;
                stack.push_back(v);
                on_stack[static_cast<size_t>(v)] = 1;
            }
            bool descended = false;
            while (frame.edge < chain.rows[static_cast<size_t>(v)].size()) {
                const int w = chain.rows[static_cast<size_t>(v)][frame.edge].first;
                ++frame.edge;
                if (!keep[static_cast<size_t>(w)]) continue;
                if (index[static_cast<size_t>(w)] == -1) {
                    call.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[static_cast<size_t>(w)])
                    low[static_cast<size_t>(v)] =
                        std::min(low[static_cast<size_t>(v)], index[static_cast<size_t>(w)]);
            }
            if (descended) continue;
            if (low[static_cast<size_t>(v)] == index[static_cast<size_t>(v)]) {
                while (true) {
                    const int w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<size_t>(w)] = 0;
                    comp[static_cast<size_t>(w)] = count;
                    if (w == v) break;
                }
                ++count;
            }
            call.pop_back();
            if (!call.empty()) {
                const int parent = call.back().v;
                low[static_cast<size_t>(parent)] =
                    std::min(low[static_cast<size_t>(parent)], low[static_cast<size_t>(v)]);
            }
        }
    }
    return {std::move(comp), count};
}

std::vector<Real> class_stationary(const PolicyChain& chain, const std::vector<int>& members) {
    const int m = static_cast<int>(members.size());
    if (m > kMaxDenseStates)
        throw SolverError("recurrent class above the oracle's dense-solve cap (" +
                          std::to_string(m) + " states)");
    std::vector<int> local(chain.rows.size(), -1);
    for (int i = 0; i < m; ++i) local[static_cast<size_t>(members[static_cast<size_t>(i)])] = i;

    // pi' (P - I) = 0 with the normalization row sum(pi) = 1
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (const auto& [y, p] : chain.rows[static_cast<size_t>(members[static_cast<size_t>(i)])]) {
            const int j = local[static_cast<size_t>(y)];
            A(j, i) += p;  // transposed
        }
        A(i, i) -= 1.0;
    }
    A.row(m - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    b(m - 1) = 1.0;
    const Eigen::VectorXd pi = A.partialPivLu().solve(b);

    std::vector<Real> out(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) out[static_cast<size_t>(i)] = pi(i);
    return out;
}

}  // namespace

std::vector<Real> policy_gain(const FiniteMdp& model, const StationaryPolicy& policy) {
    if (!model.admits(policy))
        throw ValidationError("policy picks an action outside the state's action set");
    const int n = model.num_states;
    const PolicyChain chain = chain_of(model, policy);

    // states that can reach an infinite chosen cost have infinite gain
    std::vector<char> bad(static_cast<size_t>(n), 0);
    bool any_bad = false;
    for (int x = 0; x < n; ++x)
        if (chain.cost[static_cast<size_t>(x)] == kInf) {
            bad[static_cast<size_t>(x)] = 1;
            any_bad = true;
        }
    std::vector<char> doomed(static_cast<size_t>(n), 0);
    if (any_bad) doomed = backward_closure(chain, bad);

    std::vector<char> good(static_cast<size_t>(n), 0);
    for (int x = 0; x < n; ++x) good[static_cast<size_t>(x)] = !doomed[static_cast<size_t>(x)];

    std::vector<Real> gain(static_cast<size_t>(n), kInf);

    auto [comp, count] = components(chain, good);
    if (count == 0) return gain;  // everything reaches an infinite cost

    // a component is recurrent iff no edge leaves it
    std::vector<char> recurrent(static_cast<size_t>(count), 1);
    for (int x = 0; x < n; ++x) {
        if (!good[static_cast<size_t>(x)]) continue;
        for (const auto& [y, p] : chain.rows[static_cast<size_t>(x)])
            if (comp[static_cast<size_t>(y)] != comp[static_cast<size_t>(x)])
                recurrent[static_cast<size_t>(comp[static_cast<size_t>(x)])] = 0;
    }

    std::vector<std::vector<int>> class_members(static_cast<size_t>(count));
    for (int x = 0; x < n; ++x)
        if (good[static_cast<size_t>(x)]) class_members[static_cast<size_t>(comp[static_cast<size_t>(x)])].push_back(x);

    for (int c = 0; c < count; ++c) {
        if (!recurrent[static_cast<size_t>(c)]) continue;
        const auto& members = class_members[static_cast<size_t>(c)];
        const auto pi = class_stationary(chain, members);
        Real g = 0.0;
        for (size_t i = 0; i < members.size(); ++i)
            g += pi[i] * chain.cost[static_cast<size_t>(members[i])];
        for (int x : members) gain[static_cast<size_t>(x)] = g;
    }

    // transient states: gain is harmonic, (I - Q) g_T = P[transient -> recurrent] g_R
    std::vector<int> transient;
    for (int x = 0; x < n; ++x)
        if (good[static_cast<size_t>(x)] && !recurrent[static_cast<size_t>(comp[static_cast<size_t>(x)])])
            transient.push_back(x);
    if (!transient.empty()) {
        const int m = static_cast<int>(transient.size());
        if (m > kMaxDenseStates)
            throw SolverError("transient block above the oracle's dense-solve cap");
        std::vector<int> local(static_cast<size_t>(n), -1);
        for (int i = 0; i < m; ++i) local[static_cast<size_t>(transient[static_cast<size_t>(i)])] = i;
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
        for (int i = 0; i < m; ++i) {
            for (const auto& [y, p] : chain.rows[static_cast<size_t>(transient[static_cast<size_t>(i)])]) {
                if (local[static_cast<size_t>(y)] >= 0)
                    A(i, local[static_cast<size_t>(y)]) -= p;
                else
                    b(i) += p * gain[static_cast<size_t>(y)];  // recurrent, gain known
            }
        }
        const Eigen::VectorXd g = A.partialPivLu().solve(b);
        for (int i = 0; i < m; ++i) gain[static_cast<size_t>(transient[static_cast<size_t>(i)])] = g(i);
    }
    return gain;
}

OracleResult enumerate_optimal(const FiniteMdp& model, long long cap, bool keep_table) {
    const int n = model.num_states;
    long long count = 1;
    for (int x = 0; x < n; ++x) {
        count *= model.num_actions(x);
        if (count > cap)
            throw SolverError("policy count exceeds the enumeration cap; use relative_value_iteration");
    }

    StationaryPolicy policy;
    policy.choice.assign(static_cast<size_t>(n), 0);
    auto advance = [&]() {
        // odometer with the last state fastest: enumeration order is
        // lexicographic in the action-index vector
        for (int x = n - 1; x >= 0; --x) {
            if (++policy.choice[static_cast<size_t>(x)] < model.num_actions(x)) return true;
            policy.choice[static_cast<size_t>(x)] = 0;
        }
        return false;
    };

    OracleResult result;
    result.method = OracleMethod::enumeration;
    result.optimal_gain.assign(static_cast<size_t>(n), kInf);
    if (keep_table) result.per_policy_gains.emplace();

    // pass 1: pointwise minimum over all policies
    do {
        const auto g = policy_gain(model, policy);
        for (int x = 0; x < n; ++x)
            result.optimal_gain[static_cast<size_t>(x)] =
                std::min(result.optimal_gain[static_cast<size_t>(x)], g[static_cast<size_t>(x)]);
        if (keep_table) result.per_policy_gains->push_back(g);
    } while (advance());

    // pass 2: lexicographically first policy attaining the minimum everywhere
    policy.choice.assign(static_cast<size_t>(n), 0);
    constexpr Real kAttainTol = 1e-9;
    do {
        const auto g = policy_gain(model, policy);
        bool attains = true;
        for (int x = 0; x < n && attains; ++x) {
            const Real opt = result.optimal_gain[static_cast<size_t>(x)];
            const Real gx = g[static_cast<size_t>(x)];
            attains = (opt == kInf) ? gx == kInf : gx <= opt + kAttainTol;
        }
        if (attains) {
            result.optimal_policy = policy;
            return result;
        }
    } while (advance());

    // a simultaneously attaining stationary policy exists on finite models;
    // reaching here means float ties straddled kAttainTol -- take the start
    result.optimal_policy.choice.assign(static_cast<size_t>(n), 0);
    return result;
}

OracleResult relative_value_iteration(const FiniteMdp& model, Real tol, long long max_iter,
                                      Aperiodicity mode) {
    const int n = model.num_states;
    detail::CompiledModel cm(model, 0.0);

    std::vector<Real> h(static_cast<size_t>(n), 0.0), th(static_cast<size_t>(n), 0.0);
    bool damped = mode == Aperiodicity::on;
    const long long stall_window = std::max<long long>(500, 8LL * n);
    Real last_window_span = kInf;
    Real span = kInf, lo = 0.0, hi = 0.0;

    for (long long iter = 1; iter <= max_iter; ++iter) {
        lo = kInf;
        hi = -kInf;
        for (int x = 0; x < n; ++x) {
            Real best = kInf;
            for (int pair = cm.state_begin[x]; pair < cm.state_begin[x + 1]; ++pair) {
                const Real c = cm.costs[pair];
                if (c == kInf) continue;
                Real s = 0.0;
                for (int k = cm.kernel_begin[pair]; k < cm.kernel_begin[pair + 1]; ++k)
                    s += cm.prob[k] * h[static_cast<size_t>(cm.succ[k])];
                const Real q = damped ? c + 0.5 * s + 0.5 * h[static_cast<size_t>(x)] : c + s;
                if (q < best) best = q;
            }
            if (best == kInf)
                throw SolverError("relative_value_iteration: state " + std::to_string(x) +
                                  " has no finite-cost action (restrict_to_finite_costs first)");
            th[static_cast<size_t>(x)] = best;
            const Real d = best - h[static_cast<size_t>(x)];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        span = hi - lo;
        if (span <= tol) break;

        // renormalize to keep the iterates bounded
        const Real ref = th[0];
        for (int x = 0; x < n; ++x) h[static_cast<size_t>(x)] = th[static_cast<size_t>(x)] - ref;

        if (iter % stall_window == 0) {
            const bool stalled = span > 0.5 * last_window_span;
            last_window_span = span;
            if (stalled && !damped) {
                if (mode == Aperiodicity::auto_on_stagnation) {
                    damped = true;  // half self-loop damping, gain invariant
                    last_window_span = kInf;
                } else {
                    throw NonConvergenceError(
                        "relative_value_iteration: span stalled at " + std::to_string(span) +
                            "; the chain is periodic or multichain -- enable the aperiodicity transform",
                        std::move(h), iter, span);
                }
            }
        }
        if (iter == max_iter)
            throw NonConvergenceError(
                "relative_value_iteration: span " + std::to_string(span) + " after " +
                    std::to_string(iter) + " iterations (periodic or multichain model; "
                    "the aperiodicity transform may help)",
                std::move(h), iter, span);
    }

    OracleResult result;
    result.method = OracleMethod::relative_value_iteration;
    result.aperiodicity_applied = damped && mode != Aperiodicity::on;
    const Real gain = 0.5 * (lo + hi);
    result.optimal_gain.assign(static_cast<size_t>(n), gain);

    // greedy selection against the relative values, lowest index wins ties
    result.optimal_policy.choice.assign(static_cast<size_t>(n), 0);
    for (int x = 0; x < n; ++x) {
        Real best = kInf;
        int best_a = 0;
        const int pair_begin = cm.state_begin[x];
        for (int pair = pair_begin; pair < cm.state_begin[x + 1]; ++pair) {
            const Real c = cm.costs[pair];
            if (c == kInf) continue;
            Real s = 0.0;
            for (int k = cm.kernel_begin[pair]; k < cm.kernel_begin[pair + 1]; ++k)
                s += cm.prob[k] * h[static_cast<size_t>(cm.succ[k])];
            if (c + s < best) {
                best = c + s;
                best_a = pair - pair_begin;
            }
        }
        result.optimal_policy.choice[static_cast<size_t>(x)] = best_a;
    }
    return result;
}

RiccatiSolution lq_riccati(Real gamma, Real beta, Real q, Real r, Real noise_variance) {
    if (!(q > 0.0) || !(r > 0.0))
        throw ValidationError("lq_riccati requires q > 0 and r > 0");
    // gamma == 0 degenerates to p = q in one step and is allowed
    if (!(gamma * beta > 0.0) && gamma != 0.0)
        throw ValidationError("lq_riccati requires gamma * beta > 0");
    if (!(noise_variance >= 0.0))
        throw ValidationError("lq_riccati requires noise_variance >= 0");

    const auto step = [&](Real p) {
        return q + gamma * gamma * p - gamma * gamma * beta * beta * p * p / (r + beta * beta * p);
    };
    Real p = q;
    for (long long iter = 0; iter < 1000000; ++iter) {
        const Real next = step(p);
        const Real delta = std::abs(next - p);
        p = next;
        if (delta <= 1e-12) {
            RiccatiSolution sol;
            sol.p = p;
            sol.feedback_gain = gamma * beta * p / (r + beta * beta * p);
            sol.w_star = p * noise_variance;
            return sol;
        }
    }
    throw SolverError("lq_riccati: fixed-point iteration did not converge");
}

WeakFatouResult weak_fatou_check(const std::vector<std::vector<Real>>& measures,
                                 const std::vector<Real>& limit_measure,
                                 const std::vector<std::vector<Real>>& functions,
                                 int tail_start) {
    const size_t steps = measures.size();
    const size_t support = limit_measure.size();
    if (functions.size() != steps || steps == 0)
        throw ValidationError("measure and function sequences must have equal nonzero length");
    for (size_t i = 0; i < steps; ++i)
        if (measures[i].size() != support || functions[i].size() != support)
            throw ValidationError("support size mismatch");

    if (tail_start < 0) tail_start = static_cast<int>(steps / 2);
    if (tail_start >= static_cast<int>(steps)) tail_start = static_cast<int>(steps) - 1;

    const auto integrate = [support](const std::vector<Real>& h, const std::vector<Real>& mu) {
        Real total = 0.0;
        for (size_t s = 0; s < support; ++s) {
            if (mu[s] == 0.0) continue;  // inf * 0 = 0 under the integral
            if (h[s] == kInf) return kInf;
            total += mu[s] * h[s];
        }
        return total;
    };

    // both liminfs realized as infima over the tail of the finite sequence
    std::vector<Real> h_low(support, kInf);
    Real rhs = kInf;
    for (size_t i = static_cast<size_t>(tail_start); i < steps; ++i) {
        for (size_t s = 0; s < support; ++s) h_low[s] = std::min(h_low[s], functions[i][s]);
        rhs = std::min(rhs, integrate(functions[i], measures[i]));
    }

    WeakFatouResult result;
    result.lhs = integrate(h_low, limit_measure);
    result.rhs = rhs;
    result.holds = result.lhs <= result.rhs + 1e-12;
    return result;
}

std::vector<Real> policy_discounted_values(const FiniteMdp& model, const StationaryPolicy& policy,
                                           Real alpha) {
    if (!model.admits(policy))
        throw ValidationError("policy picks an action outside the state's action set");
    if (!(alpha >= 0.0) || alpha >= 1.0)
        throw SolverError("policy_discounted_values requires alpha in [0,1)");
    const int n = model.num_states;
    if (n > kMaxDenseStates)
        throw SolverError("model above the oracle's dense-solve cap");

    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd c(n);
    for (int x = 0; x < n; ++x) {
        const auto& act = model.action(x, policy(x));
        if (!std::isfinite(act.cost))
            throw SolverError("policy_discounted_values requires finite chosen costs");
        c(x) = act.cost;
        for (const auto& [y, p] : act.kernel) A(x, y) -= alpha * p;
    }
    const Eigen::VectorXd v = A.partialPivLu().solve(c);
    std::vector<Real> out(static_cast<size_t>(n));
    for (int x = 0; x < n; ++x) out[static_cast<size_t>(x)] = v(x);
    return out;
}

std::vector<std::vector<Real>> policy_horizon_values(const FiniteMdp& model,
                                                     const StationaryPolicy& policy,
                                                     std::span<const long long> horizons) {
    if (!model.admits(policy))
        throw ValidationError("policy picks an action outside the state's action set");
    for (size_t i = 1; i < horizons.size(); ++i)
        if (horizons[i] <= horizons[i - 1])
            throw ValidationError("horizons must be strictly increasing");
    const int n = model.num_states;
    const PolicyChain chain = chain_of(model, policy);
    for (int x = 0; x < n; ++x)
        if (!std::isfinite(chain.cost[static_cast<size_t>(x)]))
            throw SolverError("policy_horizon_values requires finite chosen costs");

    std::vector<std::vector<Real>> out;
    out.reserve(horizons.size());
    std::vector<Real> v(static_cast<size_t>(n), 0.0), next(static_cast<size_t>(n), 0.0);
    long long step = 0;
    for (const long long target : horizons) {
        for (; step < target; ++step) {
            for (int x = 0; x < n; ++x) {
                Real s = 0.0;
                for (const auto& [y, p] : chain.rows[static_cast<size_t>(x)])
                    s += p * v[static_cast<size_t>(y)];
                next[static_cast<size_t>(x)] = chain.cost[static_cast<size_t>(x)] + s;
            }
            v.swap(next);
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace acmdp
