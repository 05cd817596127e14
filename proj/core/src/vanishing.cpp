#include "acmdp/vanishing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <utility>

#include "acmdp/oracle.hpp"

namespace acmdp {

std::vector<Real> default_alpha_grid() {
    std::vector<Real> grid;
    grid.reserve(9);
    for (int k = 2; k <= 10; ++k) grid.push_back(1.0 - std::pow(10.0, -0.5 * k));
    return grid;
}

std::vector<Real> VanishingTrace::alphas() const {
    std::vector<Real> out;
    out.reserve(records.size());
    for (const auto& rec : records) out.push_back(rec.alpha);
    return out;
}

Real VanishingTrace::scaled_min(size_t k) const {
    return (1.0 - records[k].alpha) * records[k].min_value;
}

Real VanishingTrace::shifted_min_value(size_t k) const {
    return records[k].min_value - lower_bound / (1.0 - records[k].alpha);
}

Real VanishingTrace::shifted_scaled_min(size_t k) const {
    return (1.0 - records[k].alpha) * shifted_min_value(k);
}

VanishingTrace compute_trace(const FiniteMdp& model, std::span<const Real> alphas, Real vi_tol,
                             int tail_window, long long max_iter, int threads) {
    if (alphas.empty()) throw SolverError("compute_trace needs a nonempty alpha grid");
    for (size_t k = 0; k < alphas.size(); ++k) {
        if (!(alphas[k] >= 0.0) || alphas[k] >= 1.0)
            throw SolverError("alpha grid must lie inside [0,1)");
        if (k > 0 && !(alphas[k] > alphas[k - 1]))
            throw SolverError("alpha grid must be strictly increasing");
    }
    if (tail_window < 1) throw SolverError("tail_window must be >= 1");

    const size_t count = alphas.size();
    VanishingTrace trace;
    trace.lower_bound = model.lower_bound;
    trace.tail_window = std::min<int>(tail_window, static_cast<int>(count));
    trace.records.resize(count);

    // one independent solve per grid point; schedule the slow ones
    // (alpha near 1) first so workers stay balanced
    std::vector<size_t> order(count);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return alphas[a] > alphas[b]; });

    std::atomic<size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        while (true) {
            const size_t slot = cursor.fetch_add(1);
            if (slot >= count) return;
            const size_t k = order[slot];
            try {
                DiscountedSolution sol = value_iteration(model, alphas[k], vi_tol, max_iter);
                auto& rec = trace.records[k];
                rec.alpha = alphas[k];
                rec.iterations = sol.iterations;
                rec.residual = sol.residual;
                rec.opt_actions = std::move(sol.opt_actions);
                rec.values = std::move(sol.values);
                Real m = kInf;
                for (Real v : rec.values)
                    if (v != kInf) m = std::min(m, v);
                if (m == kInf)
                    throw SolverError("every state has infinite value; the model is trivial");
                rec.min_value = m;
                rec.relative_values.resize(rec.values.size());
                for (size_t x = 0; x < rec.values.size(); ++x)
                    rec.relative_values[x] = rec.values[x] == kInf ? kInf : rec.values[x] - m;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    int workers = threads > 0 ? threads : static_cast<int>(std::min<size_t>(
                                              count, std::max(1u, std::thread::hardware_concurrency())));
    workers = std::min<int>(workers, static_cast<int>(count));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    const size_t tail_begin = count - static_cast<size_t>(trace.tail_window);
    trace.gain_low = kInf;
    trace.gain_high = -kInf;
    trace.scaled_min_max = -kInf;
    for (size_t k = 0; k < count; ++k) {
        const Real scaled = trace.scaled_min(k);
        trace.scaled_min_max = std::max(trace.scaled_min_max, scaled);
        if (k >= tail_begin) {
            trace.gain_low = std::min(trace.gain_low, scaled);
            trace.gain_high = std::max(trace.gain_high, scaled);
        }
    }
    return trace;
}

LimitEnvelope build_limit_envelope(const VanishingTrace& trace,
                                   std::optional<int> neighborhood_radius) {
    const size_t count = trace.size();
    if (count < 2) throw SolverError("build_limit_envelope needs >= 2 grid points");
    const int n = trace.num_states();

    LimitEnvelope env;
    env.beta_grid = trace.alphas();
    env.neighborhood_radius = neighborhood_radius;
    env.U.assign(count, std::vector<Real>(static_cast<size_t>(n), kInf));

    // suffix minima over alpha: U_beta(x) = min_{alpha >= beta} u_alpha(x)
    for (size_t k = count; k-- > 0;) {
        for (int x = 0; x < n; ++x) {
            Real v = trace.records[k].relative_values[static_cast<size_t>(x)];
            if (k + 1 < count) v = std::min(v, env.U[k + 1][static_cast<size_t>(x)]);
            env.U[k][static_cast<size_t>(x)] = v;
        }
    }

    env.u_lower = env.U;
    if (neighborhood_radius && *neighborhood_radius > 0) {
        const int radius = *neighborhood_radius;
        for (size_t k = 0; k < count; ++k) {
            for (int x = 0; x < n; ++x) {
                Real low = kInf;
                const int from = std::max(0, x - radius);
                const int to = std::min(n - 1, x + radius);
                for (int y = from; y <= to; ++y)
                    low = std::min(low, env.U[k][static_cast<size_t>(y)]);
                env.u_lower[k][static_cast<size_t>(x)] = low;
            }
        }
    }

    env.u = env.u_lower[count - 1];  // envelopes are nondecreasing in beta
    return env;
}

AcoiCertificate build_certificate(const FiniteMdp& model, const LimitEnvelope& envelope,
                                  Real w_bar, Real tol, Real match_tol) {
    const int n = model.num_states;
    if (static_cast<int>(envelope.u.size()) != n)
        throw ValidationError("envelope does not match the model's state count");

    AcoiCertificate cert;
    cert.u = envelope.u;
    cert.w_bar = w_bar;
    cert.tol = tol;
    cert.match_tol = match_tol;
    cert.slack.assign(static_cast<size_t>(n), 0.0);
    cert.certified_actions.assign(static_cast<size_t>(n), {});
    cert.minimizing_actions.assign(static_cast<size_t>(n), {});
    cert.policy.choice.assign(static_cast<size_t>(n), 0);

    bool ok = true;
    for (int x = 0; x < n; ++x) {
        if (cert.u[static_cast<size_t>(x)] == kInf) {
            if (ok) {
                ok = false;
                cert.failure_state = x;
                cert.failure_gap = kInf;
                cert.failure_reason = "limit function estimate is infinite at state " +
                                      std::to_string(x) + " (boundedness assumption fails "
                                      "numerically or the alpha grid is too short)";
            }
            cert.slack[static_cast<size_t>(x)] = -kInf;
            continue;
        }

        const Real bound = w_bar + cert.u[static_cast<size_t>(x)];
        Real min_q = kInf;
        for (int a = 0; a < model.num_actions(x); ++a) {
            const Real q = action_value(model, cert.u, 1.0, x, a);
            if (q <= bound + tol) cert.certified_actions[static_cast<size_t>(x)].push_back(a);
            min_q = std::min(min_q, q);
        }
        for (int a = 0; a < model.num_actions(x); ++a) {
            const Real q = action_value(model, cert.u, 1.0, x, a);
            if (q <= min_q + match_tol) cert.minimizing_actions[static_cast<size_t>(x)].push_back(a);
        }
        const int chosen = cert.minimizing_actions[static_cast<size_t>(x)].front();
        cert.policy.choice[static_cast<size_t>(x)] = chosen;
        cert.slack[static_cast<size_t>(x)] =
            bound - action_value(model, cert.u, 1.0, x, chosen);

        if (cert.certified_actions[static_cast<size_t>(x)].empty() && ok) {
            ok = false;
            cert.failure_state = x;
            cert.failure_gap = min_q - bound;
            cert.failure_reason = "no action satisfies the optimality inequality at state " +
                                  std::to_string(x) + " (minimal gap " +
                                  std::to_string(min_q - bound) + ")";
        }
    }

    Real min_slack = kInf;
    for (Real s : cert.slack) min_slack = std::min(min_slack, s);
    cert.pass = ok && min_slack >= -tol;
    return cert;
}

Real certificate_tolerance(const VanishingTrace& trace, const LimitEnvelope& envelope,
                           Real base_tol) {
    const size_t count = trace.size();
    Real defect = 0.0;

    if (count >= 2) {
        // Richardson remainder of the scaled-min trend on the last two points
        const size_t top = count - 1, prev = count - 2;
        const Real eps_top = 1.0 - trace.records[top].alpha;
        const Real eps_prev = 1.0 - trace.records[prev].alpha;
        const Real ratio = eps_prev / eps_top;
        if (ratio > 1.0) {
            const Real step = trace.scaled_min(top) - trace.scaled_min(prev);
            if (step > 0.0) defect += 2.0 * step / (ratio - 1.0);
        }
    }

    if (count >= 4) {
        // (1 - alpha_top) * sup u, excluding states whose u is visibly
        // diverging along the grid (tail at least doubling over the head)
        const size_t tail = std::max<size_t>(2, std::min<size_t>(3, count / 2));
        const int n = trace.num_states();
        Real u_max = 0.0;
        for (int x = 0; x < n; ++x) {
            if (envelope.u[static_cast<size_t>(x)] == kInf) continue;
            Real head = 0.0, recent = 0.0;
            bool diverging = false;
            for (size_t k = 0; k < count; ++k) {
                const Real u = trace.records[k].relative_values[static_cast<size_t>(x)];
                if (u == kInf) {
                    diverging = true;
                    break;
                }
                if (k < count - tail)
                    head = std::max(head, u);
                else
                    recent = std::max(recent, u);
            }
            if (diverging || recent > 2.0 * head + 1.0) continue;
            u_max = std::max(u_max, envelope.u[static_cast<size_t>(x)]);
        }
        defect += (1.0 - trace.records[count - 1].alpha) * u_max;
    }
    return base_tol + defect;
}

LimitActionSets build_limit_action_sets(const FiniteMdp& model, const VanishingTrace& trace,
                                        const AcoiCertificate& cert, int tail_window,
                                        int min_count) {
    if (!cert.pass)
        throw SolverError("build_limit_action_sets requires a passing certificate" +
                          (cert.failure_reason.empty() ? std::string()
                                                       : " (" + cert.failure_reason + ")"));
    const size_t count = trace.size();
    if (tail_window < 1 || static_cast<size_t>(tail_window) > count)
        throw SolverError("tail_window must be in [1, grid length]");
    const int n = trace.num_states();
    if (model.num_states != n)
        throw ValidationError("model does not match the trace's state count");

    LimitActionSets sets;
    sets.tail_window = tail_window;
    sets.min_count = min_count;
    sets.actions.assign(static_cast<size_t>(n), {});
    sets.support_counts.assign(static_cast<size_t>(n), {});

    const size_t tail_begin = count - static_cast<size_t>(tail_window);
    for (int x = 0; x < n; ++x) {
        // tail memberships in the discount-optimal sets
        const size_t width = static_cast<size_t>(model.num_actions(x));
        auto& counts = sets.support_counts[static_cast<size_t>(x)];
        counts.assign(width, 0);
        for (size_t k = tail_begin; k < count; ++k)
            for (int a : trace.records[k].opt_actions[static_cast<size_t>(x)])
                ++counts[static_cast<size_t>(a)];

        std::vector<char> certified(width, 0);
        for (int a : cert.certified_actions[static_cast<size_t>(x)])
            certified[static_cast<size_t>(a)] = 1;

        auto& kept = sets.actions[static_cast<size_t>(x)];
        for (size_t a = 0; a < width; ++a)
            if (counts[a] >= min_count && certified[a]) kept.push_back(static_cast<int>(a));

        if (kept.empty()) {
            // threshold emptied the set: fall back to the most frequent tail
            // action inside the certified set, then to the certified set itself
            int best = -1, best_count = 0;
            for (size_t a = 0; a < width; ++a)
                if (certified[a] && counts[a] > best_count) {
                    best = static_cast<int>(a);
                    best_count = counts[a];
                }
            if (best < 0) best = cert.certified_actions[static_cast<size_t>(x)].front();
            kept.push_back(best);
            sets.fallback_states.push_back(x);
        }
    }
    return sets;
}

TauberianReport tauberian_check(const FiniteMdp& model, const StationaryPolicy& policy,
                                const VanishingTrace& trace, std::span<const long long> horizons) {
    if (!model.admits(policy))
        throw ValidationError("policy picks an action outside the state's action set");
    for (size_t i = 0; i < horizons.size(); ++i) {
        if (horizons[i] < 1) throw ValidationError("horizons must be >= 1");
        if (i > 0 && horizons[i] <= horizons[i - 1])
            throw ValidationError("horizons must be strictly increasing");
    }

    TauberianReport report;
    report.gain = policy_gain(model, policy);
    for (Real g : report.gain)
        if (!std::isfinite(g))
            throw SolverError("tauberian_check requires a policy with finite gain everywhere");

    report.alphas = trace.alphas();
    report.abel.reserve(report.alphas.size());
    for (Real alpha : report.alphas) {
        auto v = policy_discounted_values(model, policy, alpha);
        for (auto& entry : v) entry *= 1.0 - alpha;
        report.abel.push_back(std::move(v));
    }

    report.horizons.assign(horizons.begin(), horizons.end());
    auto values = policy_horizon_values(model, policy, horizons);
    report.cesaro.reserve(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        auto& v = values[i];
        for (auto& entry : v) entry /= static_cast<Real>(horizons[i]);
        report.cesaro.push_back(std::move(v));
    }

    const int n = model.num_states;
    for (int x = 0; x < n; ++x) {
        if (!report.abel.empty())
            report.max_abel_gap =
                std::max(report.max_abel_gap,
                         std::abs(report.abel.back()[static_cast<size_t>(x)] -
                                  report.gain[static_cast<size_t>(x)]));
        if (!report.cesaro.empty())
            report.max_cesaro_gap =
                std::max(report.max_cesaro_gap,
                         std::abs(report.cesaro.back()[static_cast<size_t>(x)] -
                                  report.gain[static_cast<size_t>(x)]));
    }
    return report;
}

BoundednessReport classify_boundedness(const VanishingTrace& trace) {
    const size_t count = trace.size();
    if (count < 4) throw SolverError("classify_boundedness needs >= 4 grid points");
    const int n = trace.num_states();
    const size_t tail = std::max<size_t>(2, std::min<size_t>(3, count / 2));

    BoundednessReport report;
    report.tail = static_cast<int>(tail);
    report.verdict.assign(static_cast<size_t>(n), BoundednessVerdict::inconclusive);
    report.sup_u.assign(static_cast<size_t>(n), 0.0);
    report.tail_min_u.assign(static_cast<size_t>(n), 0.0);

    for (int x = 0; x < n; ++x) {
        Real sup_all = -kInf, sup_head = -kInf;
        Real min_last = kInf, min_prev = kInf;
        bool any_inf = false;
        for (size_t k = 0; k < count; ++k) {
            const Real u = trace.records[k].relative_values[static_cast<size_t>(x)];
            if (u == kInf) any_inf = true;
            sup_all = std::max(sup_all, u);
            if (k < count - tail) sup_head = std::max(sup_head, u);
            if (k >= count - tail) min_last = std::min(min_last, u);
            if (k >= count - 2 * tail && k < count - tail) min_prev = std::min(min_prev, u);
        }
        report.sup_u[static_cast<size_t>(x)] = sup_all;
        report.tail_min_u[static_cast<size_t>(x)] = min_last;
        if (any_inf) continue;  // divergent entries stay inconclusive

        // plateau tests: < 1% relative growth between the head and the tail
        if (sup_all <= sup_head * 1.01 + 1e-12)
            report.verdict[static_cast<size_t>(x)] = BoundednessVerdict::bounded_sup;
        else if (min_last <= min_prev * 1.01 + 1e-12)
            report.verdict[static_cast<size_t>(x)] = BoundednessVerdict::bounded_liminf;
    }
    return report;
}

MinStateReport minimum_value_states(const VanishingTrace& trace, Real tol) {
    const int n = trace.num_states();
    MinStateReport report;
    report.tol = tol;
    report.per_alpha.reserve(trace.size());
    std::vector<char> in_union(static_cast<size_t>(n), 0);
    for (const auto& rec : trace.records) {
        std::vector<int> states;
        for (int x = 0; x < n; ++x)
            if (rec.relative_values[static_cast<size_t>(x)] <= tol) {
                states.push_back(x);
                in_union[static_cast<size_t>(x)] = 1;
            }
        report.per_alpha.push_back(std::move(states));
    }
    report.min_index = n;
    report.max_index = -1;
    for (int x = 0; x < n; ++x)
        if (in_union[static_cast<size_t>(x)]) {
            report.union_states.push_back(x);
            report.min_index = std::min(report.min_index, x);
            report.max_index = std::max(report.max_index, x);
        }
    if (report.union_states.empty()) report.min_index = -1;
    return report;
}

PipelineResult solve_average(const FiniteMdp& model, const PipelineOptions& options) {
    PipelineResult result;
    try {
        result.trace = compute_trace(model, options.alphas, options.vi_tol, options.tail_window,
                                     options.max_iter, options.threads);
    } catch (const SolverError& e) {
        throw PipelineError("compute_trace", e.what());
    }
    try {
        result.envelope = build_limit_envelope(result.trace, options.neighborhood_radius);
    } catch (const SolverError& e) {
        throw PipelineError("build_limit_envelope", e.what());
    }
    const Real cert_tol =
        certificate_tolerance(result.trace, result.envelope, options.cert_tol);
    result.certificate = build_certificate(model, result.envelope, result.trace.gain_high,
                                           cert_tol, options.cert_match_tol);
    result.min_states = minimum_value_states(result.trace, options.min_state_tol);
    if (!result.certificate.pass) {
        result.failed_stage = "build_certificate";
        return result;
    }
    try {
        result.limit_actions = build_limit_action_sets(model, result.trace, result.certificate,
                                                       options.tail_window, options.min_count);
    } catch (const SolverError& e) {
        throw PipelineError("build_limit_action_sets", e.what());
    }
    try {
        result.tauberian = tauberian_check(model, result.certificate.policy, result.trace,
                                           options.horizons);
    } catch (const SolverError& e) {
        throw PipelineError("tauberian_check", e.what());
    }
    return result;
}

}  // namespace acmdp
