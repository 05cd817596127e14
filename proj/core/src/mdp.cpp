#include "acmdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace acmdp {

FiniteMdp validate_mdp(FiniteMdp model) {
    if (model.num_states <= 0)
        throw ValidationError("model has no states");
    if (static_cast<int>(model.states.size()) != model.num_states)
        throw ValidationError("state table size does not match num_states");
    if (!std::isfinite(model.lower_bound))
        throw ValidationError("lower_bound must be finite");

    for (int x = 0; x < model.num_states; ++x) {
        const auto& actions = model.states[static_cast<size_t>(x)];
        if (actions.empty())
            throw ValidationError("empty action set at state " + std::to_string(x), x);
        for (int a = 0; a < static_cast<int>(actions.size()); ++a) {
            const auto& act = actions[static_cast<size_t>(a)];
            if (!is_extended(act.cost))
                throw ValidationError("cost is NaN or -inf at state " + std::to_string(x) +
                                          ", action " + std::to_string(a),
                                      x, a);
            if (std::isfinite(act.cost) && act.cost < model.lower_bound)
                throw ValidationError("cost below lower_bound at state " + std::to_string(x) +
                                          ", action " + std::to_string(a),
                                      x, a);
            Real sum = 0.0;
            for (const auto& [y, p] : act.kernel) {
                if (y < 0 || y >= model.num_states)
                    throw ValidationError("successor index out of range at state " +
                                              std::to_string(x) + ", action " + std::to_string(a),
                                          x, a);
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw ValidationError("negative or non-finite kernel entry at state " +
                                              std::to_string(x) + ", action " + std::to_string(a),
                                          x, a);
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowSumTol)
                throw ValidationError("row not stochastic at state " + std::to_string(x) +
                                          ", action " + std::to_string(a) + " (sum " +
                                          std::to_string(sum) + ")",
                                      x, a);
        }
    }
    return model;
}

Real action_value(const FiniteMdp& model, std::span<const Real> u, Real alpha, int x, int a) {
    const auto& act = model.action(x, a);
    if (act.cost == kInf) return kInf;
    if (alpha == 0.0) return act.cost;  // exact, no continuation term
    Real expect = 0.0;
    for (const auto& [y, p] : act.kernel) {
        if (p <= 0.0) continue;
        Real uy = u[static_cast<size_t>(y)];
        if (uy == kInf) return kInf;
        expect += p * uy;
    }
    return act.cost + alpha * expect;
}

FiniteCostRestriction restrict_to_finite_costs(const FiniteMdp& model) {
    const int n = model.num_states;
    std::vector<char> has_finite(static_cast<size_t>(n), 0);
    bool any_finite = false;
    for (int x = 0; x < n; ++x) {
        for (const auto& act : model.states[static_cast<size_t>(x)]) {
            if (std::isfinite(act.cost)) {
                has_finite[static_cast<size_t>(x)] = 1;
                any_finite = true;
                break;
            }
        }
    }
    if (!any_finite)
        throw ValidationError("trivial model: every cost is infinite");

    FiniteCostRestriction out;
    out.state_map.assign(static_cast<size_t>(n), -1);
    int kept = 0;
    for (int x = 0; x < n; ++x)
        if (has_finite[static_cast<size_t>(x)]) out.state_map[static_cast<size_t>(x)] = kept++;

    const bool need_sink = kept < n;
    const int sink = kept;  // appended after the surviving states
    if (need_sink) {
        out.sink = sink;
        for (int x = 0; x < n; ++x)
            if (!has_finite[static_cast<size_t>(x)]) out.state_map[static_cast<size_t>(x)] = sink;
    }

    FiniteMdp m;
    m.num_states = need_sink ? kept + 1 : kept;
    m.lower_bound = model.lower_bound;
    m.states.resize(static_cast<size_t>(m.num_states));
    for (int x = 0; x < n; ++x) {
        if (!has_finite[static_cast<size_t>(x)]) continue;
        auto& dst = m.states[static_cast<size_t>(out.state_map[static_cast<size_t>(x)])];
        for (const auto& act : model.states[static_cast<size_t>(x)]) {
            if (!std::isfinite(act.cost)) continue;
            FiniteMdp::Action na;
            na.id = act.id;
            na.cost = act.cost;
            Real sink_mass = 0.0;
            for (const auto& [y, p] : act.kernel) {
                if (p == 0.0) continue;
                if (has_finite[static_cast<size_t>(y)])
                    na.kernel.emplace_back(out.state_map[static_cast<size_t>(y)], p);
                else
                    sink_mass += p;
            }
            if (sink_mass > 0.0) na.kernel.emplace_back(sink, sink_mass);
            dst.push_back(std::move(na));
        }
    }
    if (need_sink) {
        FiniteMdp::Action absorb;
        absorb.id = 0;
        absorb.cost = kInf;
        absorb.kernel.emplace_back(sink, 1.0);
        m.states[static_cast<size_t>(sink)].push_back(std::move(absorb));
    }
    out.model = std::move(m);
    return out;
}

FiniteMdp add_cost_offset(FiniteMdp model, Real offset) {
    if (!std::isfinite(offset))
        throw ValidationError("cost offset must be finite");
    for (auto& actions : model.states)
        for (auto& act : actions)
            if (std::isfinite(act.cost)) act.cost += offset;
    model.lower_bound += offset;
    return model;
}

}  // namespace acmdp
