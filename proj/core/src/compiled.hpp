#pragma once

#include <vector>

#include "acmdp/mdp.hpp"

namespace acmdp::detail {

/// Flat CSR view of a model for solver hot loops. Zero-probability kernel
/// entries are dropped so +inf values propagate without producing NaN.
struct CompiledModel {
    int num_states = 0;
    std::vector<int> state_begin;   ///< size n+1, (x,a) pair range per state
    std::vector<Real> costs;        ///< per pair, shifted by -cost_offset
    std::vector<int> kernel_begin;  ///< size pairs+1, entry range per pair
    std::vector<int> succ;
    std::vector<Real> prob;

    explicit CompiledModel(const FiniteMdp& m, Real cost_offset = 0.0) {
        num_states = m.num_states;
        state_begin.reserve(static_cast<size_t>(num_states) + 1);
        state_begin.push_back(0);
        size_t pairs = m.num_pairs();
        costs.reserve(pairs);
        kernel_begin.reserve(pairs + 1);
        kernel_begin.push_back(0);
        for (const auto& actions : m.states) {
            for (const auto& a : actions) {
                costs.push_back(a.cost == kInf ? kInf : a.cost - cost_offset);
                for (const auto& [y, p] : a.kernel) {
                    if (p > 0.0) {
                        succ.push_back(y);
                        prob.push_back(p);
                    }
                }
                kernel_begin.push_back(static_cast<int>(succ.size()));
            }
            state_begin.push_back(static_cast<int>(costs.size()));
        }
    }

    int num_pairs() const { return static_cast<int>(costs.size()); }
};

}  // namespace acmdp::detail
