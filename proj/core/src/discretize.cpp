#include "acmdp/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace acmdp {

namespace {

void check_grid(const GridSpec& grid) {
    if (grid.state_points.size() < 2)
        throw ValidationError("grid needs at least 2 state points");
    if (grid.action_points.empty())
        throw ValidationError("grid needs at least 1 action point");
    for (size_t i = 1; i < grid.state_points.size(); ++i)
        if (!(grid.state_points[i] > grid.state_points[i - 1]))
            throw ValidationError("state grid not strictly increasing");
    for (size_t i = 1; i < grid.action_points.size(); ++i)
        if (!(grid.action_points[i] > grid.action_points[i - 1]))
            throw ValidationError("action grid not strictly increasing");
}

Real fold_into(Real s, Real lo, Real hi, BoundaryPolicy policy) {
    if (s >= lo && s <= hi) return s;
    if (policy == BoundaryPolicy::clamp) return std::clamp(s, lo, hi);
    // reflect: fold along the triangle wave of period 2*(hi-lo)
    const Real width = hi - lo;
    Real t = std::fmod(s - lo, 2.0 * width);
    if (t < 0.0) t += 2.0 * width;
    return lo + (t <= width ? t : 2.0 * width - t);
}

}  // namespace

std::vector<Real> uniform_grid(Real low, Real high, Real step) {
    if (!(step > 0.0) || !(high > low))
        throw ValidationError("uniform_grid needs high > low and step > 0");
    std::vector<Real> points;
    const int count = static_cast<int>(std::floor((high - low) / step + 0.5));
    points.reserve(static_cast<size_t>(count) + 1);
    for (int i = 0; i <= count; ++i) {
        Real p = low + step * i;
        if (p > high + 0.5 * step) break;
        points.push_back(p);
    }
    return points;
}

FiniteMdp discretize(const ContinuousModelSpec& spec, const GridSpec& grid) {
    check_grid(grid);
    const auto& xs = grid.state_points;
    const auto& as = grid.action_points;
    if (xs.front() < spec.state_low || xs.back() > spec.state_high)
        throw ValidationError("state grid leaves the model's state interval");
    if (as.front() < spec.action_low || as.back() > spec.action_high)
        throw ValidationError("action grid leaves the model's action interval");
    if (spec.noise_law.empty())
        throw ValidationError("noise law has no atoms");
    Real psum = 0.0;
    for (const auto& [v, p] : spec.noise_law) {
        if (!(p >= 0.0)) throw ValidationError("negative noise probability");
        if (!std::isfinite(v)) throw ValidationError("non-finite noise atom");
        psum += p;
    }
    if (std::abs(psum - 1.0) > kRowSumTol)
        throw ValidationError("noise probabilities do not sum to 1");

    const int nx = static_cast<int>(xs.size());
    const int na = static_cast<int>(as.size());
    const Real lo = xs.front(), hi = xs.back();

    FiniteMdp m;
    m.num_states = nx;
    m.states.resize(static_cast<size_t>(nx));
    Real min_cost = kInf;

    for (int i = 0; i < nx; ++i) {
        auto& actions = m.states[static_cast<size_t>(i)];
        actions.reserve(static_cast<size_t>(na));
        for (int j = 0; j < na; ++j) {
            FiniteMdp::Action act;
            act.id = j;
            act.cost = spec.cost_fn(xs[static_cast<size_t>(i)], as[static_cast<size_t>(j)]);
            if (!std::isfinite(act.cost))
                throw ValidationError("cost_fn is non-finite at a grid point", i, j);
            min_cost = std::min(min_cost, act.cost);

            std::map<int, Real> row;  // accumulates mass, atoms may collide
            for (const auto& [noise, p] : spec.noise_law) {
                if (p == 0.0) continue;
                Real s = spec.next_state_fn(xs[static_cast<size_t>(i)],
                                            as[static_cast<size_t>(j)], noise);
                if (!std::isfinite(s))
                    throw ValidationError("next_state_fn is non-finite at a grid point", i, j);
                s = fold_into(s, lo, hi, grid.boundary);

                // bracketing points with linear-interpolation weights
                auto it = std::upper_bound(xs.begin(), xs.end(), s);
                int right = static_cast<int>(it - xs.begin());
                if (right == 0) right = 1;
                if (right == nx) right = nx - 1;
                const int left = right - 1;
                const Real gap = xs[static_cast<size_t>(right)] - xs[static_cast<size_t>(left)];
                Real w_right = (s - xs[static_cast<size_t>(left)]) / gap;
                // snap near-exact hits so deterministic dynamics stay one-point
                if (w_right < 1e-9) w_right = 0.0;
                if (w_right > 1.0 - 1e-9) w_right = 1.0;
                if (w_right > 0.0) row[right] += p * w_right;
                if (w_right < 1.0) row[left] += p * (1.0 - w_right);
            }

            // pin the row sum to 1 exactly on the largest entry
            Real sum = 0.0;
            auto largest = row.begin();
            for (auto it2 = row.begin(); it2 != row.end(); ++it2) {
                sum += it2->second;
                if (it2->second > largest->second) largest = it2;
            }
            largest->second += 1.0 - sum;

            act.kernel.assign(row.begin(), row.end());
            actions.push_back(std::move(act));
        }
    }
    m.lower_bound = min_cost;
    return validate_mdp(std::move(m));
}

}  // namespace acmdp
