#pragma once

#include <functional>
#include <vector>

#include "acmdp/mdp.hpp"

namespace acmdp {

/**
 * Continuous-state, continuous-action model on intervals, with finite
 * discrete noise. Continuous noise must be pre-quantized by the caller.
 * Intervals may be unbounded (+-inf) when the model functions are defined
 * everywhere; the grid supplies the desk-scale truncation.
 */
struct ContinuousModelSpec {
    Real state_low = 0.0, state_high = 0.0;
    Real action_low = 0.0, action_high = 0.0;
    std::function<Real(Real x, Real a)> cost_fn;
    std::function<Real(Real x, Real a, Real noise)> next_state_fn;
    std::vector<std::pair<Real, Real>> noise_law;  ///< (atom, probability)
};

enum class BoundaryPolicy { clamp, reflect };

/// Rectangular grid on which a continuous model is discretized. Action ids
/// in the resulting FiniteMdp are indices into `action_points`.
struct GridSpec {
    std::vector<Real> state_points;   ///< strictly increasing, >= 2 points
    std::vector<Real> action_points;  ///< strictly increasing, >= 1 point
    BoundaryPolicy boundary = BoundaryPolicy::clamp;
};

/// Uniform grid helper: low, low+step, ..., up to high (inclusive within
/// half a step).
std::vector<Real> uniform_grid(Real low, Real high, Real step);

/**
 * Discretizes a continuous model onto a grid. Each successor state is
 * split onto the two bracketing grid points with linear-interpolation
 * weights; successors outside the grid are clamped or reflected per the
 * grid's boundary policy. Costs are the model cost at the grid points and
 * the resulting kernel rows are stochastic; the output always passes
 * validate_mdp.
 *
 * Throws ValidationError if a grid point lies outside the model's declared
 * intervals, or if a successor or cost evaluates non-finite.
 */
FiniteMdp discretize(const ContinuousModelSpec& spec, const GridSpec& grid);

}  // namespace acmdp
