#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acmdp/discounted.hpp"
#include "acmdp/mdp.hpp"

namespace acmdp {

/// Default discount grid {1 - 10^{-k/2} : k = 2..10}, nine points
/// approaching 1 geometrically.
std::vector<Real> default_alpha_grid();

/**
 * Vanishing-discount trace: one converged discounted solve per grid alpha,
 * together with the derived per-alpha statistics and tail estimates of the
 * optimal average cost.
 *
 * All reported quantities are in original cost units. The nonnegativity
 * shift by `lower_bound` used for the theory (costs >= 0) is recovered via
 * shifted_min_value / shifted_scaled_min.
 */
struct VanishingTrace {
    struct AlphaRecord {
        Real alpha = 0.0;
        std::vector<Real> values;           ///< v_alpha (+inf where divergent)
        Real min_value = 0.0;               ///< m_alpha = min over finite values
        std::vector<Real> relative_values;  ///< u_alpha = v_alpha - m_alpha, >= 0
        std::vector<std::vector<int>> opt_actions;  ///< discount-optimal sets A_alpha
        long long iterations = 0;
        Real residual = 0.0;
    };

    std::vector<AlphaRecord> records;  ///< strictly increasing alpha
    Real lower_bound = 0.0;            ///< copied from the model
    int tail_window = 3;
    Real gain_low = 0.0;     ///< min over the tail window of (1-alpha) m_alpha
    Real gain_high = 0.0;    ///< max over the tail window of (1-alpha) m_alpha
    Real scaled_min_max = 0.0;  ///< max over the full grid of (1-alpha) m_alpha

    size_t size() const { return records.size(); }
    int num_states() const { return records.empty() ? 0 : static_cast<int>(records.front().values.size()); }

    std::vector<Real> alphas() const;

    /// (1-alpha_k) * m_{alpha_k}.
    Real scaled_min(size_t k) const;
    /// m_{alpha_k} for the shifted nonnegative model: m - lower_bound/(1-alpha).
    Real shifted_min_value(size_t k) const;
    /// (1-alpha_k) * shifted m; nonnegative up to float noise.
    Real shifted_scaled_min(size_t k) const;
};

/**
 * Runs value_iteration on every grid alpha (concurrently) and assembles
 * the trace. gain_low/gain_high are the min/max of (1-alpha) m_alpha over
 * the last `tail_window` grid points -- tail estimates of the liminf and
 * limsup, not the true limits.
 *
 * The grid must be strictly increasing inside [0,1) and the model must
 * have a finite-cost action at every state (apply restrict_to_finite_costs
 * first otherwise). Solver failures propagate.
 */
VanishingTrace compute_trace(const FiniteMdp& model, std::span<const Real> alphas,
                             Real vi_tol = 1e-9, int tail_window = 3,
                             long long max_iter = 1000000, int threads = 0);

/**
 * Grid realization of the limit of the relative values: per beta in the
 * grid, U[beta](x) is the tail infimum of u_alpha(x) over alpha >= beta,
 * u_lower[beta] its lower envelope over a state-index neighborhood
 * (identity when no radius is given -- the discrete topology), and u the
 * envelope at the largest beta. U and u_lower are pointwise nondecreasing
 * in beta.
 */
struct LimitEnvelope {
    std::vector<Real> beta_grid;
    std::vector<std::vector<Real>> U;        ///< [beta][state]
    std::vector<std::vector<Real>> u_lower;  ///< [beta][state]
    std::vector<Real> u;                     ///< final limit estimate
    std::optional<int> neighborhood_radius;
};

/// Builds the limit envelope from a trace with >= 2 grid points. The
/// optional radius (in state-index steps) implements the spatial lower
/// envelope for grid-discretized models.
LimitEnvelope build_limit_envelope(const VanishingTrace& trace,
                                   std::optional<int> neighborhood_radius = std::nullopt);

/**
 * Machine-checkable optimality-inequality certificate: a limit function u,
 * a constant w_bar and a policy phi with per-state slack
 *   slack(x) = w_bar + u(x) - [c(x,phi(x)) + sum_y u(y) q(y|x,phi(x))].
 * The certificate passes iff every slack is >= -tol; a passing certificate
 * pins the optimal average cost to w_bar (up to tol) and proves phi
 * average-cost optimal.
 *
 * certified_actions(x) collects the actions satisfying the inequality at x
 * within tol; minimizing_actions(x) the exact one-step minimizers within
 * match_tol. minimizing_actions is contained in certified_actions whenever
 * the certificate passes with room to spare.
 */
struct AcoiCertificate {
    std::vector<Real> u;
    Real w_bar = 0.0;
    StationaryPolicy policy;
    std::vector<Real> slack;
    std::vector<std::vector<int>> certified_actions;   ///< A*(x)
    std::vector<std::vector<int>> minimizing_actions;  ///< argmin sets
    bool pass = false;
    Real tol = 0.0;
    Real match_tol = 0.0;
    std::optional<int> failure_state;  ///< first state with empty A* / infinite u
    Real failure_gap = 0.0;            ///< its minimal one-step gap above w_bar + u
    std::string failure_reason;
};

/**
 * Builds the certificate for the envelope's u and a given w_bar (normally
 * the trace's gain_high). Fails -- pass = false with the offending state
 * and its minimal gap -- when u is infinite somewhere or some state has no
 * action satisfying the inequality; both signal that the boundedness
 * assumption fails numerically or the alpha grid is too short.
 */
AcoiCertificate build_certificate(const FiniteMdp& model, const LimitEnvelope& envelope,
                                  Real w_bar, Real tol = 1e-6, Real match_tol = 1e-8);

/**
 * Certificate tolerance widened by the grid's own truncation defect.
 *
 * Any finite grid leaves an O(1 - alpha_top) gap in the inequality: the
 * tail estimate of w_bar trails its limit by roughly the remaining trend
 * of (1-alpha) m_alpha, and evaluating the one-step operator at alpha = 1
 * with u taken at alpha_top adds (1-alpha_top) * integral(u) dq. Both are
 * estimated from the trace (Richardson remainder of the scaled-min trend,
 * and (1-alpha_top) * sup u over states whose u has visibly plateaued) and
 * added to `base_tol`. States whose u keeps growing contribute nothing, so
 * genuinely unbounded models still fail their certificates.
 */
Real certificate_tolerance(const VanishingTrace& trace, const LimitEnvelope& envelope,
                           Real base_tol = 1e-6);

/**
 * Actions that stay discount-optimal along the tail of the grid: a is kept
 * at x iff it lies in A_alpha(x) for at least min_count of the last
 * tail_window grid points and in certified_actions(x). When the threshold
 * empties a state's set, the most frequent tail action inside
 * certified_actions is used instead and the state is flagged.
 */
struct LimitActionSets {
    std::vector<std::vector<int>> actions;        ///< per state
    std::vector<std::vector<int>> support_counts; ///< per (state, action index): tail memberships
    std::vector<int> fallback_states;
    int tail_window = 3;
    int min_count = 2;
};

/// Throws SolverError if the certificate did not pass or tail_window
/// exceeds the grid length.
LimitActionSets build_limit_action_sets(const FiniteMdp& model, const VanishingTrace& trace,
                                        const AcoiCertificate& cert, int tail_window = 3,
                                        int min_count = 2);

/**
 * Two-route consistency check of a policy's average cost: the Abel route
 * (1-alpha) v_alpha^phi along the trace grid (fixed-policy linear solves)
 * against the Cesaro route v_N^phi / N along the horizons (fixed-policy
 * recursion), both compared to the exact chain gain.
 */
struct TauberianReport {
    std::vector<Real> gain;                         ///< exact gain of phi per state
    std::vector<Real> alphas;
    std::vector<std::vector<Real>> abel;            ///< [alpha][state] (1-a) v_a^phi
    std::vector<long long> horizons;
    std::vector<std::vector<Real>> cesaro;          ///< [horizon][state] v_N^phi / N
    Real max_abel_gap = 0.0;    ///< at the last grid alpha
    Real max_cesaro_gap = 0.0;  ///< at the last horizon
};

/// Requires a valid policy with finite chosen costs and increasing horizons.
TauberianReport tauberian_check(const FiniteMdp& model, const StationaryPolicy& policy,
                                const VanishingTrace& trace, std::span<const long long> horizons);

/// Heuristic classification of the per-state boundedness of u_alpha along
/// the grid. Finite data cannot verify a limit; "inconclusive" is a valid
/// answer and no verdict is a proof.
enum class BoundednessVerdict {
    bounded_sup,     ///< sup over the grid has plateaued (tail growth < 1%)
    bounded_liminf,  ///< the tail infimum is stable but the sup keeps growing
    inconclusive,
};

struct BoundednessReport {
    std::vector<BoundednessVerdict> verdict;  ///< per state
    std::vector<Real> sup_u;                  ///< max of u_alpha(x) over the grid
    std::vector<Real> tail_min_u;             ///< min of u_alpha(x) over the tail
    int tail = 0;
};

/// Requires >= 4 grid points.
BoundednessReport classify_boundedness(const VanishingTrace& trace);

/// States attaining the per-alpha minimum of v_alpha (u_alpha <= tol), the
/// finite analogue of the minimum sets staying inside a fixed compact set.
struct MinStateReport {
    std::vector<std::vector<int>> per_alpha;
    std::vector<int> union_states;  ///< sorted union over the grid
    int min_index = 0, max_index = 0;
    Real tol = 0.0;

    bool contained_in(int lo, int hi) const { return min_index >= lo && max_index <= hi; }
};

MinStateReport minimum_value_states(const VanishingTrace& trace, Real tol = 1e-8);

/// End-to-end pipeline options; defaults mirror the library defaults.
struct PipelineOptions {
    std::vector<Real> alphas = default_alpha_grid();
    Real vi_tol = 1e-9;
    Real cert_tol = 1e-6;
    Real cert_match_tol = 1e-8;
    Real min_state_tol = 1e-8;
    int tail_window = 3;
    int min_count = 2;
    std::optional<int> neighborhood_radius;
    std::vector<long long> horizons = {10, 100, 1000, 10000};
    long long max_iter = 1000000;
    int threads = 0;  ///< 0 = one worker per grid point
};

/// trace -> envelope -> certificate -> limit action sets -> Tauberian
/// check. `limit_actions` and `tauberian` are filled only when the
/// certificate passes; `failed_stage` names the first failing stage.
struct PipelineResult {
    VanishingTrace trace;
    LimitEnvelope envelope;
    AcoiCertificate certificate;
    std::optional<LimitActionSets> limit_actions;
    std::optional<TauberianReport> tauberian;
    MinStateReport min_states;
    std::string failed_stage;  ///< empty on full success
};

PipelineResult solve_average(const FiniteMdp& model, const PipelineOptions& options = {});

}  // namespace acmdp
