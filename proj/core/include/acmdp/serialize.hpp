#pragma once

#include <string>
#include <vector>

#include "acmdp/discounted.hpp"
#include "acmdp/mdp.hpp"
#include "acmdp/oracle.hpp"
#include "acmdp/vanishing.hpp"

namespace acmdp {

// Every emitted format has a parser so artifacts round-trip. Policies are
// serialized as external action ids; parsing them back needs the model.

/// Model JSON: {"num_states": n, "lower_bound": K, "states": [{"actions":
/// [{"id": a, "cost": number|"inf", "kernel": {"y": p, ...}}, ...]}, ...]}.
/// Infinite cost is the literal string "inf".
std::string write_model_json(const FiniteMdp& model);
FiniteMdp parse_model_json(const std::string& text);

/// Solution JSON: alpha, values (null for +inf), policy (action ids),
/// residual, iterations, tolerances.
std::string write_solution_json(const FiniteMdp& model, const DiscountedSolution& solution);
DiscountedSolution parse_solution_json(const FiniteMdp& model, const std::string& text);

/// Trace CSV, one row per (alpha, state): alpha, state, v, m_alpha,
/// u_alpha, scaled_m_alpha ((1-alpha) m_alpha). +inf values print as "inf".
std::string write_trace_csv(const VanishingTrace& trace);
/// Parses the CSV back into per-alpha rows (values and relative values);
/// opt sets and solver diagnostics are not part of the CSV.
struct TraceRows {
    std::vector<Real> alphas;
    std::vector<std::vector<Real>> values;
    std::vector<Real> min_values;
    std::vector<std::vector<Real>> relative_values;
    std::vector<Real> scaled_min_values;
};
TraceRows parse_trace_csv(const std::string& text);

/// Certificate JSON: u, w_bar, policy (action ids), slack, pass, the
/// tolerances used, and the action sets.
std::string write_certificate_json(const FiniteMdp& model, const AcoiCertificate& cert);
AcoiCertificate parse_certificate_json(const FiniteMdp& model, const std::string& text);

/// Limit-action-set JSON: per-state action ids, support counts, fallback
/// states and the thresholds used.
std::string write_limit_actions_json(const FiniteMdp& model, const LimitActionSets& sets);
LimitActionSets parse_limit_actions_json(const FiniteMdp& model, const std::string& text);

/// Oracle JSON: mirrors the solution format plus a method tag.
std::string write_oracle_json(const FiniteMdp& model, const OracleResult& result);
OracleResult parse_oracle_json(const FiniteMdp& model, const std::string& text);

/// Tauberian CSV, one row per (route, parameter, state): route is "abel"
/// (parameter = alpha) or "cesaro" (parameter = N); columns value and gap
/// to the exact policy gain.
std::string write_tauberian_csv(const TauberianReport& report);
struct TauberianRows {
    std::vector<Real> abel_alphas;
    std::vector<std::vector<Real>> abel;
    std::vector<long long> horizons;
    std::vector<std::vector<Real>> cesaro;
};
TauberianRows parse_tauberian_csv(const std::string& text);

/// Minimum-state report JSON (per-alpha argmin sets and their union).
std::string write_min_states_json(const MinStateReport& report);
MinStateReport parse_min_states_json(const std::string& text);

/// Per-state comparison of an extracted policy against a linear feedback
/// rule, one row per grid state: x, policy action, reference action.
struct LqComparisonRows {
    std::vector<Real> x;
    std::vector<Real> policy_action;
    std::vector<Real> reference_action;
};
std::string write_lq_comparison_csv(const LqComparisonRows& rows);
LqComparisonRows parse_lq_comparison_csv(const std::string& text);

/// File helpers; throw std::runtime_error on I/O failure.
void save_text_file(const std::string& path, const std::string& text);
std::string load_text_file(const std::string& path);

/// Policy <-> external action ids.
std::vector<int> policy_to_ids(const FiniteMdp& model, const StationaryPolicy& policy);
StationaryPolicy policy_from_ids(const FiniteMdp& model, const std::vector<int>& ids);

}  // namespace acmdp
