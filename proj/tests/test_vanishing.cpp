#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "acmdp/discretize.hpp"
#include "acmdp/models.hpp"
#include "acmdp/oracle.hpp"
#include "acmdp/vanishing.hpp"
#include "test_support.hpp"

using namespace acmdp;

namespace {

const std::vector<Real> kShortGrid = {0.9, 0.99, 0.999, 0.9999};

// hand-built trace for the envelope and classifier tests
VanishingTrace synthetic_trace(const std::vector<std::vector<Real>>& u_per_alpha) {
    VanishingTrace trace;
    trace.lower_bound = 0.0;
    const size_t count = u_per_alpha.size();
    for (size_t k = 0; k < count; ++k) {
        VanishingTrace::AlphaRecord rec;
        rec.alpha = 1.0 - std::pow(2.0, -static_cast<Real>(k + 1));
        rec.relative_values = u_per_alpha[k];
        rec.values = u_per_alpha[k];
        rec.min_value = *std::min_element(rec.values.begin(), rec.values.end());
        rec.opt_actions.assign(u_per_alpha[k].size(), {0});
        trace.records.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace

TEST_CASE("default alpha grid approaches one geometrically") {
    const auto grid = default_alpha_grid();
    REQUIRE(grid.size() == 9);
    CHECK(grid.front() == doctest::Approx(0.9));
    CHECK(grid.back() == doctest::Approx(1.0 - 1e-5));
    for (size_t k = 1; k < grid.size(); ++k) CHECK(grid[k] > grid[k - 1]);
}

TEST_CASE("trace of the unit self-loop pins every estimate at the cost") {
    const auto m = testing::single_state(1.0);
    const auto trace = compute_trace(m, kShortGrid);
    for (size_t k = 0; k < trace.size(); ++k) {
        CHECK(trace.scaled_min(k) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(trace.records[k].relative_values[0] == 0.0);
    }
    CHECK(trace.gain_low == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(trace.gain_high == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("trace rejects bad grids and trivial models") {
    const auto m = testing::single_state(1.0);
    CHECK_THROWS_AS(compute_trace(m, std::vector<Real>{0.9, 0.5}), SolverError);
    CHECK_THROWS_AS(compute_trace(m, std::vector<Real>{0.9, 1.0}), SolverError);

    FiniteMdp all_inf;
    all_inf.num_states = 1;
    all_inf.lower_bound = 0.0;
    all_inf.states = {{{0, kInf, {{0, 1.0}}}}};
    all_inf = validate_mdp(std::move(all_inf));
    CHECK_THROWS_AS(compute_trace(all_inf, kShortGrid), SolverError);
}

TEST_CASE("the scaled minimum chain stays inside the oracle bracket") {
    // 0 <= w_low <= w_high <= w* on the shifted model, up to solver noise
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto m = random_mdp(seed, 5, 3, {0.25, 2.0}, 0.0, 0.0);
        const auto trace = compute_trace(m, kShortGrid);
        const auto oracle = enumerate_optimal(m);
        const Real w_star =
            *std::min_element(oracle.optimal_gain.begin(), oracle.optimal_gain.end());

        for (size_t k = 0; k + 1 < trace.size(); ++k)
            CHECK(trace.shifted_min_value(k) <= trace.shifted_min_value(k + 1) + 1e-9);
        CHECK(trace.gain_low - trace.lower_bound >= -1e-12);
        CHECK(trace.gain_low <= trace.gain_high);
        CHECK(trace.gain_high <= w_star + 1e-6);
        CHECK(trace.gain_high == doctest::Approx(w_star).epsilon(1e-3));
        CHECK(trace.scaled_min_max >= trace.gain_high);
    }
}

TEST_CASE("envelope of a constant trace is that constant") {
    const std::vector<Real> u = {0.5, 1.5, 0.0};
    const auto trace = synthetic_trace({u, u, u});
    const auto env = build_limit_envelope(trace);
    CHECK(env.u == u);
    for (size_t k = 0; k < trace.size(); ++k) CHECK(env.U[k] == u);
}

TEST_CASE("envelope takes monotone tail infima") {
    // u_alpha(x) = 1 + 1/n on grid index n
    std::vector<std::vector<Real>> us;
    for (int n = 1; n <= 5; ++n) us.push_back({1.0 + 1.0 / n});
    const auto trace = synthetic_trace(us);
    const auto env = build_limit_envelope(trace);
    CHECK(env.u[0] == doctest::Approx(1.2));  // value at the last grid point
    for (size_t k = 0; k + 1 < trace.size(); ++k)
        CHECK(env.U[k][0] <= env.U[k + 1][0]);  // nondecreasing in beta
}

TEST_CASE("envelope lower bound respects the neighborhood radius") {
    const std::vector<Real> u = {3.0, 1.0, 2.0, 5.0};
    const auto trace = synthetic_trace({u, u});
    const auto env = build_limit_envelope(trace, 1);
    CHECK(env.u_lower.back() == std::vector<Real>{1.0, 1.0, 1.0, 2.0});
    for (size_t k = 0; k < trace.size(); ++k)
        for (size_t x = 0; x < u.size(); ++x)
            CHECK(env.u_lower[k][x] <= env.U[k][x]);
}

TEST_CASE("LQ envelope is symmetric and dips at the origin") {
    LqParams params;
    const auto spec = lq_model(params);
    GridSpec grid;
    grid.state_points = uniform_grid(-2.0, 2.0, 0.5);
    grid.action_points = uniform_grid(-2.0, 2.0, 0.5);
    const auto m = discretize(spec, grid);
    const auto trace = compute_trace(m, kShortGrid);
    const auto env = build_limit_envelope(trace);

    const int n = m.num_states;
    for (int x = 0; x < n; ++x)
        CHECK(env.u[static_cast<size_t>(x)] ==
              doctest::Approx(env.u[static_cast<size_t>(n - 1 - x)]).epsilon(1e-9));
    const int origin = (n - 1) / 2;
    for (int x = 0; x < n; ++x)
        CHECK(env.u[static_cast<size_t>(origin)] <= env.u[static_cast<size_t>(x)] + 1e-12);
}

TEST_CASE("certificate equality case passes and a lowball w_bar fails") {
    const auto m = testing::single_state(1.0);
    LimitEnvelope env;
    env.beta_grid = {0.9, 0.99};
    env.U = {{0.0}, {0.0}};
    env.u_lower = env.U;
    env.u = {0.0};

    const auto pass = build_certificate(m, env, 1.0);
    CHECK(pass.pass);
    CHECK(pass.slack[0] == doctest::Approx(0.0));

    const auto fail = build_certificate(m, env, 0.5);
    CHECK_FALSE(fail.pass);
    CHECK(fail.slack[0] == doctest::Approx(-0.5));
    REQUIRE(fail.failure_state.has_value());
    CHECK(*fail.failure_state == 0);
    CHECK(fail.failure_gap == doctest::Approx(0.5));
}

TEST_CASE("certificate policy recovers the oracle optimum on random models") {
    for (std::uint64_t seed = 21; seed <= 28; ++seed) {
        const auto m = random_mdp(seed, 5, 3, {0.0, 1.0}, 0.0, 0.0);
        const auto trace = compute_trace(m, kShortGrid);
        const auto env = build_limit_envelope(trace);
        const auto cert =
            build_certificate(m, env, trace.gain_high, certificate_tolerance(trace, env));
        REQUIRE(cert.pass);

        const auto oracle = enumerate_optimal(m);
        const auto gain = policy_gain(m, cert.policy);
        for (int x = 0; x < 5; ++x)
            CHECK(gain[static_cast<size_t>(x)] ==
                  doctest::Approx(oracle.optimal_gain[static_cast<size_t>(x)]).epsilon(1e-6));

        // the argmin sets sit inside the certified sets
        for (int x = 0; x < 5; ++x)
            for (int a : cert.minimizing_actions[static_cast<size_t>(x)]) {
                const auto& certified = cert.certified_actions[static_cast<size_t>(x)];
                CHECK(std::find(certified.begin(), certified.end(), a) != certified.end());
            }
    }
}

TEST_CASE("certificate fails cleanly when the limit function diverges") {
    // two disconnected loops with different costs: u_alpha(0) = 1/(1-alpha)
    FiniteMdp m;
    m.num_states = 2;
    m.lower_bound = 0.0;
    m.states = {{{0, 1.0, {{0, 1.0}}}}, {{0, 0.0, {{1, 1.0}}}}};
    m = validate_mdp(std::move(m));
    const auto trace = compute_trace(m, kShortGrid);
    const auto env = build_limit_envelope(trace);
    const auto cert = build_certificate(m, env, trace.gain_high);
    CHECK_FALSE(cert.pass);
    REQUIRE(cert.failure_state.has_value());
    CHECK(*cert.failure_state == 0);
    CHECK(cert.failure_gap > 0.5);
}

TEST_CASE("certificate soundness: iterating the inequality dominates the recursion") {
    const auto m = random_mdp(33, 5, 3, {0.0, 1.0}, 0.0, 0.0);
    const auto trace = compute_trace(m, kShortGrid);
    const auto env = build_limit_envelope(trace);
    const auto cert =
        build_certificate(m, env, trace.gain_high, certificate_tolerance(trace, env));
    REQUIRE(cert.pass);

    const std::vector<long long> horizons = {1, 10, 100, 1000};
    const auto v = policy_horizon_values(m, cert.policy, horizons);
    for (size_t i = 0; i < horizons.size(); ++i) {
        const Real n = static_cast<Real>(horizons[i]);
        for (int x = 0; x < 5; ++x)
            CHECK(n * cert.w_bar + cert.u[static_cast<size_t>(x)] >=
                  v[i][static_cast<size_t>(x)] - n * cert.tol);
    }
}

TEST_CASE("limit action sets on a single action") {
    const auto m = testing::single_state(1.0);
    const auto trace = compute_trace(m, kShortGrid);
    const auto env = build_limit_envelope(trace);
    const auto cert = build_certificate(m, env, trace.gain_high);
    REQUIRE(cert.pass);
    const auto sets = build_limit_action_sets(m, trace, cert);
    CHECK(sets.actions[0] == std::vector<int>{0});
    CHECK(sets.fallback_states.empty());
}

TEST_CASE("limit action sets keep a uniquely optimal action") {
    FiniteMdp m;
    m.num_states = 1;
    m.lower_bound = 0.0;
    m.states = {{{0, 1.0, {{0, 1.0}}}, {1, 3.0, {{0, 1.0}}}}};
    m = validate_mdp(std::move(m));
    const auto trace = compute_trace(m, kShortGrid);
    const auto env = build_limit_envelope(trace);
    const auto cert = build_certificate(m, env, trace.gain_high);
    REQUIRE(cert.pass);
    const auto sets = build_limit_action_sets(m, trace, cert);
    CHECK(sets.actions[0] == std::vector<int>{0});
    CHECK(sets.support_counts[0][0] == 3);
}

TEST_CASE("limit action sets admit alternating optima when min_count allows") {
    // both actions are identical, so both are average-cost optimal; fabricate
    // a trace whose per-alpha opt sets alternate between them
    FiniteMdp m;
    m.num_states = 1;
    m.lower_bound = 0.0;
    m.states = {{{0, 1.0, {{0, 1.0}}}, {1, 1.0, {{0, 1.0}}}}};
    m = validate_mdp(std::move(m));
    const auto oracle = enumerate_optimal(m, 1000, true);
    for (const auto& g : *oracle.per_policy_gains) CHECK(g[0] == doctest::Approx(1.0));

    auto trace = synthetic_trace({{0.0}, {0.0}, {0.0}, {0.0}});
    trace.records[0].opt_actions = {{0}};
    trace.records[1].opt_actions = {{1}};
    trace.records[2].opt_actions = {{0}};
    trace.records[3].opt_actions = {{1}};
    trace.gain_high = 1.0;

    LimitEnvelope env = build_limit_envelope(trace);
    const auto cert = build_certificate(m, env, 1.0);
    REQUIRE(cert.pass);

    const auto strict = build_limit_action_sets(m, trace, cert, 4, 2);
    CHECK(strict.actions[0] == std::vector<int>{0, 1});

    const auto tight = build_limit_action_sets(m, trace, cert, 2, 2);
    // only one action appears twice in a 2-point tail; fallback fills in
    CHECK(tight.actions[0].size() == 1);
    CHECK(tight.fallback_states == std::vector<int>{0});
}

TEST_CASE("limit action sets demand a passing certificate") {
    const auto m = testing::single_state(1.0);
    const auto trace = compute_trace(m, kShortGrid);
    const auto env = build_limit_envelope(trace);
    auto cert = build_certificate(m, env, 0.0);  // fails
    CHECK_FALSE(cert.pass);
    CHECK_THROWS_AS(build_limit_action_sets(m, trace, cert), SolverError);
}

TEST_CASE("tauberian identities on the unit self-loop") {
    const auto m = testing::single_state(1.0);
    const auto trace = compute_trace(m, kShortGrid);
    StationaryPolicy p{{0}};
    const std::vector<long long> horizons = {1, 10, 100};
    const auto report = tauberian_check(m, p, trace, horizons);
    for (const auto& row : report.abel) CHECK(row[0] == doctest::Approx(1.0));
    for (const auto& row : report.cesaro) CHECK(row[0] == doctest::Approx(1.0));
    CHECK(report.max_abel_gap < 1e-9);
    CHECK(report.max_cesaro_gap < 1e-9);
}

TEST_CASE("tauberian routes approach the cycle average") {
    const auto m = testing::cycle({0.0, 2.0});
    const auto trace = compute_trace(m, kShortGrid);
    StationaryPolicy p{{0, 0}};
    const std::vector<long long> horizons = {10, 1000, 100000};
    const auto report = tauberian_check(m, p, trace, horizons);
    CHECK(report.gain[0] == doctest::Approx(1.0));
    CHECK(report.max_abel_gap < 1e-3);    // alpha = 0.9999
    CHECK(report.max_cesaro_gap < 1e-4);  // N = 1e5
}

TEST_CASE("tauberian gaps shrink to the oracle gain on random models") {
    const auto m = random_mdp(55, 5, 3, {0.0, 1.0}, 0.0, 0.0);
    const auto trace = compute_trace(m, kShortGrid);
    const auto oracle = enumerate_optimal(m);
    const std::vector<long long> horizons = {100, 100000};
    const auto report = tauberian_check(m, oracle.optimal_policy, trace, horizons);
    for (int x = 0; x < 5; ++x) {
        const Real g = report.gain[static_cast<size_t>(x)];
        CHECK(std::abs(report.abel.back()[static_cast<size_t>(x)] - g) <=
              1e-2 * (1.0 + std::abs(g)));
        CHECK(std::abs(report.cesaro.back()[static_cast<size_t>(x)] - g) <=
              1e-2 * (1.0 + std::abs(g)));
    }
}

TEST_CASE("boundedness classifier spots the three regimes") {
    // constant, diverging, and oscillating relative values
    std::vector<std::vector<Real>> us;
    for (int k = 0; k < 6; ++k) {
        const Real big = std::pow(10.0, k + 1);
        us.push_back({2.0, big, (k % 2 == 0) ? 1.0 : big});
    }
    const auto trace = synthetic_trace(us);
    const auto report = classify_boundedness(trace);
    CHECK(report.verdict[0] == BoundednessVerdict::bounded_sup);
    CHECK(report.verdict[1] == BoundednessVerdict::inconclusive);
    CHECK(report.verdict[2] == BoundednessVerdict::bounded_liminf);
}

TEST_CASE("boundedness classifier needs four grid points") {
    const auto trace = synthetic_trace({{0.0}, {0.0}});
    CHECK_THROWS_AS(classify_boundedness(trace), SolverError);
}

TEST_CASE("minimum states of a singleton model") {
    const auto m = testing::single_state(1.0);
    const auto trace = compute_trace(m, kShortGrid);
    const auto report = minimum_value_states(trace);
    for (const auto& states : report.per_alpha) CHECK(states == std::vector<int>{0});
    CHECK(report.union_states == std::vector<int>{0});
}

TEST_CASE("minimum states keep both symmetric minima") {
    const auto trace = synthetic_trace({{0.0, 1.0, 0.0}, {0.0, 2.0, 0.0}});
    const auto report = minimum_value_states(trace, 1e-8);
    CHECK(report.union_states == std::vector<int>{0, 2});
    CHECK(report.contained_in(0, 2));
    CHECK_FALSE(report.contained_in(1, 2));
}

TEST_CASE("minimum states cluster near the LQ origin") {
    LqParams params;
    const auto spec = lq_model(params);
    GridSpec grid;
    grid.state_points = uniform_grid(-2.0, 2.0, 0.5);
    grid.action_points = uniform_grid(-2.0, 2.0, 0.5);
    const auto m = discretize(spec, grid);
    const auto trace = compute_trace(m, kShortGrid);
    const auto report = minimum_value_states(trace, 1e-8);
    const int origin = (m.num_states - 1) / 2;
    CHECK(report.contained_in(origin - 1, origin + 1));
}

TEST_CASE("cost shifts move the trace statistics and nothing else") {
    const Real k = 7.3;
    const auto m = random_mdp(61, 4, 3, {0.0, 1.0}, 0.0, 0.0);
    const auto shifted = add_cost_offset(m, k);

    const auto a = compute_trace(m, kShortGrid);
    const auto b = compute_trace(shifted, kShortGrid);
    CHECK(b.gain_high == doctest::Approx(a.gain_high + k).epsilon(1e-9));
    CHECK(b.gain_low == doctest::Approx(a.gain_low + k).epsilon(1e-9));
    for (size_t idx = 0; idx < a.size(); ++idx) {
        CHECK(a.records[idx].opt_actions == b.records[idx].opt_actions);
        for (size_t x = 0; x < 4; ++x)
            CHECK(a.records[idx].relative_values[x] ==
                  doctest::Approx(b.records[idx].relative_values[x]).epsilon(1e-8));
    }

    const auto env_a = build_limit_envelope(a);
    const auto env_b = build_limit_envelope(b);
    const auto cert_a =
        build_certificate(m, env_a, a.gain_high, certificate_tolerance(a, env_a));
    const auto cert_b =
        build_certificate(shifted, env_b, b.gain_high, certificate_tolerance(b, env_b));
    REQUIRE(cert_a.pass);
    REQUIRE(cert_b.pass);
    CHECK(cert_a.policy.choice == cert_b.policy.choice);
    CHECK(cert_a.certified_actions == cert_b.certified_actions);
    CHECK(cert_a.minimizing_actions == cert_b.minimizing_actions);
}

TEST_CASE("solve_average runs the full pipeline") {
    const auto m = random_mdp(71, 5, 3, {0.0, 1.0}, 0.0, 0.0);
    PipelineOptions options;
    options.alphas = kShortGrid;
    const auto result = solve_average(m, options);
    CHECK(result.failed_stage.empty());
    CHECK(result.certificate.pass);
    REQUIRE(result.limit_actions.has_value());
    REQUIRE(result.tauberian.has_value());
    for (int x = 0; x < 5; ++x) CHECK_FALSE(result.limit_actions->actions[static_cast<size_t>(x)].empty());
}

TEST_CASE("solve_average names the failing stage") {
    FiniteMdp m;  // disconnected loops: certificate must fail
    m.num_states = 2;
    m.lower_bound = 0.0;
    m.states = {{{0, 1.0, {{0, 1.0}}}}, {{0, 0.0, {{1, 1.0}}}}};
    m = validate_mdp(std::move(m));
    PipelineOptions options;
    options.alphas = kShortGrid;
    const auto result = solve_average(m, options);
    CHECK(result.failed_stage == "build_certificate");
    CHECK_FALSE(result.certificate.pass);
}
