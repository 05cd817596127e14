#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "acmdp/discounted.hpp"
#include "acmdp/models.hpp"
#include "test_support.hpp"

using namespace acmdp;

TEST_CASE("finite horizon with N = 0 is identically zero") {
    const auto m = testing::single_state(1.0);
    const auto sol = finite_horizon_solve(m, 0.7, 0);
    REQUIRE(sol.values.size() == 1);
    CHECK(sol.values[0][0] == 0.0);
    CHECK(sol.policy.empty());
}

TEST_CASE("finite horizon geometric sum") {
    const auto m = testing::single_state(1.0);
    const auto sol = finite_horizon_solve(m, 0.5, 3);
    CHECK(sol.values[3][0] == doctest::Approx(1.75));  // 1 + 0.5 + 0.25
}

TEST_CASE("finite horizon matches brute-force enumeration of action sequences") {
    // two-state deterministic model, 2 actions: stay (cost differs by state)
    // or hop to the other state
    FiniteMdp m;
    m.num_states = 2;
    m.lower_bound = 0.0;
    m.states = {{{0, 1.0, {{0, 1.0}}}, {1, 5.0, {{1, 1.0}}}},
                {{0, 2.0, {{1, 1.0}}}, {1, 0.5, {{0, 1.0}}}}};
    m = validate_mdp(std::move(m));
    const Real alpha = 0.9;

    // hand-unrolled two-step recursion: all 2-step action sequences
    for (int x = 0; x < 2; ++x) {
        Real best = kInf;
        for (int a0 = 0; a0 < 2; ++a0) {
            const auto& first = m.action(x, a0);
            const int mid = first.kernel[0].first;
            for (int a1 = 0; a1 < 2; ++a1)
                best = std::min(best, first.cost + alpha * m.action(mid, a1).cost);
        }
        const auto sol = finite_horizon_solve(m, alpha, 2);
        CHECK(sol.values[2][static_cast<size_t>(x)] == doctest::Approx(best));
    }
}

TEST_CASE("finite horizon allows alpha = 1") {
    const auto m = testing::cycle({0.0, 2.0});
    const auto sol = finite_horizon_solve(m, 1.0, 4);
    CHECK(sol.values[4][0] == doctest::Approx(4.0));  // 0+2+0+2
    CHECK(sol.values[4][1] == doctest::Approx(4.0));
}

TEST_CASE("value iteration on the unit self-loop") {
    const auto m = testing::single_state(1.0);
    const auto sol = value_iteration(m, 0.5);
    CHECK(sol.values[0] == doctest::Approx(2.0));  // c/(1-alpha)
    CHECK(sol.monotone);
    CHECK(sol.residual <= sol.tol);
}

TEST_CASE("value iteration on zero costs returns zero and full opt sets") {
    FiniteMdp m;
    m.num_states = 2;
    m.lower_bound = 0.0;
    m.states = {{{0, 0.0, {{0, 1.0}}}, {1, 0.0, {{1, 1.0}}}},
                {{0, 0.0, {{0, 0.5}, {1, 0.5}}}, {1, 0.0, {{1, 1.0}}}}};
    m = validate_mdp(std::move(m));
    const auto sol = value_iteration(m, 0.9);
    for (int x = 0; x < 2; ++x) {
        CHECK(sol.values[static_cast<size_t>(x)] == 0.0);
        CHECK(sol.opt_actions[static_cast<size_t>(x)].size() == 2);
    }
}

TEST_CASE("value iteration matches the policy-enumeration linear-solve oracle") {
    const auto m = random_mdp(42, 4, 3, {0.0, 1.0}, 0.0, 0.0);
    const Real alpha = 0.9;
    const auto sol = value_iteration(m, alpha);
    const auto expected = testing::brute_force_discounted(m, alpha);
    for (int x = 0; x < 4; ++x)
        CHECK(sol.values[static_cast<size_t>(x)] ==
              doctest::Approx(expected[static_cast<size_t>(x)]).epsilon(1e-8));
}

TEST_CASE("value iteration rejects alpha outside [0,1)") {
    const auto m = testing::single_state(1.0);
    CHECK_THROWS_AS(value_iteration(m, 1.0), SolverError);
    CHECK_THROWS_AS(value_iteration(m, -0.1), SolverError);
}

TEST_CASE("value iteration errors with the last iterate on max_iter") {
    const auto m = testing::single_state(1.0);
    try {
        value_iteration(m, 0.99, 1e-12, 3);
        FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
        CHECK(e.iterations == 3);
        CHECK(e.last_values.size() == 1);
        CHECK(e.last_values[0] > 0.0);
    }
}

TEST_CASE("value iteration marks divergent states +inf and excludes them") {
    // state 1 is an infinite-cost trap; state 0 can stay finite
    FiniteMdp m;
    m.num_states = 2;
    m.lower_bound = 0.0;
    m.states = {{{0, 1.0, {{0, 1.0}}}, {1, 0.0, {{1, 1.0}}}},
                {{0, kInf, {{1, 1.0}}}}};
    m = validate_mdp(std::move(m));
    const auto sol = value_iteration(m, 0.5);
    CHECK(sol.values[0] == doctest::Approx(2.0));  // stays on the self-loop
    CHECK(sol.values[1] == kInf);
    CHECK(sol.opt_actions[1].size() == 1);  // every action optimal at +inf states
    CHECK(sol.policy(0) == 0);
}

TEST_CASE("value iteration propagates divergence through chains") {
    // 0 -> 1 -> trap: every path from 0 ends in the trap
    FiniteMdp m;
    m.num_states = 3;
    m.lower_bound = 0.0;
    m.states = {{{0, 1.0, {{1, 1.0}}}},
                {{0, 1.0, {{2, 1.0}}}},
                {{0, kInf, {{2, 1.0}}}}};
    m = validate_mdp(std::move(m));
    const auto sol = value_iteration(m, 0.5);
    CHECK(sol.values[0] == kInf);
    CHECK(sol.values[1] == kInf);
    CHECK(sol.values[2] == kInf);
}

TEST_CASE("constant cost shift moves values by k/(1-alpha) and keeps opt sets") {
    const Real k = 7.3;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto m = random_mdp(seed, 5, 3, {0.0, 2.0}, 0.2, 0.0);
        const auto shifted = add_cost_offset(m, k);
        const Real alpha = 0.85;
        const auto a = value_iteration(m, alpha);
        const auto b = value_iteration(shifted, alpha);
        for (int x = 0; x < 5; ++x) {
            CHECK(b.values[static_cast<size_t>(x)] ==
                  doctest::Approx(a.values[static_cast<size_t>(x)] + k / (1.0 - alpha))
                      .epsilon(1e-10));
            CHECK(a.opt_actions[static_cast<size_t>(x)] == b.opt_actions[static_cast<size_t>(x)]);
        }
        CHECK(a.policy.choice == b.policy.choice);
    }
}

TEST_CASE("successive iterates contract at rate alpha") {
    const auto m = random_mdp(9, 5, 2, {0.0, 1.0}, 0.0, 0.0);
    const Real alpha = 0.8;
    const auto fh = finite_horizon_solve(m, alpha, 30);
    for (size_t n = 1; n + 1 < fh.values.size(); ++n) {
        Real d1 = 0.0, d2 = 0.0;
        for (int x = 0; x < 5; ++x) {
            d1 = std::max(d1, std::abs(fh.values[n][static_cast<size_t>(x)] -
                                       fh.values[n - 1][static_cast<size_t>(x)]));
            d2 = std::max(d2, std::abs(fh.values[n + 1][static_cast<size_t>(x)] -
                                       fh.values[n][static_cast<size_t>(x)]));
        }
        CHECK(d2 <= alpha * d1 + 1e-12);
    }
}

TEST_CASE("verify_dcoe passes on converged values") {
    const auto m = random_mdp(5, 4, 3, {0.0, 1.0}, 0.0, 0.0);
    const auto sol = value_iteration(m, 0.9);
    const auto report = verify_dcoe(m, 0.9, sol.values, sol.tol);
    CHECK(report.pass);
}

TEST_CASE("verify_dcoe localizes a perturbation") {
    const auto m = random_mdp(5, 4, 3, {0.0, 1.0}, 0.0, 0.0);
    const Real alpha = 0.9;
    const auto sol = value_iteration(m, alpha);
    auto values = sol.values;
    values[2] += 1.0;
    const auto report = verify_dcoe(m, alpha, values, 1e-9);
    CHECK_FALSE(report.pass);
    // the perturbed state moved a full unit; neighbors only via alpha * (incoming mass)
    CHECK(report.residuals[2] >= doctest::Approx(1.0 - alpha).epsilon(1e-6));
    CHECK(report.max_residual <= 1.0 + 1e-9);
}

TEST_CASE("verify_dcoe zero fixed point") {
    FiniteMdp m;
    m.num_states = 1;
    m.lower_bound = 0.0;
    m.states = {{{0, 0.0, {{0, 1.0}}}}};
    m = validate_mdp(std::move(m));
    std::vector<Real> zero(1, 0.0);
    const auto report = verify_dcoe(m, 0.9, zero, 1e-12);
    CHECK(report.pass);
    CHECK(report.max_residual == 0.0);
}

TEST_CASE("check_policy_optimality accepts the solution policy and rejects worse") {
    FiniteMdp m;
    m.num_states = 1;
    m.lower_bound = 0.0;
    m.states = {{{0, 1.0, {{0, 1.0}}}, {1, 3.0, {{0, 1.0}}}}};
    m = validate_mdp(std::move(m));
    const auto sol = value_iteration(m, 0.5);
    CHECK(check_policy_optimality(m, 0.5, sol, sol.policy, sol.tol));

    StationaryPolicy bad;
    bad.choice = {1};
    CHECK_FALSE(check_policy_optimality(m, 0.5, sol, bad, sol.tol));
}

TEST_CASE("check_policy_optimality accepts every policy on full ties") {
    FiniteMdp m;
    m.num_states = 1;
    m.lower_bound = 0.0;
    m.states = {{{0, 1.0, {{0, 1.0}}}, {1, 1.0, {{0, 1.0}}}}};
    m = validate_mdp(std::move(m));
    const auto sol = value_iteration(m, 0.5);
    for (int a = 0; a < 2; ++a) {
        StationaryPolicy p;
        p.choice = {a};
        CHECK(check_policy_optimality(m, 0.5, sol, p, sol.tol));
    }
}
