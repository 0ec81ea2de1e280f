#include <doctest.h>

#include <cmath>

#include "adp/counterexample.hpp"
#include "adp/mdp.hpp"
#include "test_support.hpp"

using namespace adp;
namespace ts = testsupport;

namespace {

Mdp one_state_mdp(double reward, double discount) {
    Mdp mdp;
    mdp.num_states = 1;
    mdp.num_actions = 1;
    mdp.discount = discount;
    mdp.transition = {Eigen::MatrixXd::Ones(1, 1)};
    mdp.reward = Eigen::MatrixXd::Constant(1, 1, reward);
    mdp.validate();
    return mdp;
}

Mdp one_state_two_action_mdp(double r0, double r1, double discount) {
    Mdp mdp;
    mdp.num_states = 1;
    mdp.num_actions = 2;
    mdp.discount = discount;
    mdp.transition = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    mdp.reward.resize(1, 2);
    mdp.reward << r0, r1;
    mdp.validate();
    return mdp;
}

}  // namespace

TEST_CASE("apply_T_mu single-state closed forms") {
    Mdp mdp = one_state_mdp(1.0, 0.5);
    Policy mu{{0}};
    ValueVec zero = ValueVec::Zero(1);
    CHECK(apply_T_mu(mdp, mu, zero)(0) == doctest::Approx(1.0).epsilon(1e-15));

    ValueVec fixed = ValueVec::Constant(1, 2.0);  // r/(1-alpha)
    CHECK(apply_T_mu(mdp, mu, fixed)(0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("apply_T_mu is an alpha-contraction") {
    RngStream stream(11);
    for (int trial = 0; trial < 200; ++trial) {
        Mdp mdp = ts::random_mdp(1000 + trial % 7, 5, 2, 0.9);
        Policy mu{{static_cast<int>(stream.next_below(2)), static_cast<int>(stream.next_below(2)),
                   0, 1, static_cast<int>(stream.next_below(2))}};
        ValueVec j = ts::random_value_vec(stream, 5);
        ValueVec j2 = ts::random_value_vec(stream, 5);
        double lhs = inf_norm(apply_T_mu(mdp, mu, j) - apply_T_mu(mdp, mu, j2));
        CHECK(lhs <= mdp.discount * inf_norm(j - j2) + 1e-12);
    }
}

TEST_CASE("apply_T takes the action-wise max") {
    Mdp mdp = one_state_two_action_mdp(0.2, 0.9, 0.5);
    CHECK(apply_T(mdp, ValueVec::Zero(1))(0) == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("shift property is exact") {
    RngStream stream(12);
    for (int trial = 0; trial < 100; ++trial) {
        Mdp mdp = ts::random_mdp(2000 + trial % 5, 6, 3, 0.85);
        ValueVec j = ts::random_value_vec(stream, 6);
        double c = stream.uniform(-3.0, 3.0);
        ValueVec shifted = j.array() + c;
        CHECK(inf_norm(apply_T(mdp, shifted) -
                       (apply_T(mdp, j).array() + mdp.discount * c).matrix()) <= 1e-12);
        Policy mu = greedy_policy(mdp, j);
        CHECK(inf_norm(apply_T_mu(mdp, mu, shifted) -
                       (apply_T_mu(mdp, mu, j).array() + mdp.discount * c).matrix()) <= 1e-12);
    }
}

TEST_CASE("counterexample values steer T toward x2") {
    CounterexampleSpec spec;
    Mdp mdp = build_counterexample_mdp(spec);
    ValueVec j(2);
    j << 1.0, 2.0;  // theta = 1
    // enumerate both actions by hand at each state
    for (int s = 0; s < 2; ++s) {
        double q_to_x1 = mdp.reward(s, 0) + spec.alpha * j(0);
        double q_to_x2 = mdp.reward(s, 1) + spec.alpha * j(1);
        CHECK(apply_T(mdp, j)(s) == doctest::Approx(std::max(q_to_x1, q_to_x2)).epsilon(1e-15));
        CHECK(q_to_x2 > q_to_x1);
    }
    Policy mu = greedy_policy(mdp, j);
    CHECK(mu.action == std::vector<int>{1, 1});
}

TEST_CASE("greedy policy tie-break picks the lowest action index") {
    Mdp mdp = one_state_two_action_mdp(0.2, 0.9, 0.5);
    CHECK(greedy_policy(mdp, ValueVec::Zero(1)).action == std::vector<int>{1});

    // all actions identical: expect action 0 everywhere
    Mdp tied = ts::random_mdp(3, 4, 1, 0.9);
    tied.num_actions = 3;
    tied.transition = {tied.transition[0], tied.transition[0], tied.transition[0]};
    Eigen::MatrixXd r(4, 3);
    r.col(0) = tied.reward.col(0);
    r.col(1) = tied.reward.col(0);
    r.col(2) = tied.reward.col(0);
    tied.reward = r;
    tied.validate();
    RngStream stream(4);
    Policy mu = greedy_policy(tied, ts::random_value_vec(stream, 4));
    CHECK(mu.action == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("greedy policy achieves the Bellman max exactly") {
    RngStream stream(13);
    for (int trial = 0; trial < 100; ++trial) {
        Mdp mdp = ts::random_mdp(3000 + trial % 5, 7, 3, 0.9);
        ValueVec j = ts::random_value_vec(stream, 7);
        Policy mu = greedy_policy(mdp, j);
        CHECK(inf_norm(apply_T_mu(mdp, mu, j) - apply_T(mdp, j)) <= 1e-14);
    }
}

TEST_CASE("rollout_return composes T_mu") {
    Mdp mdp = one_state_mdp(1.0, 0.5);
    Policy mu{{0}};
    ValueVec zero = ValueVec::Zero(1);
    CHECK(inf_norm(rollout_return(mdp, mu, zero, 1) - apply_T_mu(mdp, mu, zero)) == 0.0);
    CHECK(rollout_return(mdp, mu, zero, 3)(0) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(inf_norm(rollout_return(mdp, mu, zero, 0) - zero) == 0.0);  // m = 0 is the identity
}

TEST_CASE("rollout on the counterexample matches a hand-unrolled two-step return") {
    CounterexampleSpec spec;
    spec.r1 = 1.0;
    spec.r2 = 0.3;
    spec.alpha = 0.9;
    Mdp mdp = build_counterexample_mdp(spec);
    Policy go_to_x2{{1, 1}};
    double theta = 0.7;
    ValueVec j(2);
    j << theta, 2 * theta;
    // from x1: r1, then r2, then bootstrap at x2
    double expected = spec.r1 + spec.alpha * spec.r2 + spec.alpha * spec.alpha * 2 * theta;
    CHECK(rollout_return(mdp, go_to_x2, j, 2)(0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("lookahead composes T") {
    Mdp mdp = one_state_two_action_mdp(0.2, 0.9, 0.5);
    ValueVec zero = ValueVec::Zero(1);
    CHECK(inf_norm(lookahead(mdp, zero, 1) - apply_T(mdp, zero)) == 0.0);
    CHECK(inf_norm(lookahead(mdp, zero, 0) - zero) == 0.0);

    RngStream stream(14);
    Mdp rnd = ts::random_mdp(4000, 6, 2, 0.9);
    ValueVec j = ts::random_value_vec(stream, 6);
    CHECK(inf_norm(lookahead(rnd, j, 2) - apply_T(rnd, apply_T(rnd, j))) == 0.0);

    ValueVec jstar = solve_optimal(rnd).values;
    for (int h : {1, 2, 4}) {
        CHECK(inf_norm(lookahead(rnd, j, h) - jstar) <=
              std::pow(rnd.discount, h) * inf_norm(j - jstar) + 1e-12);
    }
}

TEST_CASE("exact policy evaluation solves the linear fixed point") {
    CHECK(evaluate_policy_exact(one_state_mdp(1.0, 0.5), Policy{{0}})(0) ==
          doctest::Approx(2.0).epsilon(1e-12));

    CounterexampleSpec spec;  // r = (1, 0), alpha = 0.9
    Mdp mdp = build_counterexample_mdp(spec);
    ValueVec j = evaluate_policy_exact(mdp, Policy{{0, 0}});  // always go to x1
    CHECK(j(0) == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(j(1) == doctest::Approx(9.0).epsilon(1e-9));

    for (int trial = 0; trial < 50; ++trial) {
        Mdp rnd = ts::random_mdp(5000 + trial, 8, 3, 0.92);
        RngStream stream(6000 + static_cast<std::uint64_t>(trial));
        Policy mu;
        for (int s = 0; s < 8; ++s) mu.action.push_back(static_cast<int>(stream.next_below(3)));
        ValueVec jmu = evaluate_policy_exact(rnd, mu);
        CHECK(inf_norm(apply_T_mu(rnd, mu, jmu) - jmu) <= 1e-10);
    }
}

TEST_CASE("solve_optimal matches brute-force policy enumeration") {
    CounterexampleSpec spec;
    Mdp ce = build_counterexample_mdp(spec);
    OptimalSolution sol = solve_optimal(ce);
    CHECK(sol.policy.action == std::vector<int>{0, 0});
    CHECK(sol.values(0) == doctest::Approx(10.0).epsilon(1e-10));
    CHECK(sol.values(1) == doctest::Approx(9.0).epsilon(1e-10));
    CHECK(inf_norm(sol.values - ts::brute_force_optimal(ce)) <= 1e-10);

    Mdp single = one_state_two_action_mdp(0.2, 0.9, 0.5);
    CHECK(solve_optimal(single).values(0) == doctest::Approx(0.9 / 0.5).epsilon(1e-12));

    for (std::uint64_t seed : {21u, 22u, 23u}) {
        Mdp rnd = ts::random_mdp(seed, 6, 2, 0.9);
        OptimalSolution s = solve_optimal(rnd, 1e-10);
        CHECK(inf_norm(s.values - ts::brute_force_optimal(rnd)) <= 1e-8);
        CHECK(inf_norm(apply_T(rnd, s.values) - s.values) <= 2e-10);
    }
}

TEST_CASE("optimal values dominate every deterministic policy") {
    Mdp mdp = ts::random_mdp(31, 5, 3, 0.88);  // 243 policies
    ValueVec jstar = solve_optimal(mdp).values;
    for (const Policy& mu : enumerate_deterministic_policies(mdp)) {
        ValueVec jmu = evaluate_policy_exact(mdp, mu);
        CHECK((jstar - jmu).minCoeff() >= -1e-8);
    }
}

TEST_CASE("policy enumeration respects the cap") {
    Mdp mdp = ts::random_mdp(32, 6, 2, 0.9);
    CHECK(enumerate_deterministic_policies(mdp).size() == 64);
    CHECK_THROWS_AS((void)enumerate_deterministic_policies(mdp, 63), InvalidInputError);
}

TEST_CASE("mdp validation rejects malformed models") {
    Mdp mdp = ts::random_mdp(33, 3, 2, 0.9);
    CHECK_NOTHROW(mdp.validate());

    Mdp bad_rows = mdp;
    bad_rows.transition[0](1, 0) += 1e-9;  // row no longer sums to 1
    CHECK_THROWS_AS(bad_rows.validate(), InvalidInputError);

    Mdp negative = mdp;
    negative.transition[1].row(0) << -0.25, 0.75, 0.5;
    CHECK_THROWS_AS(negative.validate(), InvalidInputError);

    Mdp big_reward = mdp;
    big_reward.reward(0, 0) = 1.5;
    CHECK_THROWS_AS(big_reward.validate(), InvalidInputError);
    big_reward.unit_rewards = false;  // relaxed range admits it
    CHECK_NOTHROW(big_reward.validate());

    Mdp bad_discount = mdp;
    bad_discount.discount = 1.0;
    CHECK_THROWS_AS(bad_discount.validate(), InvalidInputError);

    CHECK_THROWS_AS((void)apply_T(mdp, ValueVec::Zero(4)), InvalidInputError);
    CHECK_THROWS_AS((void)apply_T_mu(mdp, Policy{{0, 0}}, ValueVec::Zero(3)), InvalidInputError);
    CHECK_THROWS_AS((void)apply_T_mu(mdp, Policy{{0, 5, 0}}, ValueVec::Zero(3)), InvalidInputError);
}
