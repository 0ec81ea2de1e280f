#pragma once

#include <Eigen/Dense>
#include <vector>

#include "adp/errors.hpp"

namespace adp {

/// A value-function estimate, one entry per state.
using ValueVec = Eigen::VectorXd;

inline double inf_norm(const ValueVec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

inline bool all_finite(const ValueVec& v) { return v.allFinite(); }

/// A deterministic policy: one action index per state.
struct Policy {
    std::vector<int> action;

    bool operator==(const Policy&) const = default;
};

/// Finite discounted MDP. Transition probabilities are stored per action as
/// dense |S| x |S| row-stochastic matrices; rewards as an |S| x |A| table.
///
/// Invariants (enforced by validate()):
///   - every transition row sums to 1 within 1e-12 and has no negative entry,
///   - rewards lie in [0, 1] unless unit_rewards is cleared,
///   - discount is strictly inside (0, 1).
struct Mdp {
    int num_states = 0;
    int num_actions = 0;
    std::vector<Eigen::MatrixXd> transition;  // transition[a](s, s') = P(s' | s, a)
    Eigen::MatrixXd reward;                   // reward(s, a)
    double discount = 0.0;

    /// When true (the default), rewards are validated to [0, 1]. Clearing the
    /// flag admits arbitrary finite rewards for exploratory use; the bound
    /// calculators refuse such models because their constants assume the
    /// unit reward range.
    bool unit_rewards = true;

    /// Throws InvalidInputError on any violated invariant. Row-sum defects are
    /// reported, never renormalized.
    void validate() const;

    /// P_mu: row s is the transition row of (s, mu(s)).
    Eigen::MatrixXd policy_matrix(const Policy& mu) const;

    /// r_mu: entry s is reward(s, mu(s)).
    Eigen::VectorXd policy_reward(const Policy& mu) const;
};

/// One application of the policy Bellman operator:
///   (T_mu J)(s) = r(s, mu(s)) + alpha * sum_s' P(s' | s, mu(s)) J(s').
ValueVec apply_T_mu(const Mdp& mdp, const Policy& mu, const ValueVec& j);

/// One application of the Bellman operator:
///   (T J)(s) = max_a { r(s, a) + alpha * sum_s' P(s' | s, a) J(s') }.
ValueVec apply_T(const Mdp& mdp, const ValueVec& j);

/// The greedy policy with respect to J: achieves the max in apply_T at every
/// state. Ties are broken toward the lowest action index, so the result is
/// deterministic across runs and platforms.
Policy greedy_policy(const Mdp& mdp, const ValueVec& j);

/// m successive applications of T_mu (the m-step rollout return T_mu^m J).
/// m = 0 is accepted and returns j unchanged.
ValueVec rollout_return(const Mdp& mdp, const Policy& mu, const ValueVec& j, int m);

/// h successive applications of T (the h-step lookahead T^h J).
/// h = 0 is accepted and returns j unchanged.
ValueVec lookahead(const Mdp& mdp, const ValueVec& j, int h);

/// Exact policy evaluation: solves (I - alpha P_mu) J = r_mu with a dense
/// direct solve and checks the fixed-point residual ||J - T_mu J||_inf <= 1e-10.
ValueVec evaluate_policy_exact(const Mdp& mdp, const Policy& mu);

struct OptimalSolution {
    ValueVec values;
    Policy policy;
    int value_iterations = 0;
    int improvement_rounds = 0;
};

/// Optimal-value oracle. Value iteration runs until
/// ||TJ - J||_inf <= tol * (1 - alpha) / (2 alpha), then the greedy policy is
/// evaluated exactly and refined by policy improvement until its Bellman
/// residual certifies ||J - J*||_inf <= tol. Policy improvement over a finite
/// MDP terminates, so the refinement loop always exits.
OptimalSolution solve_optimal(const Mdp& mdp, double tol = 1e-10);

/// All |A|^|S| deterministic policies in lexicographic order (state-major).
/// Refuses with InvalidInputError when the count exceeds `cap`.
std::vector<Policy> enumerate_deterministic_policies(const Mdp& mdp, int cap = 4096);

/// |A|^|S| as a double (to test the cap without overflow).
double deterministic_policy_count(const Mdp& mdp);

}  // namespace adp
