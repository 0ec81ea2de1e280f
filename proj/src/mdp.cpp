#include "adp/mdp.hpp"

#include <cmath>
#include <string>

namespace adp {

namespace {

void check_state_vector(const Mdp& mdp, const ValueVec& j, const char* what) {
    if (j.size() != mdp.num_states)
        throw InvalidInputError(std::string(what) + ": value vector has length " +
                                std::to_string(j.size()) + ", expected " +
                                std::to_string(mdp.num_states));
}

void check_policy(const Mdp& mdp, const Policy& mu, const char* what) {
    if (static_cast<int>(mu.action.size()) != mdp.num_states)
        throw InvalidInputError(std::string(what) + ": policy has length " +
                                std::to_string(mu.action.size()) + ", expected " +
                                std::to_string(mdp.num_states));
    for (int s = 0; s < mdp.num_states; ++s)
        if (mu.action[s] < 0 || mu.action[s] >= mdp.num_actions)
            throw InvalidInputError(std::string(what) + ": action index " +
                                    std::to_string(mu.action[s]) + " at state " +
                                    std::to_string(s) + " out of range");
}

}  // namespace

void Mdp::validate() const {
    if (num_states <= 0) throw InvalidInputError("num_states must be positive");
    if (num_actions <= 0) throw InvalidInputError("num_actions must be positive");
    if (!(discount > 0.0 && discount < 1.0))
        throw InvalidInputError("discount must lie strictly inside (0, 1)");
    if (static_cast<int>(transition.size()) != num_actions)
        throw InvalidInputError("transition tensor has wrong number of actions");
    if (reward.rows() != num_states || reward.cols() != num_actions)
        throw InvalidInputError("reward table has wrong shape");
    for (int a = 0; a < num_actions; ++a) {
        const Eigen::MatrixXd& P = transition[a];
        if (P.rows() != num_states || P.cols() != num_states)
            throw InvalidInputError("transition matrix for action " + std::to_string(a) +
                                    " has wrong shape");
        for (int s = 0; s < num_states; ++s) {
            if (P.row(s).minCoeff() < 0.0)
                throw InvalidInputError("negative transition probability at state " +
                                        std::to_string(s) + ", action " + std::to_string(a));
            double rowsum = P.row(s).sum();
            if (std::abs(rowsum - 1.0) > 1e-12)
                throw InvalidInputError("transition row (s=" + std::to_string(s) +
                                        ", a=" + std::to_string(a) + ") sums to " +
                                        std::to_string(rowsum) + ", not 1");
        }
    }
    if (!reward.allFinite()) throw InvalidInputError("rewards must be finite");
    if (unit_rewards) {
        if (reward.minCoeff() < 0.0 || reward.maxCoeff() > 1.0)
            throw InvalidInputError("rewards must lie in [0, 1] (set unit_rewards=false to relax)");
    }
}

Eigen::MatrixXd Mdp::policy_matrix(const Policy& mu) const {
    check_policy(*this, mu, "policy_matrix");
    Eigen::MatrixXd P(num_states, num_states);
    for (int s = 0; s < num_states; ++s) P.row(s) = transition[mu.action[s]].row(s);
    return P;
}

Eigen::VectorXd Mdp::policy_reward(const Policy& mu) const {
    check_policy(*this, mu, "policy_reward");
    Eigen::VectorXd r(num_states);
    for (int s = 0; s < num_states; ++s) r(s) = reward(s, mu.action[s]);
    return r;
}

ValueVec apply_T_mu(const Mdp& mdp, const Policy& mu, const ValueVec& j) {
    check_policy(mdp, mu, "apply_T_mu");
    check_state_vector(mdp, j, "apply_T_mu");
    ValueVec out(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) {
        int a = mu.action[s];
        out(s) = mdp.reward(s, a) + mdp.discount * mdp.transition[a].row(s).dot(j);
    }
    return out;
}

ValueVec apply_T(const Mdp& mdp, const ValueVec& j) {
    check_state_vector(mdp, j, "apply_T");
    ValueVec out(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.num_actions; ++a) {
            double q = mdp.reward(s, a) + mdp.discount * mdp.transition[a].row(s).dot(j);
            if (q > best) best = q;
        }
        out(s) = best;
    }
    return out;
}

Policy greedy_policy(const Mdp& mdp, const ValueVec& j) {
    check_state_vector(mdp, j, "greedy_policy");
    Policy mu;
    mu.action.resize(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        int best_a = 0;
        for (int a = 0; a < mdp.num_actions; ++a) {
            double q = mdp.reward(s, a) + mdp.discount * mdp.transition[a].row(s).dot(j);
            if (q > best) {  // strict: ties keep the lowest action index
                best = q;
                best_a = a;
            }
        }
        mu.action[s] = best_a;
    }
    return mu;
}

ValueVec rollout_return(const Mdp& mdp, const Policy& mu, const ValueVec& j, int m) {
    if (m < 0) throw InvalidInputError("rollout_return: m must be nonnegative");
    ValueVec out = j;
    for (int i = 0; i < m; ++i) out = apply_T_mu(mdp, mu, out);
    return out;
}

ValueVec lookahead(const Mdp& mdp, const ValueVec& j, int h) {
    if (h < 0) throw InvalidInputError("lookahead: h must be nonnegative");
    ValueVec out = j;
    for (int i = 0; i < h; ++i) out = apply_T(mdp, out);
    return out;
}

ValueVec evaluate_policy_exact(const Mdp& mdp, const Policy& mu) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(mdp.num_states, mdp.num_states) -
                        mdp.discount * mdp.policy_matrix(mu);
    Eigen::VectorXd r = mdp.policy_reward(mu);
    ValueVec j = A.partialPivLu().solve(r);
    if (!j.allFinite()) throw NumericalError("evaluate_policy_exact: solve produced non-finite values");
    double residual = inf_norm(apply_T_mu(mdp, mu, j) - j);
    if (residual > 1e-10)
        throw NumericalError("evaluate_policy_exact: fixed-point residual " +
                             std::to_string(residual) + " exceeds 1e-10");
    return j;
}

OptimalSolution solve_optimal(const Mdp& mdp, double tol) {
    if (tol <= 0.0) throw InvalidInputError("solve_optimal: tol must be positive");
    const double alpha = mdp.discount;
    const double stop = tol * (1.0 - alpha) / (2.0 * alpha);

    OptimalSolution sol;
    ValueVec j = ValueVec::Zero(mdp.num_states);
    // Value iteration phase.
    const int max_vi = 10'000'000;
    for (int it = 0; it < max_vi; ++it) {
        ValueVec next = apply_T(mdp, j);
        ++sol.value_iterations;
        double change = inf_norm(next - j);
        j = std::move(next);
        if (change <= stop) break;
        if (it + 1 == max_vi) throw NumericalError("solve_optimal: value iteration did not converge");
    }

    // Greedy extraction plus policy improvement until the Bellman residual of
    // the exactly evaluated policy certifies the requested tolerance.
    Policy mu = greedy_policy(mdp, j);
    ValueVec jmu = evaluate_policy_exact(mdp, mu);
    double certify = std::max(0.5 * tol * (1.0 - alpha), 1e-13 * (1.0 + inf_norm(jmu)));
    const int max_rounds = 10000;
    for (int round = 0; round < max_rounds; ++round) {
        double residual = inf_norm(apply_T(mdp, jmu) - jmu);
        if (residual <= certify) break;
        Policy next = greedy_policy(mdp, jmu);
        if (next == mu) break;  // greedy-stable: jmu is the optimal fixed point up to solve roundoff
        mu = std::move(next);
        jmu = evaluate_policy_exact(mdp, mu);
        ++sol.improvement_rounds;
        if (round + 1 == max_rounds)
            throw NumericalError("solve_optimal: policy improvement did not terminate");
    }

    sol.values = std::move(jmu);
    sol.policy = std::move(mu);
    return sol;
}

double deterministic_policy_count(const Mdp& mdp) {
    return std::pow(static_cast<double>(mdp.num_actions), static_cast<double>(mdp.num_states));
}

std::vector<Policy> enumerate_deterministic_policies(const Mdp& mdp, int cap) {
    double count = deterministic_policy_count(mdp);
    if (count > static_cast<double>(cap))
        throw InvalidInputError("policy enumeration would produce " + std::to_string(count) +
                                " policies, above the cap of " + std::to_string(cap));
    int n = static_cast<int>(count);
    std::vector<Policy> out;
    out.reserve(n);
    Policy mu;
    mu.action.assign(mdp.num_states, 0);
    for (int i = 0; i < n; ++i) {
        out.push_back(mu);
        // Increment the action vector like a base-|A| counter, state 0 fastest.
        for (int s = 0; s < mdp.num_states; ++s) {
            if (++mu.action[s] < mdp.num_actions) break;
            mu.action[s] = 0;
        }
    }
    return out;
}

}  // namespace adp
