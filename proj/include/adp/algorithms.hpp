#pragma once

#include <cstdint>
#include <vector>

#include "adp/linear_fa.hpp"
#include "adp/mdp.hpp"
#include "adp/rng.hpp"

namespace adp {

enum class Variant { least_squares, gradient_descent, modified_ls };

/// How the sample set D_k is chosen at each iteration.
struct SampleSetSpec {
    SelectionMode mode = SelectionMode::all;
    int size = 0;              // resample_per_iteration only
    std::vector<int> indices;  // fixed only
};

/// Which power of alpha competes with beta inside the finite-time term of the
/// bound curve. The two published forms differ by one in the exponent; both
/// are available so audits can compare them.
enum class FiniteTimeMaxForm { alpha_pow_h, alpha_pow_h_minus_1 };

/// Full parameterization of one algorithm run. The MDP and feature system are
/// passed separately to the run functions.
struct RunConfig {
    Variant variant = Variant::least_squares;
    int lookahead_depth = 1;   // H >= 1
    int rollout_depth = 1;     // m >= 1
    int gd_steps = 0;          // eta, gradient_descent only
    double gd_stepsize = 0.0;  // gamma, gradient_descent only
    double eps_la = 0.0;       // lookahead perturbation bound
    double eps_pe = 0.0;       // rollout noise bound
    Eigen::VectorXd theta0;
    int num_iterations = 0;
    std::uint64_t seed = 0;
    double divergence_threshold = 1e8;
    SampleSetSpec samples;

    /// Audit settings consumed by the bounds module.
    int delta_app_cap = 4096;
    FiniteTimeMaxForm max_form = FiniteTimeMaxForm::alpha_pow_h;

    /// Rejects invalid parameterizations, including variant-specific fields
    /// that are present when they must be absent or vice versa.
    void validate(const Mdp& mdp, const FeatureSystem& fs) const;
};

/// One row of the per-iteration trace. Record 0 describes the initial iterate:
/// its policy is the greedy policy of J_0 (the reference policy that defines
/// delta_0) and its noise fields are zero. Record k >= 1 stores the policy
/// selected from J_{k-1}, the sample set used to fit theta_k, and the
/// realized noise magnitudes of that step.
struct IterationRecord {
    int k = 0;
    Eigen::VectorXd theta;
    ValueVec j;  // Phi theta_k
    Policy policy;
    std::vector<int> sample_indices;  // D_{k-1}; empty at k = 0
    double err_policy = 0.0;          // ||J^{mu_k} - J*||_inf
    double delta_k = 0.0;             // ||J_k - J^{mu_k}||_inf
    double err_iterate = 0.0;         // ||J_k - J*||_inf
    double lookahead_gap = 0.0;       // ||T^H J_{k-1} - T_{mu_k} T^{H-1} J_{k-1}||_inf
    double rollout_noise_norm = 0.0;  // ||w_k||_inf

    // Gradient-descent instrumentation: 2-norm distance from the inner loop's
    // start/end weights to the least-squares solution on the same targets.
    // Zero for the other variants.
    double gd_dist_before = 0.0;
    double gd_dist_after = 0.0;
};

enum class RunStatus { completed, diverged };

struct IterationTrace {
    std::vector<IterationRecord> records;
    RunStatus status = RunStatus::completed;
    int diverged_at = -1;  // iteration whose theta crossed the divergence threshold

    const IterationRecord& last() const { return records.back(); }
};

struct LookaheadSelection {
    Policy policy;
    double realized_gap = 0.0;
};

/// Selects an h-step lookahead policy with a bounded selection error.
/// Computes the root action values Q(s, a) = r(s, a) + alpha P(s,a,.) T^{h-1} j
/// exactly, perturbs each by an independent draw from [-eps_la, 0], and takes
/// the perturbed argmax (lowest index on ties). The construction guarantees
/// ||T^h j - T_mu T^{h-1} j||_inf <= eps_la; the realized gap is returned and
/// asserted against the bound.
LookaheadSelection select_lookahead_policy(const Mdp& mdp, const ValueVec& j, int h, double eps_la,
                                           RngStream& noise);

/// The least-squares outer loop: lookahead policy selection, noisy m-step
/// rollout targets T_mu^m T^{H-1} J_k on D_k, least-squares fit, repeat.
IterationTrace run_ls_api(const Mdp& mdp, const FeatureSystem& fs, const RunConfig& config);

/// Same loop with the fit replaced by eta gradient steps warm-started at the
/// previous weights.
IterationTrace run_gd_api(const Mdp& mdp, const FeatureSystem& fs, const RunConfig& config);

/// Same loop with rollout targets T_mu^m J_k (no inner lookahead in the
/// targets; policy selection still uses lookahead).
IterationTrace run_modified_ls_api(const Mdp& mdp, const FeatureSystem& fs, const RunConfig& config);

/// Realizes the sample sets a run would use, drawing from the given stream
/// exactly as the run loop does. For `all` and `fixed` modes the same set is
/// returned for every iteration.
std::vector<SampleSet> realize_sample_sets(const FeatureSystem& fs, const SampleSetSpec& spec,
                                           int num_iterations, RngStream& stream);

}  // namespace adp
