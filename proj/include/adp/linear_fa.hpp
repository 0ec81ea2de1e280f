#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "adp/mdp.hpp"

namespace adp {

/// A weight vector theta in R^d.
using WeightVec = Eigen::VectorXd;

/// Feature matrix Phi (|S| x d, one feature vector per state as a row).
/// Construction rejects matrices without full column rank: the smallest
/// singular value must exceed 1e-10.
class FeatureSystem {
public:
    static FeatureSystem create(Eigen::MatrixXd phi);

    const Eigen::MatrixXd& phi() const { return phi_; }
    int num_states() const { return static_cast<int>(phi_.rows()); }
    int dim() const { return static_cast<int>(phi_.cols()); }

    /// Max absolute row sum of Phi (the operator inf-norm).
    double phi_inf_norm() const;

    /// Smallest singular value of Phi, computed as sqrt(lambda_min(Phi^T Phi)).
    double sigma_min() const;

private:
    explicit FeatureSystem(Eigen::MatrixXd phi) : phi_(std::move(phi)) {}
    Eigen::MatrixXd phi_;
};

enum class SelectionMode { all, fixed, resample_per_iteration };

/// The states where rollout targets are evaluated in one iteration. The
/// feature rows of these states must span R^d (checked on construction with a
/// relative singular-value threshold of 1e-10; violations raise
/// RankDeficiencyError and are never silently regularized).
class SampleSet {
public:
    static SampleSet create(const FeatureSystem& fs, std::vector<int> indices, SelectionMode mode);

    /// Convenience: every state, mode `all`.
    static SampleSet all_states(const FeatureSystem& fs);

    const std::vector<int>& indices() const { return indices_; }
    SelectionMode mode() const { return mode_; }
    int size() const { return static_cast<int>(indices_.size()); }

    /// Rows of Phi restricted to this set, in index order.
    Eigen::MatrixXd submatrix(const FeatureSystem& fs) const;

    bool operator==(const SampleSet&) const = default;

private:
    SampleSet(std::vector<int> indices, SelectionMode mode)
        : indices_(std::move(indices)), mode_(mode) {}
    std::vector<int> indices_;
    SelectionMode mode_;
};

/// argmin_theta sum_{i in D} ((Phi theta)(i) - targets(i))^2, solved through
/// the d x d normal equations (Phi_D^T Phi_D) theta = Phi_D^T targets_D.
/// The relative normal-equation residual is checked against 1e-10.
WeightVec least_squares_fit(const FeatureSystem& fs, const SampleSet& ds, const ValueVec& targets);

/// Applies the least-squares reconstruction map M = Phi (Phi_D^T Phi_D)^{-1} Phi_D^T P_D
/// to a full-state target vector: equals Phi * least_squares_fit(...).
ValueVec projector_apply(const FeatureSystem& fs, const SampleSet& ds, const ValueVec& targets);

/// The reconstruction map materialized as an explicit |S| x |D| matrix
/// (columns indexed by the sample states; all other columns of the full
/// |S| x |S| map are zero).
Eigen::MatrixXd projector_matrix(const FeatureSystem& fs, const SampleSet& ds);

/// A worst-case constant together with how it was obtained: exact sups are
/// computed over fixed sample sets, empirical ones over realized draws only.
struct DeltaEstimate {
    double value = 0.0;
    bool empirical = false;
};

/// sup over the given sample sets of the inf-norm of the materialized
/// reconstruction map (max absolute row sum).
DeltaEstimate compute_delta_fv(const FeatureSystem& fs, std::span<const SampleSet> sets);

enum class DeltaAppMode { exhaustive, encountered };

/// Worst-case representation error sup_{set, policy} ||M J^mu - J^mu||_inf.
/// Exhaustive mode enumerates every deterministic policy (refusing above
/// `cap`); encountered mode takes the max over `policies` only and is flagged
/// as an empirical lower estimate.
DeltaEstimate compute_delta_app(const Mdp& mdp, const FeatureSystem& fs,
                                std::span<const SampleSet> sets, DeltaAppMode mode,
                                std::span<const Policy> policies = {}, int cap = 4096);

struct SpectralQuantities {
    double sigma_min_phi = 0.0;        // smallest singular value of the full Phi
    double alpha_gd = 0.0;             // max_i |1 - gamma lambda_i(Phi_D^T Phi_D)|
    std::vector<double> eigenvalues;   // eigenvalues of Phi_D^T Phi_D, ascending
};

/// Eigenstructure of the sampled Gram matrix and the induced per-step
/// gradient-descent contraction factor for stepsize gamma.
SpectralQuantities spectral_quantities(const FeatureSystem& fs, const SampleSet& ds, double gamma);

/// Exactly `eta` fixed-stepsize gradient steps on the sampled least-squares
/// objective, starting from theta_start:
///   theta <- theta - gamma (Phi_D^T Phi_D theta - Phi_D^T targets_D).
/// No early stopping. A non-finite iterate raises GradientDivergenceError
/// carrying the offending inner-iteration index.
WeightVec gradient_descent_fit(const FeatureSystem& fs, const SampleSet& ds, const ValueVec& targets,
                               const WeightVec& theta_start, double gamma, int eta);

}  // namespace adp
