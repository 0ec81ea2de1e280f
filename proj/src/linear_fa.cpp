#include "adp/linear_fa.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace adp {

namespace {

Eigen::VectorXd gather(const ValueVec& full, const std::vector<int>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = full(idx[i]);
    return out;
}

void check_targets(const FeatureSystem& fs, const ValueVec& targets, const char* what) {
    if (targets.size() != fs.num_states())
        throw InvalidInputError(std::string(what) + ": target vector has length " +
                                std::to_string(targets.size()) + ", expected " +
                                std::to_string(fs.num_states()));
}

}  // namespace

FeatureSystem FeatureSystem::create(Eigen::MatrixXd phi) {
    if (phi.rows() == 0 || phi.cols() == 0)
        throw InvalidInputError("feature matrix must be non-empty");
    if (phi.cols() > phi.rows())
        throw InvalidInputError("feature dimension d exceeds the number of states");
    if (!phi.allFinite()) throw InvalidInputError("feature matrix must be finite");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi);
    double smin = svd.singularValues().minCoeff();
    if (!(smin > 1e-10))
        throw RankDeficiencyError("feature matrix is column-rank deficient (sigma_min = " +
                                  std::to_string(smin) + ")");
    return FeatureSystem(std::move(phi));
}

double FeatureSystem::phi_inf_norm() const { return phi_.cwiseAbs().rowwise().sum().maxCoeff(); }

double FeatureSystem::sigma_min() const {
    Eigen::MatrixXd gram = phi_.transpose() * phi_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw NumericalError("sigma_min: eigensolve failed");
    return std::sqrt(std::max(0.0, es.eigenvalues().minCoeff()));
}

SampleSet SampleSet::create(const FeatureSystem& fs, std::vector<int> indices, SelectionMode mode) {
    if (indices.empty()) throw InvalidInputError("sample set must be non-empty");
    std::unordered_set<int> seen;
    for (int i : indices) {
        if (i < 0 || i >= fs.num_states())
            throw InvalidInputError("sample index " + std::to_string(i) + " out of range");
        if (!seen.insert(i).second)
            throw InvalidInputError("sample index " + std::to_string(i) + " repeated");
    }
    if (static_cast<int>(indices.size()) < fs.dim())
        throw RankDeficiencyError("sample set has " + std::to_string(indices.size()) +
                                  " states, fewer than the feature dimension " +
                                  std::to_string(fs.dim()));
    SampleSet ds(std::move(indices), mode);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ds.submatrix(fs));
    double smax = svd.singularValues().maxCoeff();
    double smin = svd.singularValues().minCoeff();
    if (!(smin > 1e-10 * smax))
        throw RankDeficiencyError("sampled feature rows do not span R^d (sigma_min/sigma_max = " +
                                  std::to_string(smax > 0 ? smin / smax : 0.0) + ")");
    return ds;
}

SampleSet SampleSet::all_states(const FeatureSystem& fs) {
    std::vector<int> idx(static_cast<std::size_t>(fs.num_states()));
    for (int i = 0; i < fs.num_states(); ++i) idx[static_cast<std::size_t>(i)] = i;
    return create(fs, std::move(idx), SelectionMode::all);
}

Eigen::MatrixXd SampleSet::submatrix(const FeatureSystem& fs) const {
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(indices_.size()), fs.dim());
    for (std::size_t i = 0; i < indices_.size(); ++i)
        sub.row(static_cast<Eigen::Index>(i)) = fs.phi().row(indices_[i]);
    return sub;
}

WeightVec least_squares_fit(const FeatureSystem& fs, const SampleSet& ds, const ValueVec& targets) {
    check_targets(fs, targets, "least_squares_fit");
    Eigen::MatrixXd phi_d = ds.submatrix(fs);
    Eigen::VectorXd t_d = gather(targets, ds.indices());
    Eigen::MatrixXd gram = phi_d.transpose() * phi_d;
    Eigen::VectorXd rhs = phi_d.transpose() * t_d;
    WeightVec theta = gram.ldlt().solve(rhs);
    if (!theta.allFinite()) throw NumericalError("least_squares_fit: solve produced non-finite weights");
    double scale = rhs.cwiseAbs().maxCoeff() + gram.cwiseAbs().maxCoeff() * theta.cwiseAbs().maxCoeff();
    double residual = (gram * theta - rhs).cwiseAbs().maxCoeff();
    if (residual > 1e-10 * std::max(scale, 1.0))
        throw NumericalError("least_squares_fit: normal-equation residual " +
                             std::to_string(residual) + " too large");
    return theta;
}

ValueVec projector_apply(const FeatureSystem& fs, const SampleSet& ds, const ValueVec& targets) {
    return fs.phi() * least_squares_fit(fs, ds, targets);
}

Eigen::MatrixXd projector_matrix(const FeatureSystem& fs, const SampleSet& ds) {
    Eigen::MatrixXd phi_d = ds.submatrix(fs);
    Eigen::MatrixXd gram = phi_d.transpose() * phi_d;
    // Solve gram * X = Phi_D^T, then M = Phi * X, an |S| x |D| matrix.
    Eigen::MatrixXd x = gram.ldlt().solve(phi_d.transpose());
    if (!x.allFinite()) throw NumericalError("projector_matrix: solve produced non-finite entries");
    return fs.phi() * x;
}

DeltaEstimate compute_delta_fv(const FeatureSystem& fs, std::span<const SampleSet> sets) {
    if (sets.empty()) throw InvalidInputError("compute_delta_fv: no sample sets given");
    DeltaEstimate est;
    for (const SampleSet& ds : sets) {
        Eigen::MatrixXd m = projector_matrix(fs, ds);
        est.value = std::max(est.value, m.cwiseAbs().rowwise().sum().maxCoeff());
        if (ds.mode() == SelectionMode::resample_per_iteration) est.empirical = true;
    }
    return est;
}

DeltaEstimate compute_delta_app(const Mdp& mdp, const FeatureSystem& fs,
                                std::span<const SampleSet> sets, DeltaAppMode mode,
                                std::span<const Policy> policies, int cap) {
    if (sets.empty()) throw InvalidInputError("compute_delta_app: no sample sets given");
    if (fs.num_states() != mdp.num_states)
        throw InvalidInputError("compute_delta_app: feature matrix and MDP disagree on |S|");

    std::vector<Policy> enumerated;
    std::span<const Policy> use = policies;
    if (mode == DeltaAppMode::exhaustive) {
        enumerated = enumerate_deterministic_policies(mdp, cap);
        use = enumerated;
    } else if (use.empty()) {
        throw InvalidInputError("compute_delta_app: encountered mode needs at least one policy");
    }

    std::vector<Eigen::MatrixXd> maps;
    maps.reserve(sets.size());
    DeltaEstimate est;
    est.empirical = (mode == DeltaAppMode::encountered);
    for (const SampleSet& ds : sets) {
        maps.push_back(projector_matrix(fs, ds));
        if (ds.mode() == SelectionMode::resample_per_iteration) est.empirical = true;
    }
    for (const Policy& mu : use) {
        ValueVec jmu = evaluate_policy_exact(mdp, mu);
        for (std::size_t i = 0; i < sets.size(); ++i) {
            ValueVec proj = maps[i] * gather(jmu, sets[i].indices());
            est.value = std::max(est.value, inf_norm(proj - jmu));
        }
    }
    return est;
}

SpectralQuantities spectral_quantities(const FeatureSystem& fs, const SampleSet& ds, double gamma) {
    if (!(gamma > 0.0)) throw InvalidInputError("spectral_quantities: gamma must be positive");
    Eigen::MatrixXd phi_d = ds.submatrix(fs);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phi_d.transpose() * phi_d);
    if (es.info() != Eigen::Success || !es.eigenvalues().allFinite())
        throw NumericalError("spectral_quantities: eigensolve failed");
    SpectralQuantities out;
    out.sigma_min_phi = fs.sigma_min();
    out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    out.alpha_gd = 0.0;
    for (double lam : out.eigenvalues) out.alpha_gd = std::max(out.alpha_gd, std::abs(1.0 - gamma * lam));
    return out;
}

WeightVec gradient_descent_fit(const FeatureSystem& fs, const SampleSet& ds, const ValueVec& targets,
                               const WeightVec& theta_start, double gamma, int eta) {
    check_targets(fs, targets, "gradient_descent_fit");
    if (!(gamma > 0.0)) throw InvalidInputError("gradient_descent_fit: gamma must be positive");
    if (eta < 1) throw InvalidInputError("gradient_descent_fit: eta must be at least 1");
    if (theta_start.size() != fs.dim())
        throw InvalidInputError("gradient_descent_fit: theta_start has wrong dimension");

    Eigen::MatrixXd phi_d = ds.submatrix(fs);
    Eigen::MatrixXd gram = phi_d.transpose() * phi_d;
    Eigen::VectorXd rhs = phi_d.transpose() * gather(targets, ds.indices());

    WeightVec theta = theta_start;
    for (int l = 1; l <= eta; ++l) {
        theta -= gamma * (gram * theta - rhs);
        if (!theta.allFinite())
            throw GradientDivergenceError(
                "gradient_descent_fit: non-finite iterate at inner step " + std::to_string(l) +
                    " (stepsize too large)",
                l);
    }
    return theta;
}

}  // namespace adp
