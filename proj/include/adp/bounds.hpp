#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adp/algorithms.hpp"
#include "adp/linear_fa.hpp"
#include "adp/mdp.hpp"

namespace adp {

/// Additive slack separating genuine bound violations from float roundoff.
inline constexpr double kAuditSlack = 1e-8;

/// The constants of the per-iteration error recursion delta_k <= beta * delta_{k-1} + tau
/// together with everything needed to evaluate the bound curves. When beta >= 1
/// the recursion certifies nothing: beta_valid is false, mu_asym is NaN, and
/// the curves report a violated precondition instead of numbers.
struct BoundParams {
    Variant variant = Variant::least_squares;
    double delta_fv = 0.0;
    double delta_app = 0.0;
    bool delta_fv_empirical = false;   // sup over realized draws only
    bool delta_app_empirical = false;  // lower estimate from encountered policies
    double beta = 0.0;
    double tau = 0.0;
    bool beta_valid = false;  // beta < 1
    double mu_asym = std::numeric_limits<double>::quiet_NaN();
    double delta0 = 0.0;  // ||J^{mu_0} - J_0||_inf
    double eps_pe = 0.0;
    double eps_la = 0.0;  // enters the curve, not tau; recorded for reports
    // Gradient-descent extras (zero for the other variants).
    double alpha_gd = 0.0;
    double sigma_min_phi = 0.0;
    double sqrt_s_norm_phi = 0.0;  // sqrt(|S|) ||Phi||_inf / sigma_min_phi
};

/// Constants for the least-squares loop:
///   beta = alpha^{m+H-1} delta_fv,
///   tau  = (alpha^m + alpha^{m+H-1}) / (1-alpha) * delta_fv + delta_app + delta_fv * eps_pe.
/// Refuses MDPs whose rewards are not confined to [0, 1], since tau bakes in
/// the 1/(1-alpha) value-range constant.
BoundParams params_ls(const Mdp& mdp, const FeatureSystem& fs, std::span<const SampleSet> sets,
                      int m, int H, double eps_pe, double delta0, DeltaAppMode delta_app_mode,
                      std::span<const Policy> encountered = {}, int delta_app_cap = 4096);

/// Constants for the gradient-descent loop. With
///   c = sqrt(|S|) ||Phi||_inf / sigma_min_phi and a = alpha_gd^eta:
///   beta = alpha^{m+H-1} delta_fv + c a (alpha^{m+H-1} delta_fv + 1),
///   tau  = (1 + c a) * tau_ls + c a / (1-alpha).
BoundParams params_gd(const Mdp& mdp, const FeatureSystem& fs, std::span<const SampleSet> sets,
                      int m, int H, int eta, double gamma, double eps_pe, double delta0,
                      DeltaAppMode delta_app_mode, std::span<const Policy> encountered = {},
                      int delta_app_cap = 4096);

/// Constants for the modified least-squares loop (targets bootstrapped on J_k
/// directly): beta = alpha^m delta_fv, tau = alpha^m delta_fv / (1-alpha)
/// + delta_app + delta_fv * eps_pe. H does not enter. The published statement
/// swaps the beta/tau labels relative to its own derivation; this follows the
/// derivation, where beta is the contraction coefficient.
BoundParams params_modified_ls(const Mdp& mdp, const FeatureSystem& fs,
                               std::span<const SampleSet> sets, int m, double eps_pe, double delta0,
                               DeltaAppMode delta_app_mode, std::span<const Policy> encountered = {},
                               int delta_app_cap = 4096);

/// The bound curve on ||J^{mu_k} - J*||_inf:
///   finite_time(k) = alpha^{kH} / (1-alpha)
///                  + (2 alpha^H / (1-alpha)) * k * max(alpha^X, beta)^{k-1} * delta0,
///   asymptotic     = (2 alpha^H mu_asym + eps_la) / ((1-alpha)(1-alpha^H)),
/// with X = H or H-1 according to `form`. Invalid when params.beta_valid is false.
struct BoundCurve {
    bool valid = false;
    std::vector<double> finite_time;  // indices 0..num_iterations
    double asymptotic = 0.0;

    double total(int k) const { return finite_time.at(static_cast<std::size_t>(k)) + asymptotic; }
    int max_k() const { return static_cast<int>(finite_time.size()) - 1; }
};

BoundCurve policy_error_curve(const BoundParams& params, double alpha, int H, double eps_la,
                              int num_iterations,
                              FiniteTimeMaxForm form = FiniteTimeMaxForm::alpha_pow_h);

/// Limit bound on the iterates themselves:
///   limsup ||J_k - J*||_inf <= [(1 + delta_fv alpha^m) * asymptotic
///                               + delta_app + delta_fv eps_la]
///                              / (1 - delta_fv alpha^{m+H-1}).
/// Empty when the denominator is not positive or beta_valid is false.
std::optional<double> iterate_limsup_bound(const BoundParams& params, double alpha, int m, int H,
                                            double eps_la);

struct AssumptionCheck {
    std::string name;
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool all_pass() const;
    const AssumptionCheck* find(const std::string& name) const;
};

/// Evaluates every precondition of the applicable convergence guarantee with
/// explicit left/right-hand sides:
///   - sample-set rank margin (Assumption 1),
///   - depth: m+H-1 vs log(delta_fv)/log(1/alpha) (least-squares),
///            m+H-1 vs log(2 delta_fv)/log(1/alpha) (gradient descent),
///            m     vs log(delta_fv)/log(1/alpha) (modified least-squares),
///   - gradient stepsize gamma < 1/(d inf_k ||Phi_D^T Phi_D||_inf^2) (Assumption 2),
///   - inner steps eta > log(3 sqrt(|S|) ||Phi||_inf / sigma_min) / log(1/alpha_gd).
/// All outcomes are report entries; nothing throws.
AssumptionReport check_assumptions(const Mdp& mdp, const FeatureSystem& fs,
                                   std::span<const SampleSet> sets, const RunConfig& config);

/// Checks the realized delta_k sequence of a trace against
/// delta_k <= beta * delta_{k-1} + tau + slack for every k >= 1.
bool delta_recursion_holds(const BoundParams& params, const IterationTrace& trace,
                           double slack = kAuditSlack);

/// Everything the audit derives from one finished run.
struct RunAudit {
    AssumptionReport assumptions;
    BoundParams params;
    BoundCurve curve;
    std::optional<double> iterate_limit_bound;
    std::vector<SampleSet> realized_sets;

    /// "pass", "fail", "advisory-pass", "advisory-fail", or "precondition-violated".
    std::string bound_verdict;
    std::string iterate_verdict;
    bool delta_recursion_ok = false;
    std::vector<std::string> notes;
};

RunAudit audit_run(const Mdp& mdp, const FeatureSystem& fs, const RunConfig& config,
                   const IterationTrace& trace);

/// The audit serialized in the report schema: an assumptions block, a params
/// block, per-iteration (measured, bound) pairs, and pass/fail verdicts.
nlohmann::json audit_to_json(const RunAudit& audit, const IterationTrace& trace);

}  // namespace adp
