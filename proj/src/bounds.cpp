#include "adp/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace adp {

namespace {

void require_unit_rewards(const Mdp& mdp, const char* what) {
    if (!mdp.unit_rewards)
        throw InvalidInputError(std::string(what) +
                                ": bound constants assume rewards in [0, 1]; refusing a model "
                                "with the unit-reward validation disabled");
}

void finalize(BoundParams& p) {
    p.beta_valid = p.beta < 1.0;
    if (p.beta_valid) p.mu_asym = p.tau / (1.0 - p.beta);
}

double ls_tau(double alpha, int m, int H, double delta_fv, double delta_app, double eps_pe) {
    return (std::pow(alpha, m) + std::pow(alpha, m + H - 1)) / (1.0 - alpha) * delta_fv +
           delta_app + delta_fv * eps_pe;
}

}  // namespace

BoundParams params_ls(const Mdp& mdp, const FeatureSystem& fs, std::span<const SampleSet> sets,
                      int m, int H, double eps_pe, double delta0, DeltaAppMode delta_app_mode,
                      std::span<const Policy> encountered, int delta_app_cap) {
    require_unit_rewards(mdp, "params_ls");
    if (m < 1 || H < 1) throw InvalidInputError("params_ls: m and H must be at least 1");
    if (!(delta0 >= 0.0) || !(eps_pe >= 0.0))
        throw InvalidInputError("params_ls: delta0 and eps_pe must be nonnegative");
    const double alpha = mdp.discount;

    BoundParams p;
    p.variant = Variant::least_squares;
    DeltaEstimate fv = compute_delta_fv(fs, sets);
    DeltaEstimate app = compute_delta_app(mdp, fs, sets, delta_app_mode, encountered, delta_app_cap);
    p.delta_fv = fv.value;
    p.delta_fv_empirical = fv.empirical;
    p.delta_app = app.value;
    p.delta_app_empirical = app.empirical;
    p.delta0 = delta0;
    p.eps_pe = eps_pe;
    p.beta = std::pow(alpha, m + H - 1) * p.delta_fv;
    p.tau = ls_tau(alpha, m, H, p.delta_fv, p.delta_app, eps_pe);
    finalize(p);
    return p;
}

BoundParams params_gd(const Mdp& mdp, const FeatureSystem& fs, std::span<const SampleSet> sets,
                      int m, int H, int eta, double gamma, double eps_pe, double delta0,
                      DeltaAppMode delta_app_mode, std::span<const Policy> encountered,
                      int delta_app_cap) {
    require_unit_rewards(mdp, "params_gd");
    if (m < 1 || H < 1 || eta < 1) throw InvalidInputError("params_gd: m, H, eta must be at least 1");
    if (!(gamma > 0.0)) throw InvalidInputError("params_gd: gamma must be positive");
    if (!(delta0 >= 0.0) || !(eps_pe >= 0.0))
        throw InvalidInputError("params_gd: delta0 and eps_pe must be nonnegative");
    const double alpha = mdp.discount;

    BoundParams p;
    p.variant = Variant::gradient_descent;
    DeltaEstimate fv = compute_delta_fv(fs, sets);
    DeltaEstimate app = compute_delta_app(mdp, fs, sets, delta_app_mode, encountered, delta_app_cap);
    p.delta_fv = fv.value;
    p.delta_fv_empirical = fv.empirical;
    p.delta_app = app.value;
    p.delta_app_empirical = app.empirical;
    p.delta0 = delta0;
    p.eps_pe = eps_pe;

    p.alpha_gd = 0.0;
    for (const SampleSet& ds : sets)
        p.alpha_gd = std::max(p.alpha_gd, spectral_quantities(fs, ds, gamma).alpha_gd);
    p.sigma_min_phi = fs.sigma_min();
    p.sqrt_s_norm_phi =
        std::sqrt(static_cast<double>(mdp.num_states)) * fs.phi_inf_norm() / p.sigma_min_phi;

    const double beta_ls = std::pow(alpha, m + H - 1) * p.delta_fv;
    const double correction = p.sqrt_s_norm_phi * std::pow(p.alpha_gd, eta);
    p.beta = beta_ls + correction * (beta_ls + 1.0);
    p.tau = (1.0 + correction) * ls_tau(alpha, m, H, p.delta_fv, p.delta_app, eps_pe) +
            correction / (1.0 - alpha);
    finalize(p);
    return p;
}

BoundParams params_modified_ls(const Mdp& mdp, const FeatureSystem& fs,
                               std::span<const SampleSet> sets, int m, double eps_pe, double delta0,
                               DeltaAppMode delta_app_mode, std::span<const Policy> encountered,
                               int delta_app_cap) {
    require_unit_rewards(mdp, "params_modified_ls");
    if (m < 1) throw InvalidInputError("params_modified_ls: m must be at least 1");
    if (!(delta0 >= 0.0) || !(eps_pe >= 0.0))
        throw InvalidInputError("params_modified_ls: delta0 and eps_pe must be nonnegative");
    const double alpha = mdp.discount;

    BoundParams p;
    p.variant = Variant::modified_ls;
    DeltaEstimate fv = compute_delta_fv(fs, sets);
    DeltaEstimate app = compute_delta_app(mdp, fs, sets, delta_app_mode, encountered, delta_app_cap);
    p.delta_fv = fv.value;
    p.delta_fv_empirical = fv.empirical;
    p.delta_app = app.value;
    p.delta_app_empirical = app.empirical;
    p.delta0 = delta0;
    p.eps_pe = eps_pe;
    p.beta = std::pow(alpha, m) * p.delta_fv;
    p.tau = std::pow(alpha, m) * p.delta_fv / (1.0 - alpha) + p.delta_app + p.delta_fv * eps_pe;
    finalize(p);
    return p;
}

BoundCurve policy_error_curve(const BoundParams& params, double alpha, int H, double eps_la,
                              int num_iterations, FiniteTimeMaxForm form) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInputError("policy_error_curve: bad alpha");
    if (H < 1) throw InvalidInputError("policy_error_curve: H must be at least 1");
    if (!(eps_la >= 0.0)) throw InvalidInputError("policy_error_curve: eps_la must be >= 0");
    if (num_iterations < 0) throw InvalidInputError("policy_error_curve: bad iteration count");

    BoundCurve curve;
    if (!params.beta_valid) return curve;  // precondition violated: beta >= 1
    curve.valid = true;

    const double alpha_h = std::pow(alpha, H);
    const double competitor =
        form == FiniteTimeMaxForm::alpha_pow_h ? alpha_h : std::pow(alpha, H - 1);
    const double rate = std::max(competitor, params.beta);

    curve.finite_time.resize(static_cast<std::size_t>(num_iterations) + 1);
    for (int k = 0; k <= num_iterations; ++k) {
        double decay = std::pow(alpha, static_cast<double>(k) * H) / (1.0 - alpha);
        double transient =
            k == 0 ? 0.0
                   : 2.0 * alpha_h / (1.0 - alpha) * k * std::pow(rate, k - 1) * params.delta0;
        curve.finite_time[static_cast<std::size_t>(k)] = decay + transient;
    }
    curve.asymptotic = (2.0 * alpha_h * params.mu_asym + eps_la) / ((1.0 - alpha) * (1.0 - alpha_h));
    return curve;
}

std::optional<double> iterate_limsup_bound(const BoundParams& params, double alpha, int m, int H,
                                            double eps_la) {
    if (!params.beta_valid) return std::nullopt;
    const double contraction = params.delta_fv * std::pow(alpha, m + H - 1);
    if (!(contraction < 1.0)) return std::nullopt;
    const double alpha_h = std::pow(alpha, H);
    const double asymptotic =
        (2.0 * alpha_h * params.mu_asym + eps_la) / ((1.0 - alpha) * (1.0 - alpha_h));
    const double numerator = (1.0 + params.delta_fv * std::pow(alpha, m)) * asymptotic +
                             params.delta_app + params.delta_fv * eps_la;
    return numerator / (1.0 - contraction);
}

bool AssumptionReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const AssumptionCheck* AssumptionReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

AssumptionReport check_assumptions(const Mdp& mdp, const FeatureSystem& fs,
                                   std::span<const SampleSet> sets, const RunConfig& config) {
    AssumptionReport report;
    const double alpha = mdp.discount;

    // Assumption 1: every sampled feature submatrix spans R^d.
    {
        AssumptionCheck c;
        c.name = "Assumption 1 (rank)";
        c.rhs = 1e-10;
        c.lhs = std::numeric_limits<double>::infinity();
        for (const SampleSet& ds : sets) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(ds.submatrix(fs));
            double smax = svd.singularValues().maxCoeff();
            double smin = svd.singularValues().minCoeff();
            c.lhs = std::min(c.lhs, smax > 0.0 ? smin / smax : 0.0);
        }
        c.pass = c.lhs > c.rhs;
        c.detail = "min over sample sets of sigma_min/sigma_max of Phi_D";
        report.checks.push_back(std::move(c));
    }

    const double delta_fv = compute_delta_fv(fs, sets).value;

    // Depth of the combined rollout/lookahead contraction.
    {
        AssumptionCheck c;
        c.name = "depth condition";
        if (config.variant == Variant::modified_ls) {
            c.lhs = config.rollout_depth;
            c.rhs = std::log(delta_fv) / std::log(1.0 / alpha);
            c.detail = "m vs log(delta_fv)/log(1/alpha)";
        } else if (config.variant == Variant::gradient_descent) {
            c.lhs = config.rollout_depth + config.lookahead_depth - 1;
            c.rhs = std::log(2.0 * delta_fv) / std::log(1.0 / alpha);
            c.detail = "m+H-1 vs log(2*delta_fv)/log(1/alpha)";
        } else {
            c.lhs = config.rollout_depth + config.lookahead_depth - 1;
            c.rhs = std::log(delta_fv) / std::log(1.0 / alpha);
            c.detail = "m+H-1 vs log(delta_fv)/log(1/alpha)";
        }
        c.pass = c.lhs > c.rhs;
        report.checks.push_back(std::move(c));
    }

    if (config.variant == Variant::gradient_descent) {
        double inf_gram_norm = std::numeric_limits<double>::infinity();
        double alpha_gd = 0.0;
        for (const SampleSet& ds : sets) {
            Eigen::MatrixXd phi_d = ds.submatrix(fs);
            Eigen::MatrixXd gram = phi_d.transpose() * phi_d;
            inf_gram_norm = std::min(inf_gram_norm, gram.cwiseAbs().rowwise().sum().maxCoeff());
            alpha_gd =
                std::max(alpha_gd, spectral_quantities(fs, ds, config.gd_stepsize).alpha_gd);
        }

        {
            AssumptionCheck c;
            c.name = "Assumption 2 (stepsize)";
            c.lhs = config.gd_stepsize;
            c.rhs = 1.0 / (fs.dim() * inf_gram_norm * inf_gram_norm);
            c.pass = c.lhs < c.rhs;  // strict
            c.detail = "gamma vs 1/(d * inf_k ||Phi_D^T Phi_D||_inf^2)";
            report.checks.push_back(std::move(c));
        }
        {
            AssumptionCheck c;
            c.name = "Assumption 2 (inner steps)";
            c.lhs = config.gd_steps;
            double numer = std::log(3.0 * std::sqrt(static_cast<double>(mdp.num_states)) *
                                    fs.phi_inf_norm() / fs.sigma_min());
            c.rhs = alpha_gd < 1.0 ? numer / std::log(1.0 / alpha_gd)
                                   : std::numeric_limits<double>::infinity();
            c.pass = c.lhs > c.rhs;
            c.detail = "eta vs log(3 sqrt(|S|) ||Phi||_inf / sigma_min)/log(1/alpha_gd), alpha_gd = " +
                       std::to_string(alpha_gd);
            report.checks.push_back(std::move(c));
        }
    }
    return report;
}

bool delta_recursion_holds(const BoundParams& params, const IterationTrace& trace, double slack) {
    for (std::size_t k = 1; k < trace.records.size(); ++k) {
        double predicted = params.beta * trace.records[k - 1].delta_k + params.tau + slack;
        if (trace.records[k].delta_k > predicted) return false;
    }
    return true;
}

namespace {

std::vector<SampleSet> distinct_realized_sets(const FeatureSystem& fs, const RunConfig& config,
                                              const IterationTrace& trace) {
    std::set<std::vector<int>> seen;
    std::vector<SampleSet> sets;
    for (const IterationRecord& rec : trace.records) {
        if (rec.sample_indices.empty()) continue;
        if (seen.insert(rec.sample_indices).second)
            sets.push_back(SampleSet::create(fs, rec.sample_indices, config.samples.mode));
    }
    if (sets.empty()) throw InvalidInputError("audit: trace contains no realized sample sets");
    return sets;
}

std::string verdict_string(bool valid, bool pass, bool advisory) {
    if (!valid) return "precondition-violated";
    std::string v = pass ? "pass" : "fail";
    return advisory ? "advisory-" + v : v;
}

}  // namespace

RunAudit audit_run(const Mdp& mdp, const FeatureSystem& fs, const RunConfig& config,
                   const IterationTrace& trace) {
    if (trace.records.empty()) throw InvalidInputError("audit_run: empty trace");
    RunAudit audit;
    audit.realized_sets = distinct_realized_sets(fs, config, trace);
    audit.assumptions = check_assumptions(mdp, fs, audit.realized_sets, config);

    const double policy_count = deterministic_policy_count(mdp);
    const bool exhaustive = policy_count <= static_cast<double>(config.delta_app_cap);
    std::vector<Policy> encountered;
    if (!exhaustive) {
        for (const IterationRecord& rec : trace.records) encountered.push_back(rec.policy);
        audit.notes.push_back(
            "delta_app is an encountered-policy lower estimate (policy count above cap); "
            "bound verdicts are advisory");
    }
    const DeltaAppMode app_mode = exhaustive ? DeltaAppMode::exhaustive : DeltaAppMode::encountered;

    const double delta0 = trace.records.front().delta_k;
    const int m = config.rollout_depth;
    const int H = config.lookahead_depth;
    switch (config.variant) {
        case Variant::least_squares:
            audit.params = params_ls(mdp, fs, audit.realized_sets, m, H, config.eps_pe, delta0,
                                     app_mode, encountered, config.delta_app_cap);
            break;
        case Variant::gradient_descent:
            audit.params = params_gd(mdp, fs, audit.realized_sets, m, H, config.gd_steps,
                                     config.gd_stepsize, config.eps_pe, delta0, app_mode,
                                     encountered, config.delta_app_cap);
            break;
        case Variant::modified_ls:
            audit.params = params_modified_ls(mdp, fs, audit.realized_sets, m, config.eps_pe,
                                              delta0, app_mode, encountered, config.delta_app_cap);
            audit.notes.push_back(
                "modified least-squares constants follow the derivation (beta is the "
                "contraction coefficient); the published statement swaps the labels");
            break;
    }

    audit.params.eps_la = config.eps_la;
    const int last_k = trace.records.back().k;
    audit.curve = policy_error_curve(audit.params, mdp.discount, H, config.eps_la, last_k,
                                     config.max_form);
    audit.iterate_limit_bound =
        iterate_limsup_bound(audit.params, mdp.discount, m, H, config.eps_la);

    const bool advisory = audit.params.delta_app_empirical || audit.params.delta_fv_empirical;
    bool bound_ok = true;
    if (audit.curve.valid) {
        for (const IterationRecord& rec : trace.records)
            if (rec.err_policy > audit.curve.total(rec.k) + kAuditSlack) bound_ok = false;
    }
    audit.bound_verdict = verdict_string(audit.curve.valid, bound_ok, advisory);

    bool iterate_ok = true;
    if (audit.iterate_limit_bound.has_value()) {
        // limsup surrogate: max over the last quarter of the recorded iterations.
        std::size_t n = trace.records.size();
        std::size_t start = n - std::max<std::size_t>(1, n / 4);
        double tail_max = 0.0;
        for (std::size_t i = start; i < n; ++i)
            tail_max = std::max(tail_max, trace.records[i].err_iterate);
        iterate_ok = tail_max <= *audit.iterate_limit_bound + kAuditSlack;
    }
    audit.iterate_verdict =
        verdict_string(audit.iterate_limit_bound.has_value(), iterate_ok, advisory);

    audit.delta_recursion_ok =
        audit.params.beta_valid && delta_recursion_holds(audit.params, trace);

    if (audit.params.delta_fv_empirical)
        audit.notes.push_back("delta_fv is the sup over realized resampled sets only");
    return audit;
}

nlohmann::json audit_to_json(const RunAudit& audit, const IterationTrace& trace) {
    nlohmann::json j;

    nlohmann::json assumptions = nlohmann::json::array();
    for (const AssumptionCheck& c : audit.assumptions.checks) {
        assumptions.push_back({{"name", c.name},
                               {"pass", c.pass},
                               {"lhs", c.lhs},
                               {"rhs", c.rhs},
                               {"detail", c.detail}});
    }
    j["assumptions"] = std::move(assumptions);

    const BoundParams& p = audit.params;
    j["params"] = {
        {"delta_fv", p.delta_fv},
        {"delta_fv_empirical", p.delta_fv_empirical},
        {"delta_app", p.delta_app},
        {"delta_app_empirical", p.delta_app_empirical},
        {"beta", p.beta},
        {"tau", p.tau},
        {"beta_valid", p.beta_valid},
        {"mu_asym", p.beta_valid ? nlohmann::json(p.mu_asym) : nlohmann::json("precondition violated")},
        {"delta0", p.delta0},
        {"eps_pe", p.eps_pe},
        {"eps_la", p.eps_la},
    };
    if (p.variant == Variant::gradient_descent) {
        j["params"]["alpha_gd"] = p.alpha_gd;
        j["params"]["sigma_min_phi"] = p.sigma_min_phi;
        j["params"]["sqrt_s_norm_phi"] = p.sqrt_s_norm_phi;
    }

    nlohmann::json iterations = nlohmann::json::array();
    for (const IterationRecord& rec : trace.records) {
        nlohmann::json row = {{"k", rec.k}, {"measured", rec.err_policy}};
        if (audit.curve.valid) {
            row["bound_total"] = audit.curve.total(rec.k);
            row["ok"] = rec.err_policy <= audit.curve.total(rec.k) + kAuditSlack;
        } else {
            row["bound_total"] = nullptr;
            row["ok"] = nullptr;
        }
        iterations.push_back(std::move(row));
    }
    j["iterations"] = std::move(iterations);

    j["verdicts"] = {
        {"assumptions", audit.assumptions.all_pass() ? "pass" : "fail"},
        {"bound_validity", audit.bound_verdict},
        {"iterate_limit", audit.iterate_verdict},
        {"delta_recursion", audit.delta_recursion_ok ? "pass" : "fail"},
    };
    if (audit.iterate_limit_bound.has_value())
        j["verdicts"]["iterate_limit_bound"] = *audit.iterate_limit_bound;
    j["notes"] = audit.notes;
    j["status"] = trace.status == RunStatus::completed ? "completed" : "diverged";
    if (trace.status == RunStatus::diverged) j["diverged_at"] = trace.diverged_at;
    return j;
}

}  // namespace adp
