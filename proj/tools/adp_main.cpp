// Command-line front end: deterministic experiment sweeps, the two-state
// divergence example, assumption checking, and the optimal-value oracle.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <json.hpp>
#include <unistd.h>

#include "adp/bounds.hpp"
#include "adp/counterexample.hpp"
#include "adp/experiments.hpp"
#include "adp/io.hpp"

namespace {

using nlohmann::json;

bool use_color() {
    static const bool enabled = ::isatty(1) && std::getenv("NO_COLOR") == nullptr;
    return enabled;
}

std::string paint(const std::string& text, bool good) {
    if (!use_color()) return text;
    return (good ? "\033[32m" : "\033[31m") + text + "\033[0m";
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

int cmd_run(const std::string& spec_path, const std::string& out_dir, int jobs, bool as_json) {
    adp::ExperimentSpec spec = adp::load_experiment_spec(spec_path);
    adp::ExperimentManifest manifest = adp::run_experiment(spec, out_dir, jobs);
    if (as_json) {
        std::cout << manifest.to_json().dump(2) << "\n";
    } else {
        std::cout << "wrote " << manifest.cells.size() << " cells to " << manifest.output_dir
                  << "\n";
        for (const adp::CellOutcome& c : manifest.cells) {
            std::cout << "  cell " << c.index << ": " << c.status;
            if (c.status == "error")
                std::cout << " (" << c.error_message << ")";
            else
                std::cout << ", assumptions=" << c.assumptions_verdict
                          << ", bound=" << c.bound_verdict;
            std::cout << "\n";
        }
        std::cout << "manifest: " << manifest.output_dir << "/manifest.json\n";
    }
    // a cell error is a configuration problem, not a tool failure
    for (const adp::CellOutcome& c : manifest.cells)
        if (c.status == "error") return 1;
    return 0;
}

int cmd_counterexample(const adp::CounterexampleSpec& spec, int iters, bool as_json) {
    adp::DichotomyReport report = adp::verify_dichotomy(spec, iters);

    std::string verdict;
    switch (report.predicted) {
        case adp::Regime::divergent: verdict = "DIVERGES"; break;
        case adp::Regime::convergent: verdict = "CONVERGES"; break;
        case adp::Regime::critical: verdict = "CRITICAL"; break;
    }

    if (as_json) {
        json j{{"verdict", verdict},
               {"growth_factor", report.growth_factor},
               {"depth_threshold", report.depth_threshold},
               {"run_status", report.run_status == adp::RunStatus::diverged ? "diverged" : "completed"},
               {"run_diverged_at", report.run_diverged_at},
               {"prediction_matches_run", report.prediction_matches_run},
               {"recursion_comparable", report.recursion_comparable},
               {"max_rel_theta_gap", report.max_rel_theta_gap},
               {"theta_run", report.run_theta},
               {"theta_recursion", report.recursion_theta}};
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    bool good = report.predicted == adp::Regime::convergent;
    std::cout << paint(verdict, good) << " (beta = " << fmt(report.growth_factor) << ")\n";
    std::cout << "delta_fv * alpha^(m+H-1) = " << fmt(report.growth_factor)
              << "; depth m+H-1 = " << (spec.m + spec.H - 1)
              << " vs threshold " << fmt(report.depth_threshold) << "\n";
    std::cout << "run status: "
              << (report.run_status == adp::RunStatus::diverged
                      ? "diverged at k = " + std::to_string(report.run_diverged_at)
                      : "completed")
              << "; closed-form agreement: "
              << (report.recursion_comparable
                      ? (report.theta_match ? "match" : "MISMATCH") +
                            std::string(" (max rel gap ") + fmt(report.max_rel_theta_gap) + ")"
                      : "not comparable for H > 1")
              << "\n";
    std::cout << "k,theta_run,theta_recursion\n";
    for (std::size_t k = 0; k < report.run_theta.size(); ++k) {
        std::cout << k << "," << fmt(report.run_theta[k]) << ","
                  << fmt(report.recursion_theta[k]) << "\n";
    }
    return 0;
}

int cmd_check(const std::string& spec_path, bool as_json) {
    adp::ExperimentSpec spec = adp::load_experiment_spec(spec_path);
    auto [mdp, fs] = adp::resolve_problem(spec);
    std::vector<adp::RunConfig> cells = adp::expand_grid(spec, fs);

    json cells_json = json::array();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const adp::RunConfig& cfg = cells[i];
        adp::RunStreams streams(cfg.seed);
        std::vector<adp::SampleSet> sets =
            adp::realize_sample_sets(fs, cfg.samples, cfg.num_iterations, streams.samples);
        adp::AssumptionReport report = adp::check_assumptions(mdp, fs, sets, cfg);

        // Params only; delta_0 needs a run and is reported as 0 here.
        adp::BoundParams params;
        const auto mode = adp::deterministic_policy_count(mdp) <= cfg.delta_app_cap
                              ? adp::DeltaAppMode::exhaustive
                              : adp::DeltaAppMode::encountered;
        bool have_params = true;
        try {
            switch (cfg.variant) {
                case adp::Variant::least_squares:
                    params = adp::params_ls(mdp, fs, sets, cfg.rollout_depth, cfg.lookahead_depth,
                                            cfg.eps_pe, 0.0, mode, {}, cfg.delta_app_cap);
                    break;
                case adp::Variant::gradient_descent:
                    params = adp::params_gd(mdp, fs, sets, cfg.rollout_depth, cfg.lookahead_depth,
                                            cfg.gd_steps, cfg.gd_stepsize, cfg.eps_pe, 0.0, mode,
                                            {}, cfg.delta_app_cap);
                    break;
                case adp::Variant::modified_ls:
                    params = adp::params_modified_ls(mdp, fs, sets, cfg.rollout_depth, cfg.eps_pe,
                                                     0.0, mode, {}, cfg.delta_app_cap);
                    break;
            }
        } catch (const adp::InvalidInputError&) {
            have_params = false;  // e.g. encountered mode with no policies yet
        }

        if (as_json) {
            json checks = json::array();
            for (const adp::AssumptionCheck& c : report.checks)
                checks.push_back({{"name", c.name},
                                  {"pass", c.pass},
                                  {"lhs", c.lhs},
                                  {"rhs", c.rhs},
                                  {"detail", c.detail}});
            json cell{{"index", i}, {"checks", std::move(checks)}};
            if (have_params) {
                cell["params"] = {{"delta_fv", params.delta_fv},
                                  {"delta_app", params.delta_app},
                                  {"beta", params.beta},
                                  {"tau", params.tau},
                                  {"beta_valid", params.beta_valid}};
                if (params.beta_valid) cell["params"]["mu_asym"] = params.mu_asym;
            }
            cells_json.push_back(std::move(cell));
        } else {
            std::cout << "cell " << i << " (" << adp::variant_name(cfg.variant)
                      << ", H=" << cfg.lookahead_depth << ", m=" << cfg.rollout_depth << "):\n";
            for (const adp::AssumptionCheck& c : report.checks) {
                std::cout << "  " << c.name << ": " << paint(c.pass ? "PASS" : "FAIL", c.pass)
                          << "  (lhs=" << fmt(c.lhs) << ", rhs=" << fmt(c.rhs) << ")\n";
            }
            if (have_params) {
                std::cout << "  delta_fv=" << fmt(params.delta_fv)
                          << " delta_app=" << fmt(params.delta_app) << " beta=" << fmt(params.beta)
                          << " tau=" << fmt(params.tau);
                if (params.beta_valid)
                    std::cout << " mu_asym=" << fmt(params.mu_asym);
                else
                    std::cout << " (beta >= 1: precondition violated)";
                std::cout << "\n";
            }
        }
    }
    if (as_json) std::cout << cells_json.dump(2) << "\n";
    return 0;
}

int cmd_oracle(const std::string& mdp_path, double tol, int cap, bool as_json) {
    adp::Mdp mdp = adp::load_mdp_file(mdp_path);
    adp::OptimalSolution sol = adp::solve_optimal(mdp, tol);

    bool brute_feasible = adp::deterministic_policy_count(mdp) <= static_cast<double>(cap);
    double brute_gap = 0.0;
    if (brute_feasible) {
        adp::ValueVec best = adp::ValueVec::Constant(mdp.num_states, 0.0);
        for (const adp::Policy& mu : adp::enumerate_deterministic_policies(mdp, cap))
            best = best.cwiseMax(adp::evaluate_policy_exact(mdp, mu));
        brute_gap = adp::inf_norm(best - sol.values);
    }

    if (as_json) {
        json j{{"optimal_values", std::vector<double>(sol.values.data(),
                                                      sol.values.data() + sol.values.size())},
               {"optimal_policy", sol.policy.action},
               {"value_iterations", sol.value_iterations}};
        if (brute_feasible) j["brute_force_gap"] = brute_gap;
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "optimal values:";
    for (Eigen::Index s = 0; s < sol.values.size(); ++s) std::cout << " " << fmt(sol.values(s));
    std::cout << "\noptimal policy:";
    for (int a : sol.policy.action) std::cout << " " << a;
    std::cout << "\n";
    if (brute_feasible)
        std::cout << "brute-force cross-check: max gap " << fmt(brute_gap) << " over "
                  << fmt(adp::deterministic_policy_count(mdp)) << " policies\n";
    else
        std::cout << "brute-force cross-check skipped (policy count above " << cap << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"approximate policy iteration with lookahead, rollout, and linear value-function "
                 "approximation"};
    app.require_subcommand(1);
    bool as_json = false;

    auto* run = app.add_subcommand("run", "execute an experiment spec (sweep grid)");
    run->add_flag("--json", as_json, "machine-readable output");
    std::string spec_path, out_dir;
    int jobs = 1;
    run->add_option("spec", spec_path, "experiment spec file")->required();
    run->add_option("--out", out_dir, "override the spec's output directory");
    run->add_option("--jobs", jobs, "parallel sweep cells")->check(CLI::PositiveNumber);

    auto* ce = app.add_subcommand("counterexample", "two-state divergence example");
    ce->add_flag("--json", as_json, "machine-readable output");
    adp::CounterexampleSpec ce_spec;
    int ce_iters = 300;
    ce->add_option("--alpha", ce_spec.alpha, "discount factor");
    ce->add_option("--m", ce_spec.m, "rollout depth");
    ce->add_option("--H", ce_spec.H, "lookahead depth");
    ce->add_option("--r1", ce_spec.r1, "reward at x1");
    ce->add_option("--r2", ce_spec.r2, "reward at x2");
    ce->add_option("--theta0", ce_spec.theta0, "initial weight");
    ce->add_option("--iters", ce_iters, "iterations to run");

    auto* check = app.add_subcommand("check", "assumptions and bound constants only, no run");
    check->add_flag("--json", as_json, "machine-readable output");
    std::string check_path;
    check->add_option("spec", check_path, "experiment spec file")->required();

    auto* oracle = app.add_subcommand("oracle", "optimal values and policy of an MDP file");
    oracle->add_flag("--json", as_json, "machine-readable output");
    std::string mdp_path;
    double tol = 1e-10;
    int cap = 4096;
    oracle->add_option("mdp", mdp_path, "MDP file")->required();
    oracle->add_option("--tol", tol, "oracle tolerance");
    oracle->add_option("--brute-force-cap", cap, "max policies for the cross-check");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(spec_path, out_dir, jobs, as_json);
        if (ce->parsed()) return cmd_counterexample(ce_spec, ce_iters, as_json);
        if (check->parsed()) return cmd_check(check_path, as_json);
        if (oracle->parsed()) return cmd_oracle(mdp_path, tol, cap, as_json);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints usage/help
        return code == 0 ? 0 : 1;
    } catch (const adp::InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
