#include "adp/counterexample.hpp"

#include <cmath>

namespace adp {

void CounterexampleSpec::validate() const {
    if (!(r1 > r2)) throw InvalidInputError("counterexample requires r1 > r2");
    if (r1 < 0.0 || r1 > 1.0 || r2 < 0.0 || r2 > 1.0)
        throw InvalidInputError("counterexample rewards must lie in [0, 1]");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidInputError("counterexample discount must lie in (0, 1)");
    if (m < 1 || H < 1) throw InvalidInputError("counterexample requires m >= 1 and H >= 1");
    if (!(theta0 > 0.0)) throw InvalidInputError("counterexample requires theta0 > 0");
}

Mdp build_counterexample_mdp(const CounterexampleSpec& spec) {
    spec.validate();
    Mdp mdp;
    mdp.num_states = 2;
    mdp.num_actions = 2;
    mdp.discount = spec.alpha;
    mdp.transition.assign(2, Eigen::MatrixXd::Zero(2, 2));
    mdp.transition[0] << 1, 0, 1, 0;  // action 0: both states move to x1
    mdp.transition[1] << 0, 1, 0, 1;  // action 1: both states move to x2
    mdp.reward.resize(2, 2);
    mdp.reward << spec.r1, spec.r1, spec.r2, spec.r2;  // reward depends on the state only
    mdp.validate();
    return mdp;
}

FeatureSystem counterexample_features() {
    Eigen::MatrixXd phi(2, 1);
    phi << 1.0, 2.0;
    return FeatureSystem::create(std::move(phi));
}

namespace {

double geometric_sum(double alpha, int from, int to) {  // sum_{i=from}^{to} alpha^i
    double s = 0.0;
    for (int i = from; i <= to; ++i) s += std::pow(alpha, i);
    return s;
}

}  // namespace

std::vector<double> theta_recursion(const CounterexampleSpec& spec, int k_max,
                                    RecursionRewardTerms terms) {
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
        throw InvalidInputError("theta_recursion: discount must lie in (0, 1)");
    if (spec.m < 1 || spec.H < 1) throw InvalidInputError("theta_recursion: m, H must be >= 1");
    if (k_max < 0) throw InvalidInputError("theta_recursion: k_max must be nonnegative");

    const double a = spec.alpha;
    const int m = spec.m;
    const int H = spec.H;
    const double rate = 1.2 * std::pow(a, m + H - 1);

    // Reward part of the H-1 step lookahead value at x2 (the bootstrap state).
    double lookahead_rewards;
    double leg_x1, leg_x2;
    if (terms == RecursionRewardTerms::full_trajectory) {
        lookahead_rewards = H == 1 ? 0.0 : spec.r2 + geometric_sum(a, 1, H - 2) * spec.r1;
        leg_x1 = spec.r1 + geometric_sum(a, 1, m - 1) * spec.r2 +
                 std::pow(a, m) * lookahead_rewards;
        leg_x2 = geometric_sum(a, 0, m - 1) * spec.r2 + std::pow(a, m) * lookahead_rewards;
    } else {
        lookahead_rewards = H == 1 ? 0.0 : geometric_sum(a, 1, H - 2) * spec.r1;
        leg_x1 = geometric_sum(a, 1, m - 1) * spec.r1 + std::pow(a, m) * lookahead_rewards;
        leg_x2 = geometric_sum(a, 1, m - 1) * spec.r2 + std::pow(a, m) * lookahead_rewards;
    }
    const double constant = (leg_x1 + 2.0 * leg_x2) / 5.0;

    std::vector<double> theta(static_cast<std::size_t>(k_max) + 1);
    theta[0] = spec.theta0;
    for (int k = 0; k < k_max; ++k)
        theta[static_cast<std::size_t>(k) + 1] = constant + rate * theta[static_cast<std::size_t>(k)];
    return theta;
}

RunConfig counterexample_run_config(const CounterexampleSpec& spec, int k_max) {
    RunConfig cfg;
    cfg.variant = Variant::least_squares;
    cfg.lookahead_depth = spec.H;
    cfg.rollout_depth = spec.m;
    cfg.eps_la = 0.0;
    cfg.eps_pe = 0.0;
    cfg.theta0 = Eigen::VectorXd::Constant(1, spec.theta0);
    cfg.num_iterations = k_max;
    cfg.seed = 0;
    cfg.samples.mode = SelectionMode::all;
    return cfg;
}

DichotomyReport verify_dichotomy(const CounterexampleSpec& spec, int k_max) {
    spec.validate();
    if (k_max < 1) throw InvalidInputError("verify_dichotomy: k_max must be at least 1");

    DichotomyReport report;
    report.growth_factor = 1.2 * std::pow(spec.alpha, spec.m + spec.H - 1);
    report.depth_threshold = std::log(1.2) / std::log(1.0 / spec.alpha);
    if (std::abs(report.growth_factor - 1.0) <= 1e-12)
        report.predicted = Regime::critical;
    else
        report.predicted = report.growth_factor > 1.0 ? Regime::divergent : Regime::convergent;

    Mdp mdp = build_counterexample_mdp(spec);
    FeatureSystem fs = counterexample_features();
    IterationTrace trace = run_ls_api(mdp, fs, counterexample_run_config(spec, k_max));
    report.run_status = trace.status;
    report.run_diverged_at = trace.diverged_at;

    report.recursion_theta = theta_recursion(spec, k_max, RecursionRewardTerms::full_trajectory);
    report.run_theta.reserve(trace.records.size());
    for (const IterationRecord& rec : trace.records) report.run_theta.push_back(rec.theta(0));

    report.recursion_comparable = spec.H == 1;
    double gap = 0.0;
    for (std::size_t k = 0; k < report.run_theta.size(); ++k) {
        double a = report.run_theta[k];
        double b = report.recursion_theta[k];
        double scale = std::max({std::abs(a), std::abs(b), 1e-12});
        gap = std::max(gap, std::abs(a - b) / scale);
    }
    report.max_rel_theta_gap = gap;
    report.theta_match = gap <= 1e-9;

    switch (report.predicted) {
        case Regime::divergent:
            report.prediction_matches_run = trace.status == RunStatus::diverged;
            break;
        case Regime::convergent:
            report.prediction_matches_run = trace.status == RunStatus::completed;
            break;
        case Regime::critical:
            report.prediction_matches_run = false;  // boundary case: neither regime is asserted
            break;
    }
    return report;
}

}  // namespace adp
