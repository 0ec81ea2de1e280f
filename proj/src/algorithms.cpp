#include "adp/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace adp {

void RunConfig::validate(const Mdp& mdp, const FeatureSystem& fs) const {
    if (fs.num_states() != mdp.num_states)
        throw InvalidInputError("feature matrix and MDP disagree on the number of states");
    if (lookahead_depth < 1) throw InvalidInputError("H must be at least 1");
    if (rollout_depth < 1) throw InvalidInputError("m must be at least 1");
    if (!(eps_la >= 0.0) || !std::isfinite(eps_la)) throw InvalidInputError("eps_la must be >= 0");
    if (!(eps_pe >= 0.0) || !std::isfinite(eps_pe)) throw InvalidInputError("eps_pe must be >= 0");
    if (num_iterations < 1) throw InvalidInputError("num_iterations must be at least 1");
    if (!(divergence_threshold > 0.0)) throw InvalidInputError("divergence_threshold must be positive");
    if (theta0.size() != fs.dim())
        throw InvalidInputError("theta0 has dimension " + std::to_string(theta0.size()) +
                                ", expected " + std::to_string(fs.dim()));
    if (!theta0.allFinite()) throw InvalidInputError("theta0 must be finite");
    if (delta_app_cap < 1) throw InvalidInputError("delta_app_cap must be positive");

    if (variant == Variant::gradient_descent) {
        if (gd_steps < 1) throw InvalidInputError("gradient-descent variant requires eta >= 1");
        if (!(gd_stepsize > 0.0)) throw InvalidInputError("gradient-descent variant requires gamma > 0");
    } else {
        if (gd_steps != 0 || gd_stepsize != 0.0)
            throw InvalidInputError("eta/gamma are only valid for the gradient-descent variant");
    }

    switch (samples.mode) {
        case SelectionMode::all:
            break;
        case SelectionMode::fixed:
            if (samples.indices.empty())
                throw InvalidInputError("fixed sample mode requires an explicit index list");
            break;
        case SelectionMode::resample_per_iteration:
            if (samples.size < fs.dim() || samples.size > fs.num_states())
                throw InvalidInputError("resample size must lie in [d, |S|]");
            break;
    }
}

std::vector<SampleSet> realize_sample_sets(const FeatureSystem& fs, const SampleSetSpec& spec,
                                           int num_iterations, RngStream& stream) {
    if (num_iterations < 1) throw InvalidInputError("realize_sample_sets: need at least one iteration");
    std::vector<SampleSet> sets;
    sets.reserve(static_cast<std::size_t>(num_iterations));

    if (spec.mode == SelectionMode::all || spec.mode == SelectionMode::fixed) {
        SampleSet base = spec.mode == SelectionMode::all
                             ? SampleSet::all_states(fs)
                             : SampleSet::create(fs, spec.indices, SelectionMode::fixed);
        for (int k = 0; k < num_iterations; ++k) sets.push_back(base);
        return sets;
    }

    const int n = fs.num_states();
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int k = 0; k < num_iterations; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            std::iota(pool.begin(), pool.end(), 0);
            for (int i = 0; i < spec.size; ++i) {
                std::uint64_t pick = stream.next_below(static_cast<std::uint64_t>(n - i));
                std::swap(pool[static_cast<std::size_t>(i)],
                          pool[static_cast<std::size_t>(i) + pick]);
            }
            std::vector<int> draw(pool.begin(), pool.begin() + spec.size);
            std::sort(draw.begin(), draw.end());
            try {
                sets.push_back(SampleSet::create(fs, std::move(draw),
                                                 SelectionMode::resample_per_iteration));
                placed = true;
            } catch (const RankDeficiencyError&) {
                // redraw
            }
        }
        if (!placed)
            throw InvalidInputError(
                "resampling failed to produce a rank-d sample set in 100 attempts");
    }
    return sets;
}

LookaheadSelection select_lookahead_policy(const Mdp& mdp, const ValueVec& j, int h, double eps_la,
                                           RngStream& noise) {
    if (h < 1) throw InvalidInputError("select_lookahead_policy: h must be at least 1");
    if (!(eps_la >= 0.0)) throw InvalidInputError("select_lookahead_policy: eps_la must be >= 0");
    ValueVec level = lookahead(mdp, j, h - 1);

    LookaheadSelection sel;
    sel.policy.action.resize(static_cast<std::size_t>(mdp.num_states));
    double gap = 0.0;
    Eigen::VectorXd q(mdp.num_actions);
    for (int s = 0; s < mdp.num_states; ++s) {
        double best_perturbed = -std::numeric_limits<double>::infinity();
        double exact_max = -std::numeric_limits<double>::infinity();
        int best_a = 0;
        for (int a = 0; a < mdp.num_actions; ++a) {
            q(a) = mdp.reward(s, a) + mdp.discount * mdp.transition[a].row(s).dot(level);
            double perturbed = q(a) - eps_la * noise.next_double();
            if (perturbed > best_perturbed) {
                best_perturbed = perturbed;
                best_a = a;
            }
            exact_max = std::max(exact_max, q(a));
        }
        sel.policy.action[static_cast<std::size_t>(s)] = best_a;
        gap = std::max(gap, exact_max - q(best_a));
    }
    sel.realized_gap = gap;
    if (gap > eps_la + 1e-12 * (1.0 + eps_la))
        throw InternalError("lookahead selection gap " + std::to_string(gap) +
                            " exceeds eps_la = " + std::to_string(eps_la));
    return sel;
}

namespace {

IterationRecord make_record(const Mdp& mdp, const FeatureSystem& fs, int k,
                            const Eigen::VectorXd& theta, Policy mu, const ValueVec& jstar) {
    IterationRecord rec;
    rec.k = k;
    rec.theta = theta;
    rec.j = fs.phi() * theta;
    ValueVec jmu = evaluate_policy_exact(mdp, mu);
    rec.policy = std::move(mu);
    rec.err_policy = inf_norm(jmu - jstar);
    rec.delta_k = inf_norm(rec.j - jmu);
    rec.err_iterate = inf_norm(rec.j - jstar);
    return rec;
}

IterationTrace run_impl(const Mdp& mdp, const FeatureSystem& fs, const RunConfig& cfg) {
    mdp.validate();
    cfg.validate(mdp, fs);

    RunStreams streams(cfg.seed);
    std::vector<SampleSet> sets =
        realize_sample_sets(fs, cfg.samples, cfg.num_iterations, streams.samples);
    ValueVec jstar = solve_optimal(mdp).values;

    IterationTrace trace;
    Eigen::VectorXd theta = cfg.theta0;
    ValueVec j = fs.phi() * theta;
    trace.records.push_back(make_record(mdp, fs, 0, theta, greedy_policy(mdp, j), jstar));
    if (inf_norm(theta) > cfg.divergence_threshold) {
        trace.status = RunStatus::diverged;
        trace.diverged_at = 0;
        return trace;
    }

    for (int k = 0; k < cfg.num_iterations; ++k) {
        LookaheadSelection sel =
            select_lookahead_policy(mdp, j, cfg.lookahead_depth, cfg.eps_la, streams.lookahead);
        const SampleSet& ds = sets[static_cast<std::size_t>(k)];

        ValueVec base = cfg.variant == Variant::modified_ls
                            ? j
                            : lookahead(mdp, j, cfg.lookahead_depth - 1);
        ValueVec targets = rollout_return(mdp, sel.policy, base, cfg.rollout_depth);

        double wnorm = 0.0;
        for (int idx : ds.indices()) {
            double w = streams.rollout.uniform(-cfg.eps_pe, cfg.eps_pe);
            targets(idx) += w;
            wnorm = std::max(wnorm, std::abs(w));
        }

        double gd_before = 0.0, gd_after = 0.0;
        if (cfg.variant == Variant::gradient_descent) {
            Eigen::VectorXd tilde = least_squares_fit(fs, ds, targets);
            Eigen::VectorXd next =
                gradient_descent_fit(fs, ds, targets, theta, cfg.gd_stepsize, cfg.gd_steps);
            gd_before = (theta - tilde).norm();
            gd_after = (next - tilde).norm();
            theta = std::move(next);
        } else {
            theta = least_squares_fit(fs, ds, targets);
        }
        j = fs.phi() * theta;

        IterationRecord rec = make_record(mdp, fs, k + 1, theta, sel.policy, jstar);
        rec.sample_indices = ds.indices();
        rec.lookahead_gap = sel.realized_gap;
        rec.rollout_noise_norm = wnorm;
        rec.gd_dist_before = gd_before;
        rec.gd_dist_after = gd_after;
        trace.records.push_back(std::move(rec));

        if (inf_norm(theta) > cfg.divergence_threshold) {
            trace.status = RunStatus::diverged;
            trace.diverged_at = k + 1;
            break;
        }
    }
    return trace;
}

void require_variant(const RunConfig& cfg, Variant expected, const char* what) {
    if (cfg.variant != expected)
        throw InvalidInputError(std::string(what) + ": config has a different variant");
}

}  // namespace

IterationTrace run_ls_api(const Mdp& mdp, const FeatureSystem& fs, const RunConfig& config) {
    require_variant(config, Variant::least_squares, "run_ls_api");
    return run_impl(mdp, fs, config);
}

IterationTrace run_gd_api(const Mdp& mdp, const FeatureSystem& fs, const RunConfig& config) {
    require_variant(config, Variant::gradient_descent, "run_gd_api");
    return run_impl(mdp, fs, config);
}

IterationTrace run_modified_ls_api(const Mdp& mdp, const FeatureSystem& fs, const RunConfig& config) {
    require_variant(config, Variant::modified_ls, "run_modified_ls_api");
    return run_impl(mdp, fs, config);
}

}  // namespace adp
