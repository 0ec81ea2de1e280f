#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adp/algorithms.hpp"
#include "adp/bounds.hpp"
#include "adp/linear_fa.hpp"
#include "adp/mdp.hpp"

namespace adp {

enum class FeatureDistribution { normal, identity };

/// Seeded random problem generator. Transition rows follow a symmetric
/// Dirichlet with the given concentration; rewards are i.i.d. uniform on
/// [0, 1]; features are i.i.d. standard normal (or the identity matrix, which
/// requires d = |S|). Everything is a pure function of `seed`.
struct RandomMdpParams {
    int num_states = 0;
    int num_actions = 0;
    int feature_dim = 0;
    double transition_concentration = 1.0;
    FeatureDistribution feature_distribution = FeatureDistribution::normal;
    double discount = 0.9;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GeneratedProblem {
    Mdp mdp;
    FeatureSystem features;
    int feature_attempts = 1;  // redraws needed to pass the rank check
};

GeneratedProblem generate_random_mdp(const RandomMdpParams& params);

/// One experiment definition: a problem source (files or generator), a run
/// block, and sweep lists over H, m, eta, gamma, eps_la, eps_pe, and the
/// resample size. Every cell of the cross product expands to a full RunConfig
/// whose seed is derived from (seed, cell index).
struct ExperimentSpec {
    // Problem source: exactly one of the two.
    std::string mdp_file;
    std::string features_file;
    std::optional<RandomMdpParams> generator;

    Variant variant = Variant::least_squares;
    std::vector<int> lookahead_depths{1};  // H
    std::vector<int> rollout_depths{1};    // m
    std::vector<int> gd_steps;             // eta (gradient_descent only)
    std::vector<double> gd_stepsizes;      // gamma (gradient_descent only)
    std::vector<double> eps_las{0.0};
    std::vector<double> eps_pes{0.0};
    std::vector<int> sample_sizes;  // resample mode only

    SelectionMode sample_mode = SelectionMode::all;
    std::vector<int> sample_indices;  // fixed mode only
    std::vector<double> theta0;       // empty means all zeros
    int num_iterations = 100;
    std::uint64_t seed = 0;
    double divergence_threshold = 1e8;
    int delta_app_cap = 4096;
    FiniteTimeMaxForm max_form = FiniteTimeMaxForm::alpha_pow_h;
    std::string output_dir = "out";

    void validate() const;
};

ExperimentSpec parse_experiment_text(std::istream& in, const std::string& origin = "<stream>");
ExperimentSpec load_experiment_spec(const std::string& path);

/// Loads or generates the problem instance named by the spec.
std::pair<Mdp, FeatureSystem> resolve_problem(const ExperimentSpec& spec);

/// The sweep grid in a fixed, documented order (H outermost, then m, eta,
/// gamma, eps_la, eps_pe, sample size innermost). Cell i gets seed
/// cell_seed(spec.seed, i).
std::vector<RunConfig> expand_grid(const ExperimentSpec& spec, const FeatureSystem& fs);

struct CellOutcome {
    std::size_t index = 0;
    RunConfig config;
    std::string status;  // completed | diverged | error
    std::string error_message;
    int diverged_at = -1;
    std::string assumptions_verdict;
    std::string bound_verdict;
    std::string trace_csv;   // path relative to the output directory
    std::string audit_json;  // path relative to the output directory
};

struct ExperimentManifest {
    std::string output_dir;
    std::uint64_t spec_seed = 0;
    std::vector<CellOutcome> cells;

    nlohmann::json to_json() const;
};

/// Expands the grid, executes every cell (optionally across `jobs` threads,
/// each cell single-threaded and owning its outputs), audits each trace, and
/// writes one trace CSV and one audit JSON per cell plus a manifest JSON.
/// Per-cell failures become manifest entries; the sweep continues.
ExperimentManifest run_experiment(const ExperimentSpec& spec,
                                  const std::string& output_dir_override = "", int jobs = 1);

}  // namespace adp
