#include "adp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "adp/io.hpp"
#include "adp/rng.hpp"

namespace adp {

void RandomMdpParams::validate() const {
    if (num_states < 1) throw InvalidInputError("generator: num_states must be positive");
    if (num_actions < 1) throw InvalidInputError("generator: num_actions must be positive");
    if (feature_dim < 1 || feature_dim > num_states)
        throw InvalidInputError("generator: feature_dim must lie in [1, num_states]");
    if (!(transition_concentration > 0.0))
        throw InvalidInputError("generator: transition_concentration must be positive");
    if (feature_distribution == FeatureDistribution::identity && feature_dim != num_states)
        throw InvalidInputError("generator: identity features require feature_dim = num_states");
    if (!(discount > 0.0 && discount < 1.0))
        throw InvalidInputError("generator: discount must lie strictly inside (0, 1)");
}

GeneratedProblem generate_random_mdp(const RandomMdpParams& params) {
    params.validate();
    RngStream transitions(RunStreams::derive(params.seed, 0));
    RngStream rewards(RunStreams::derive(params.seed, 1));
    const std::uint64_t feature_base = RunStreams::derive(params.seed, 2);

    Mdp mdp;
    mdp.num_states = params.num_states;
    mdp.num_actions = params.num_actions;
    mdp.discount = params.discount;
    mdp.transition.assign(static_cast<std::size_t>(params.num_actions),
                          Eigen::MatrixXd::Zero(params.num_states, params.num_states));
    mdp.reward.resize(params.num_states, params.num_actions);

    for (int s = 0; s < params.num_states; ++s)
        for (int a = 0; a < params.num_actions; ++a) {
            Eigen::VectorXd row(params.num_states);
            for (int s2 = 0; s2 < params.num_states; ++s2)
                row(s2) = transitions.gamma(params.transition_concentration);
            row /= row.sum();
            mdp.transition[static_cast<std::size_t>(a)].row(s) = row;
        }
    for (int s = 0; s < params.num_states; ++s)
        for (int a = 0; a < params.num_actions; ++a) mdp.reward(s, a) = rewards.next_double();
    mdp.validate();

    // Features: redraw with an incremented sub-seed until the rank check passes.
    for (int attempt = 0; attempt < 100; ++attempt) {
        Eigen::MatrixXd phi;
        if (params.feature_distribution == FeatureDistribution::identity) {
            phi = Eigen::MatrixXd::Identity(params.num_states, params.num_states);
        } else {
            RngStream fstream(feature_base + static_cast<std::uint64_t>(attempt));
            phi.resize(params.num_states, params.feature_dim);
            for (int s = 0; s < params.num_states; ++s)
                for (int c = 0; c < params.feature_dim; ++c) phi(s, c) = fstream.normal();
        }
        try {
            FeatureSystem features = FeatureSystem::create(std::move(phi));
            return GeneratedProblem{std::move(mdp), std::move(features), attempt + 1};
        } catch (const RankDeficiencyError&) {
            // redraw
        }
    }
    throw InvalidInputError("generator: 100 feature draws failed the rank check");
}

// -- experiment spec parsing -------------------------------------------------

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : value) {
        if (c == ',') {
            out.push_back(trim_copy(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim_copy(cur));
    return out;
}

std::vector<int> int_list(const std::string& value, const std::string& what) {
    std::vector<int> out;
    for (const std::string& tok : split_list(value)) {
        if (tok.empty()) throw InvalidInputError(what + ": empty list element");
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(tok, &pos);
        } catch (const std::exception&) {
            throw InvalidInputError(what + ": cannot parse '" + tok + "' as an integer");
        }
        if (pos != tok.size()) throw InvalidInputError(what + ": trailing characters in '" + tok + "'");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

std::vector<double> real_list(const std::string& value, const std::string& what) {
    std::vector<double> out;
    for (const std::string& tok : split_list(value)) {
        if (tok.empty()) throw InvalidInputError(what + ": empty list element");
        std::size_t pos = 0;
        double v = 0;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw InvalidInputError(what + ": cannot parse '" + tok + "' as a number");
        }
        if (pos != tok.size()) throw InvalidInputError(what + ": trailing characters in '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

std::uint64_t u64_value(const std::string& value, const std::string& what) {
    try {
        return std::stoull(trim_copy(value));
    } catch (const std::exception&) {
        throw InvalidInputError(what + ": cannot parse '" + value + "' as a seed");
    }
}

}  // namespace

void ExperimentSpec::validate() const {
    const bool has_files = !mdp_file.empty() || !features_file.empty();
    if (has_files && (mdp_file.empty() || features_file.empty()))
        throw InvalidInputError("spec: mdp_file and features_file must be given together");
    if (has_files == generator.has_value())
        throw InvalidInputError("spec: give either mdp_file/features_file or a generator block");
    if (generator) generator->validate();

    auto positive = [](const std::vector<int>& xs, const char* what) {
        if (xs.empty()) throw InvalidInputError(std::string("spec: ") + what + " list is empty");
        for (int x : xs)
            if (x < 1) throw InvalidInputError(std::string("spec: ") + what + " must be >= 1");
    };
    positive(lookahead_depths, "H");
    positive(rollout_depths, "m");
    auto nonneg = [](const std::vector<double>& xs, const char* what) {
        if (xs.empty()) throw InvalidInputError(std::string("spec: ") + what + " list is empty");
        for (double x : xs)
            if (!(x >= 0.0)) throw InvalidInputError(std::string("spec: ") + what + " must be >= 0");
    };
    nonneg(eps_las, "eps_la");
    nonneg(eps_pes, "eps_pe");

    if (variant == Variant::gradient_descent) {
        positive(gd_steps, "eta");
        if (gd_stepsizes.empty()) throw InvalidInputError("spec: gamma list is empty");
        for (double g : gd_stepsizes)
            if (!(g > 0.0)) throw InvalidInputError("spec: gamma must be > 0");
    } else if (!gd_steps.empty() || !gd_stepsizes.empty()) {
        throw InvalidInputError("spec: eta/gamma are only valid for variant = gradient_descent");
    }

    switch (sample_mode) {
        case SelectionMode::all:
            if (!sample_indices.empty() || !sample_sizes.empty())
                throw InvalidInputError("spec: sample_indices/sample_size invalid for mode 'all'");
            break;
        case SelectionMode::fixed:
            if (sample_indices.empty())
                throw InvalidInputError("spec: sample_mode = fixed requires sample_indices");
            if (!sample_sizes.empty())
                throw InvalidInputError("spec: sample_size invalid for mode 'fixed'");
            break;
        case SelectionMode::resample_per_iteration:
            if (sample_sizes.empty())
                throw InvalidInputError("spec: sample_mode = resample requires sample_size");
            if (!sample_indices.empty())
                throw InvalidInputError("spec: sample_indices invalid for mode 'resample'");
            break;
    }
    if (num_iterations < 1) throw InvalidInputError("spec: num_iterations must be >= 1");
    if (!(divergence_threshold > 0.0))
        throw InvalidInputError("spec: divergence_threshold must be > 0");
    if (delta_app_cap < 1) throw InvalidInputError("spec: delta_app_cap must be >= 1");
    if (output_dir.empty()) throw InvalidInputError("spec: output_dir must be non-empty");
}

ExperimentSpec parse_experiment_text(std::istream& in, const std::string& origin) {
    ExperimentSpec spec;
    RandomMdpParams gen;
    bool saw_gen = false;
    bool saw_seed = false;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::string t = trim_copy(line);
        if (t.empty()) continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw InvalidInputError(origin + ":" + std::to_string(lineno) +
                                    ": expected 'key = value'");
        std::string key = trim_copy(t.substr(0, eq));
        std::string value = trim_copy(t.substr(eq + 1));
        std::string where = origin + ":" + std::to_string(lineno) + ": " + key;
        if (value.empty()) throw InvalidInputError(where + ": empty value");

        if (key == "mdp_file") spec.mdp_file = value;
        else if (key == "features_file") spec.features_file = value;
        else if (key == "num_states") { gen.num_states = int_list(value, where).at(0); saw_gen = true; }
        else if (key == "num_actions") { gen.num_actions = int_list(value, where).at(0); saw_gen = true; }
        else if (key == "feature_dim") { gen.feature_dim = int_list(value, where).at(0); saw_gen = true; }
        else if (key == "transition_concentration") { gen.transition_concentration = real_list(value, where).at(0); saw_gen = true; }
        else if (key == "reward_distribution") {
            if (value != "uniform") throw InvalidInputError(where + ": only 'uniform' is supported");
            saw_gen = true;
        }
        else if (key == "feature_distribution") {
            if (value == "normal") gen.feature_distribution = FeatureDistribution::normal;
            else if (value == "identity") gen.feature_distribution = FeatureDistribution::identity;
            else throw InvalidInputError(where + ": expected 'normal' or 'identity'");
            saw_gen = true;
        }
        else if (key == "gen_seed") { gen.seed = u64_value(value, where); saw_gen = true; }
        else if (key == "discount") { gen.discount = real_list(value, where).at(0); saw_gen = true; }
        else if (key == "variant") spec.variant = variant_from_name(value);
        else if (key == "H") spec.lookahead_depths = int_list(value, where);
        else if (key == "m") spec.rollout_depths = int_list(value, where);
        else if (key == "eta") spec.gd_steps = int_list(value, where);
        else if (key == "gamma") spec.gd_stepsizes = real_list(value, where);
        else if (key == "eps_la") spec.eps_las = real_list(value, where);
        else if (key == "eps_pe") spec.eps_pes = real_list(value, where);
        else if (key == "sample_mode") {
            if (value == "all") spec.sample_mode = SelectionMode::all;
            else if (value == "fixed") spec.sample_mode = SelectionMode::fixed;
            else if (value == "resample") spec.sample_mode = SelectionMode::resample_per_iteration;
            else throw InvalidInputError(where + ": expected all, fixed, or resample");
        }
        else if (key == "sample_indices") spec.sample_indices = int_list(value, where);
        else if (key == "sample_size") spec.sample_sizes = int_list(value, where);
        else if (key == "theta0") {
            if (value != "zeros") spec.theta0 = real_list(value, where);
        }
        else if (key == "num_iterations") spec.num_iterations = int_list(value, where).at(0);
        else if (key == "seed") { spec.seed = u64_value(value, where); saw_seed = true; }
        else if (key == "divergence_threshold") spec.divergence_threshold = real_list(value, where).at(0);
        else if (key == "delta_app_cap") spec.delta_app_cap = int_list(value, where).at(0);
        else if (key == "finite_time_max") {
            if (value == "alpha_pow_h") spec.max_form = FiniteTimeMaxForm::alpha_pow_h;
            else if (value == "alpha_pow_h_minus_1") spec.max_form = FiniteTimeMaxForm::alpha_pow_h_minus_1;
            else throw InvalidInputError(where + ": expected alpha_pow_h or alpha_pow_h_minus_1");
        }
        else if (key == "output_dir") spec.output_dir = value;
        else throw InvalidInputError(where + ": unknown key");
    }

    if (!saw_seed) throw InvalidInputError(origin + ": seeds must be explicit; 'seed' is required");
    if (saw_gen) spec.generator = gen;
    spec.validate();
    return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open spec file '" + path + "'");
    return parse_experiment_text(in, path);
}

std::pair<Mdp, FeatureSystem> resolve_problem(const ExperimentSpec& spec) {
    if (spec.generator) {
        GeneratedProblem gp = generate_random_mdp(*spec.generator);
        return {std::move(gp.mdp), std::move(gp.features)};
    }
    Mdp mdp = load_mdp_file(spec.mdp_file);
    FeatureSystem fs = load_features_file(spec.features_file);
    if (fs.num_states() != mdp.num_states)
        throw InvalidInputError("feature file row count does not match the MDP state count");
    return {std::move(mdp), std::move(fs)};
}

std::vector<RunConfig> expand_grid(const ExperimentSpec& spec, const FeatureSystem& fs) {
    spec.validate();
    std::vector<int> etas = spec.gd_steps.empty() ? std::vector<int>{0} : spec.gd_steps;
    std::vector<double> gammas = spec.gd_stepsizes.empty() ? std::vector<double>{0.0} : spec.gd_stepsizes;
    std::vector<int> sizes = spec.sample_sizes.empty() ? std::vector<int>{0} : spec.sample_sizes;

    Eigen::VectorXd theta0;
    if (spec.theta0.empty()) {
        theta0 = Eigen::VectorXd::Zero(fs.dim());
    } else {
        if (static_cast<int>(spec.theta0.size()) != fs.dim())
            throw InvalidInputError("spec: theta0 has " + std::to_string(spec.theta0.size()) +
                                    " entries, expected " + std::to_string(fs.dim()));
        theta0 = Eigen::Map<const Eigen::VectorXd>(spec.theta0.data(),
                                                   static_cast<Eigen::Index>(spec.theta0.size()));
    }

    std::vector<RunConfig> cells;
    for (int H : spec.lookahead_depths)
        for (int m : spec.rollout_depths)
            for (int eta : etas)
                for (double gamma : gammas)
                    for (double eps_la : spec.eps_las)
                        for (double eps_pe : spec.eps_pes)
                            for (int size : sizes) {
                                RunConfig cfg;
                                cfg.variant = spec.variant;
                                cfg.lookahead_depth = H;
                                cfg.rollout_depth = m;
                                cfg.gd_steps = eta;
                                cfg.gd_stepsize = gamma;
                                cfg.eps_la = eps_la;
                                cfg.eps_pe = eps_pe;
                                cfg.theta0 = theta0;
                                cfg.num_iterations = spec.num_iterations;
                                cfg.seed = cell_seed(spec.seed, cells.size());
                                cfg.divergence_threshold = spec.divergence_threshold;
                                cfg.samples.mode = spec.sample_mode;
                                cfg.samples.size = size;
                                cfg.samples.indices = spec.sample_indices;
                                cfg.delta_app_cap = spec.delta_app_cap;
                                cfg.max_form = spec.max_form;
                                cells.push_back(std::move(cfg));
                            }
    return cells;
}

namespace {

std::string cell_tag(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cell_%03zu", index);
    return buf;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j{{"variant", variant_name(cfg.variant)},
                     {"H", cfg.lookahead_depth},
                     {"m", cfg.rollout_depth},
                     {"eps_la", cfg.eps_la},
                     {"eps_pe", cfg.eps_pe},
                     {"num_iterations", cfg.num_iterations},
                     {"seed", cfg.seed},
                     {"divergence_threshold", cfg.divergence_threshold}};
    if (cfg.variant == Variant::gradient_descent) {
        j["eta"] = cfg.gd_steps;
        j["gamma"] = cfg.gd_stepsize;
    }
    switch (cfg.samples.mode) {
        case SelectionMode::all: j["sample_mode"] = "all"; break;
        case SelectionMode::fixed:
            j["sample_mode"] = "fixed";
            j["sample_indices"] = cfg.samples.indices;
            break;
        case SelectionMode::resample_per_iteration:
            j["sample_mode"] = "resample";
            j["sample_size"] = cfg.samples.size;
            break;
    }
    return j;
}

}  // namespace

nlohmann::json ExperimentManifest::to_json() const {
    nlohmann::json cells_json = nlohmann::json::array();
    for (const CellOutcome& c : cells) {
        nlohmann::json j{{"index", c.index},
                         {"params", config_to_json(c.config)},
                         {"status", c.status}};
        if (c.status == "error") {
            j["error"] = c.error_message;
        } else {
            j["assumptions"] = c.assumptions_verdict;
            j["bound_validity"] = c.bound_verdict;
            j["trace_csv"] = c.trace_csv;
            j["audit_json"] = c.audit_json;
            if (c.status == "diverged") j["diverged_at"] = c.diverged_at;
        }
        cells_json.push_back(std::move(j));
    }
    // paths inside are relative, so the manifest is byte-identical wherever it lands
    return nlohmann::json{{"spec_seed", spec_seed},
                          {"num_cells", cells.size()},
                          {"cells", std::move(cells_json)}};
}

ExperimentManifest run_experiment(const ExperimentSpec& spec, const std::string& output_dir_override,
                                  int jobs) {
    if (jobs < 1) throw InvalidInputError("run_experiment: jobs must be >= 1");
    auto [mdp, fs] = resolve_problem(spec);
    std::vector<RunConfig> cells = expand_grid(spec, fs);

    ExperimentManifest manifest;
    manifest.output_dir = output_dir_override.empty() ? spec.output_dir : output_dir_override;
    manifest.spec_seed = spec.seed;
    manifest.cells.resize(cells.size());

    std::filesystem::create_directories(manifest.output_dir);

    auto execute_cell = [&](std::size_t i) {
        CellOutcome& out = manifest.cells[i];
        out.index = i;
        out.config = cells[i];
        const std::string tag = cell_tag(i);
        try {
            IterationTrace trace;
            switch (cells[i].variant) {
                case Variant::least_squares: trace = run_ls_api(mdp, fs, cells[i]); break;
                case Variant::gradient_descent: trace = run_gd_api(mdp, fs, cells[i]); break;
                case Variant::modified_ls: trace = run_modified_ls_api(mdp, fs, cells[i]); break;
            }
            RunAudit audit = audit_run(mdp, fs, cells[i], trace);
            out.status = trace.status == RunStatus::completed ? "completed" : "diverged";
            out.diverged_at = trace.diverged_at;
            out.assumptions_verdict = audit.assumptions.all_pass() ? "pass" : "fail";
            out.bound_verdict = audit.bound_verdict;
            out.trace_csv = tag + "_trace.csv";
            out.audit_json = tag + "_audit.json";
            write_text_file(manifest.output_dir + "/" + out.trace_csv,
                            trace_to_csv(trace, audit.curve));
            write_text_file(manifest.output_dir + "/" + out.audit_json,
                            audit_to_json(audit, trace).dump(2) + "\n");
        } catch (const std::exception& e) {
            out.status = "error";
            out.error_message = e.what();
        }
    };

    if (jobs == 1 || cells.size() <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) execute_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                execute_cell(i);
            }
        };
        std::vector<std::thread> pool;
        int n = std::min<int>(jobs, static_cast<int>(cells.size()));
        pool.reserve(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    write_text_file(manifest.output_dir + "/manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

}  // namespace adp
