#pragma once

#include <iosfwd>
#include <string>

#include "adp/algorithms.hpp"
#include "adp/bounds.hpp"
#include "adp/linear_fa.hpp"
#include "adp/mdp.hpp"

namespace adp {

/// MDP text format. `#` starts a comment; keys may appear in any order but
/// num_states/num_actions must precede the tables they size:
///   num_states = 2
///   num_actions = 2
///   discount = 0.9
///   reward_range = unit            # optional: unit (default) or free
///   reward = <|S|*|A| reals, row-major by state then action>
///   transition = <|S|*|A|*|S| reals, row-major by state, action, next state>
/// Probability rows are validated (sum 1 within 1e-12, no negatives), never
/// silently fixed.
Mdp parse_mdp_text(std::istream& in, const std::string& origin = "<stream>");
Mdp load_mdp_file(const std::string& path);
std::string format_mdp_text(const Mdp& mdp);

/// Feature text format: `d = <dim>` followed by |S| rows of d reals.
FeatureSystem parse_features_text(std::istream& in, const std::string& origin = "<stream>");
FeatureSystem load_features_file(const std::string& path);
std::string format_features_text(const FeatureSystem& fs);

/// Trace CSV with the fixed column order
///   k, theta_0..theta_{d-1}, err_policy, err_iterate, delta_k,
///   bound_total_k, lookahead_gap, rollout_noise_norm, status
/// Values are printed with round-trip precision so identical runs produce
/// byte-identical files. bound_total_k is nan when the bound precondition is
/// violated. The status column is "ok" on intermediate rows and the terminal
/// status ("completed" or "diverged") on the last row.
std::string trace_to_csv(const IterationTrace& trace, const BoundCurve& curve);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

}  // namespace adp
