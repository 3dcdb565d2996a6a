#pragma once

#include <string>
#include <vector>

#include "spibb/errors.hpp"
#include "spibb/experiment.hpp"
#include "spibb/model.hpp"

namespace spibb {

/// File formats. JSON for structured objects, CSV for row streams; floats are
/// written with enough digits for exact round-trips. All save_* functions
/// write atomically (temp file in the target directory, then rename).
/// Loaders throw std::invalid_argument with a line/field diagnostic on
/// malformed input.

Mdp load_mdp(const std::string& path);
void save_mdp(const Mdp& mdp, const std::string& path);

/// Policies are accepted when every row sums to 1 within 1e-9; small
/// deviations are renormalized with a warning on stderr.
PolicyTable load_policy(const std::string& path);
void save_policy(const PolicyTable& policy, const std::string& path);

QTable load_q_table(const std::string& path);
void save_q_table(const QTable& table, const std::string& path);

/// Error tables share the QTable layout plus a "kind" tag; the +inf sentinel
/// is serialized as the string "inf".
ErrorTable load_error_table(const std::string& path);
void save_error_table(const ErrorTable& table, const std::string& path);

/// CSV with header trajectory,step,state,action,reward,next_state. The
/// state/action space sizes are inferred as max index + 1 unless overridden.
Dataset load_dataset(const std::string& path, int n_states = 0, int n_actions = 0);
void save_dataset(const Dataset& dataset, const std::string& path);

/// CSV with header seed,eta,n_trajectories,algorithm,hyperparameter,
/// raw_perf,normalized_perf.
std::vector<RunRecord> load_run_records(const std::string& path);
void save_run_records(const std::vector<RunRecord>& records, const std::string& path);

/// CSV with header eta,n_trajectories,algorithm,hyperparameter,mean,
/// cvar_<level>...,n_runs (default levels 10, 1, 0.1 give cvar_10, cvar_1,
/// cvar_0_1).
std::string format_aggregate_csv(const std::vector<AggregateRow>& rows,
                                 const std::vector<double>& levels);
void save_aggregate(const std::vector<AggregateRow>& rows, const std::vector<double>& levels,
                    const std::string& path);

/// Writes `content` to `path` atomically.
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace spibb
