#pragma once

#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sdsim/runtime_model.hpp"
#include "sdsim/types.hpp"
#include "sdsim/workload.hpp"

namespace sdsim {

/// A running job that could be shrunk to host a new one.
struct MateCandidate {
  JobId job = 0;
  /// Nodes held by the mate; its weight in the node-count constraint.
  std::vector<NodeId> nodes;
  double penalty = 1.0;
  Seconds predicted_end = 0;
  /// Mate's cores per node once shrunk, aligned with `nodes`.
  std::vector<int> mate_cores;
  /// Cores the new job would get on each of `nodes`.
  std::vector<int> newcomer_cores;
  /// Mate's predicted end once shrunk for the new job's window.
  Seconds shrunk_end = 0;

  int weight() const { return static_cast<int>(nodes.size()); }
};

struct MateSolution {
  /// Selected mates, ascending by job id.
  std::vector<MateCandidate> mates;
  double performance_impact = 0.0;
  std::vector<NodeId> free_nodes_used;

  std::vector<JobId> mate_ids() const;
  /// Every node the new job would run on, ascending.
  std::vector<NodeId> nodes() const;
};

/// The cut-off P on mate penalties: either a fixed value or the mean
/// estimated slowdown of the running jobs.
class CutoffPolicy {
 public:
  static CutoffPolicy fixed(double value);
  static CutoffPolicy dynamic();

  bool is_dynamic() const { return dynamic_; }
  double value() const { return value_; }

 private:
  CutoffPolicy(bool dynamic, double value) : dynamic_(dynamic), value_(value) {}
  bool dynamic_;
  double value_;
};

/// What the cut-off needs to know about a running job.
struct RunningEstimate {
  Seconds wait_time = 0;
  Seconds requested_time = 1;
};

/// Current P. Dynamic: mean of (wait + requested) / requested over running
/// jobs, +infinity when nothing runs.
double update_cutoff(const CutoffPolicy& policy, std::span<const RunningEstimate> running);

/// Slowdown estimate (wait + increase + requested) / requested.
double slowdown_penalty(Seconds wait_time, Seconds increase, Seconds requested_time);

struct PenaltyEstimate {
  double penalty = 1.0;
  /// Predicted runtime growth of the mate, from its start.
  Seconds increase = 0;
};

/// Penalty of shrinking a running mate to `shrunk_cores` for `window`
/// seconds from `now`, under the worst-case model and using the mate's
/// requested time as its work estimate.
PenaltyEstimate penalty(const Job& mate, const ExecutionState& exec, std::span<const int> shrunk_cores,
                        Seconds window, Seconds now);

/// The same, starting from the mate's progress already walked up to now.
PenaltyEstimate penalty(const Job& mate, const ExecutionState& exec, TimelineWalk so_far,
                        std::span<const int> shrunk_cores, Seconds window);

/// Worst-case walk of a running job's history up to `now`.
TimelineWalk elapsed_walk(const Job& job, const ExecutionState& exec, Seconds now);

struct SelectionParams {
  double max_penalty = std::numeric_limits<double>::infinity();
  int max_mates = 2;
  int candidate_cap = 64;
  bool use_free_nodes = false;
};

/// Minimum-Performance-Impact mate set whose node counts sum to
/// `required_nodes` (topped up with free nodes when allowed). Candidates
/// with penalty >= P or whose predicted end precedes `new_job_end` are
/// dropped, the rest sorted by penalty and cut to `candidate_cap`, and
/// every combination of up to `max_mates` is tried. Ties go to the
/// lexicographically smallest sorted id tuple.
std::optional<MateSolution> select_mates(int required_nodes, Seconds new_job_end,
                                         std::span<const MateCandidate> candidates,
                                         std::span<const NodeId> free_nodes, const SelectionParams& params);

/// Exhaustive subset search with the same constraints and tie-breaking but
/// no candidate cap. For testing; exponential in the candidate count.
std::optional<MateSolution> brute_force_select(int required_nodes, Seconds new_job_end,
                                               std::span<const MateCandidate> candidates,
                                               std::span<const NodeId> free_nodes, const SelectionParams& params);

}  // namespace sdsim
