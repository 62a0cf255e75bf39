#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdsim/cluster.hpp"
#include "sdsim/event_log.hpp"
#include "sdsim/nodemgr.hpp"
#include "sdsim/runtime_model.hpp"
#include "sdsim/selection.hpp"
#include "sdsim/workload.hpp"

namespace sdsim {

struct RunningJob {
  Job job;
  ExecutionState exec;
  /// Worst-case end predicted from the requested time and the current
  /// configuration. Lies in the past for jobs overrunning their estimate.
  Seconds predicted_end = 0;
  bool started_malleably = false;

  Seconds wait_time() const { return exec.start_time - job.submit_time; }
};

/// Scheduler-side facts recorded with a malleable start.
struct MalleableStartInfo {
  Seconds static_end = 0;
  Seconds mall_end = 0;
  double cutoff = 0.0;
};

/// The machine as the scheduler and the event loop see it: core ownership,
/// node-level loans and the execution state of every running job. All
/// mutations go through here so the three stay consistent and are logged.
class SystemState {
 public:
  SystemState(const ClusterConfig& config, SharingFactor sharing, ModelKind execution_model, EventLog& log);

  Seconds now() const { return now_; }
  void set_now(Seconds now);

  const ClusterConfig& config() const { return config_; }
  const ClusterState& cluster() const { return cluster_; }
  const NodeManager& node_manager() const { return nodes_; }
  ModelKind execution_model() const { return model_; }
  const std::map<JobId, RunningJob>& running() const { return running_; }
  const RunningJob* find(JobId job) const;
  /// Bumped by every start and completion.
  std::uint64_t generation() const { return generation_; }

  /// Runs `job` alone on whole free nodes.
  void start_static(const Job& job, std::span<const NodeId> nodes);
  /// Shrinks the selected mates and runs `job` beside them (plus any free
  /// nodes in the solution).
  void start_malleable(const Job& job, const MateSolution& solution, const MalleableStartInfo& info);
  /// Finishes `job` and hands its cores back.
  void complete(JobId job);

  /// Node split if `newcomer` joined `node` now.
  std::optional<NodePlan> plan_share(NodeId node, const Job& newcomer) const;

  /// Predicted instant at which `node` has no residents; `now` for free
  /// nodes and never earlier than now + 1 for busy ones.
  Seconds node_release(NodeId node) const;

  /// Worst-case predicted end for `job` at the current time.
  Seconds predict_end(JobId job) const;

  /// Jobs whose configuration changed since the last call (their
  /// completion times must be recomputed), ascending.
  std::vector<JobId> take_reconfigured();

  /// Absolute completion time at the current configuration.
  Seconds completion_time(JobId job) const;
  /// Brings a job's work counter up to now.
  void sync(JobId job);

  std::vector<std::string> check_invariants() const;

 private:
  TraitsLookup traits(const Job* extra = nullptr) const;
  void apply_directives(const std::vector<CoreDirective>& directives);
  void refresh_predictions(const std::vector<JobId>& jobs);
  std::vector<int> cores_from_cluster(const ExecutionState& exec) const;

  ClusterConfig config_;
  ModelKind model_;
  EventLog* log_;
  ClusterState cluster_;
  NodeManager nodes_;
  std::map<JobId, RunningJob> running_;
  std::vector<JobId> reconfigured_;
  Seconds now_ = 0;
  std::uint64_t generation_ = 0;
};

}  // namespace sdsim
