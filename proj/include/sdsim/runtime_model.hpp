#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sdsim/types.hpp"
#include "sdsim/workload.hpp"

namespace sdsim {

/// How a job's progress responds to the cores it holds on each node.
///  - ideal: proportional to the total cores held (load rebalances freely);
///  - worst_case: limited by the least provisioned node.
enum class ModelKind { ideal, worst_case };

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stretch of time during which a job held a fixed core count per node.
/// `cores` is indexed like the job's node list.
struct ConfigSlot {
  Seconds duration = 0;
  std::vector<int> cores;

  friend bool operator==(const ConfigSlot&, const ConfigSlot&) = default;
};

/// Progress bookkeeping of one running job.
///
/// Work is counted in core-seconds at full allocation: a job of `n` nodes
/// whose static run takes `r` seconds carries `r * n * cores_per_node`
/// units. Under the ideal model a configuration retires `sum(cores)` units
/// per second; under the worst case `min(cores) * n`. Both equal the full
/// allocation rate when nothing is shrunk, and integer units keep every
/// completion time exact.
struct ExecutionState {
  JobId job = 0;
  Seconds start_time = 0;
  int cores_per_node = 1;
  std::vector<NodeId> nodes;
  std::vector<int> cores;
  std::int64_t total_units = 0;
  std::int64_t done_units = 0;
  Seconds config_since = 0;
  Seconds last_update = 0;
  /// Closed configuration slots, oldest first. The open slot runs from
  /// `config_since` with `cores`.
  std::vector<ConfigSlot> history;

  int req_cpus() const { return static_cast<int>(nodes.size()) * cores_per_node; }
  double work_done() const;
  bool finished() const { return done_units >= total_units; }
  int cores_on(NodeId node) const;
};

ExecutionState start_execution(const Job& job, Seconds now, int cores_per_node, std::vector<NodeId> nodes,
                               std::vector<int> cores);

/// Work units retired per second by a configuration.
std::int64_t unit_rate(std::span<const int> cores, int cores_per_node, ModelKind model);

/// Fraction of the full-allocation speed, in (0, 1].
double progress_rate(const ExecutionState& exec, ModelKind model);

/// Adds `dt` seconds of progress at the current configuration; returns the
/// new normalized work done. Does not move `last_update`.
double advance(ExecutionState& exec, Seconds dt, ModelKind model);

/// Brings the work counter up to `now`.
void advance_to(ExecutionState& exec, Seconds now, ModelKind model);

/// Closes the current slot at `now` and switches to `cores`. The caller is
/// expected to have advanced the job to `now` first.
void reconfigure(ExecutionState& exec, Seconds now, std::vector<int> cores);

/// Seconds until completion at the current configuration, rounded up.
Seconds remaining_time(const ExecutionState& exec, ModelKind model);

/// Elapsed slots from start to `now`, including the open one.
std::vector<ConfigSlot> elapsed_timeline(const ExecutionState& exec, Seconds now);

/// Walks a job's requested work through configuration slots one at a time.
/// Lets a shared prefix of a timeline be walked once and extended many times.
class TimelineWalk {
 public:
  TimelineWalk(const Job& job, int cores_per_node);
  void run(const ConfigSlot& slot, ModelKind model);
  /// Extra wall time over the requested time, with whatever is left after
  /// the slots seen so far run at full rate.
  Seconds increase() const;

 private:
  Seconds requested_;
  int nodes_;
  int cores_per_node_;
  std::int64_t full_;
  std::int64_t left_;
  Seconds elapsed_ = 0;
  bool done_ = false;
};

/// Extra wall time needed to get through `requested_time` seconds of
/// full-rate work when run through `timeline`; anything left after the last
/// slot runs at full rate. Rounded up to whole seconds, never negative.
Seconds predict_increase(const Job& job, int cores_per_node, std::span<const ConfigSlot> timeline,
                         ModelKind model);

}  // namespace sdsim
