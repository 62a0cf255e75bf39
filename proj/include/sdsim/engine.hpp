#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdsim/cluster.hpp"
#include "sdsim/event_log.hpp"
#include "sdsim/metrics.hpp"
#include "sdsim/nodemgr.hpp"
#include "sdsim/runtime_model.hpp"
#include "sdsim/scheduler.hpp"
#include "sdsim/workload.hpp"

namespace sdsim {

struct SimConfig {
  ClusterConfig cluster;
  SchedulerConfig scheduler;
  /// How running jobs actually progress. The scheduler always predicts
  /// with the worst case.
  ModelKind model = ModelKind::ideal;
  SharingFactor sharing{0.5};
  /// Seconds between periodic scheduler passes while jobs wait; 0 disables
  /// them, leaving only the passes that follow submissions and completions.
  Seconds backfill_interval = 30;
  /// Seed the workload was built with; carried into reports.
  std::uint64_t seed = 0;
  /// Check state invariants after every event and collect violations
  /// instead of stopping at the first one.
  bool check_invariants = false;
  MetricsOptions metrics;

  void validate() const;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunResult {
  EventLog log;
  SimReport report;
  SchedulerStats stats;
  /// "<time>: <problem>" for each invariant broken, when checking is on.
  std::vector<std::string> violations;
  std::size_t events = 0;
};

RunResult run(const Workload& workload, const SimConfig& config);

struct ReportRatios {
  double makespan = 1.0;
  double avg_response = 1.0;
  double avg_slowdown = 1.0;
  double avg_wait = 1.0;
};

/// b relative to a: every ratio is b / a.
ReportRatios ratios(const SimReport& a, const SimReport& b);

struct CompareResult {
  RunResult a;
  RunResult b;
  ReportRatios ratios;
  /// Per category a / b, treating a as the baseline.
  Heatmap heatmap;
};

/// Runs both configurations on the same workload, each on its own thread.
CompareResult replay_compare(const Workload& workload, const SimConfig& a, const SimConfig& b);

}  // namespace sdsim
