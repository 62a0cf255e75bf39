#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sdsim/selection.hpp"
#include "sdsim/system.hpp"
#include "sdsim/types.hpp"
#include "sdsim/workload.hpp"

namespace sdsim {

/// Free-node count over future time, as a step function starting at `now`.
/// Built from the predicted release of every busy node and reduced by each
/// reservation placed on it.
class AvailabilityProfile {
 public:
  AvailabilityProfile(Seconds now, int total_nodes, std::span<const Seconds> busy_release_times);
  static AvailabilityProfile of(const SystemState& state);

  Seconds now() const { return times_.front(); }
  int available_at(Seconds t) const;
  /// Earliest start at or after now with `nodes` free for `duration`.
  Seconds earliest_start(int nodes, Seconds duration) const;
  bool fits(int nodes, Seconds start, Seconds duration) const;
  void reserve(int nodes, Seconds start, Seconds duration);

  struct Claim {
    int nodes = 0;
    Seconds from = 0;
    Seconds to = 0;
  };
  /// Applies all claims if none drives availability negative; otherwise
  /// leaves the profile untouched and returns false.
  bool try_claim(std::span<const Claim> claims);

 private:
  std::size_t breakpoint(Seconds t);

  int total_;
  std::vector<Seconds> times_;
  std::vector<int> free_;
};

enum class Policy { static_backfill, sd };
enum class ReservationDepth { conservative, easy };

struct SchedulerConfig {
  Policy policy = Policy::sd;
  ReservationDepth depth = ReservationDepth::conservative;
  CutoffPolicy cutoff = CutoffPolicy::dynamic();
  /// max_penalty is overwritten with the current cut-off on every attempt.
  SelectionParams selection;
};

struct Reservation {
  JobId job = 0;
  Seconds start = 0;
  int nodes = 0;
};

struct QueueState {
  /// Waiting jobs in priority order.
  std::vector<Job> pending;
  /// Reservations from the latest pass.
  std::vector<Reservation> reservations;
};

struct SchedulingDecision {
  enum class Kind { static_start, malleable_start, reserve, skip };
  Kind kind = Kind::skip;
  JobId job = 0;
  Seconds start = 0;
  std::vector<NodeId> nodes;
  std::optional<MateSolution> mates;
  Seconds static_end = 0;
  Seconds mall_end = 0;
};

struct SchedulerStats {
  std::size_t passes = 0;
  std::size_t static_starts = 0;
  std::size_t malleable_starts = 0;
  /// Malleable attempts stopped by each check, in order of application.
  std::size_t gate_rejections = 0;
  std::size_t no_solution = 0;
  std::size_t recheck_rejections = 0;
  std::size_t safety_rejections = 0;
};

/// Priority-ordered backfill. Each job first tries a static start on free
/// nodes; under the sd policy a malleable job that cannot start is then
/// compared against its static alternative and started beside shrunk mates
/// when that is predicted to finish sooner. No start may push back a
/// reservation made earlier in the same pass.
class Scheduler {
 public:
  explicit Scheduler(SchedulerConfig config);

  const SchedulerConfig& config() const { return config_; }
  void submit(const Job& job);
  const QueueState& queue() const { return queue_; }
  bool idle() const { return queue_.pending.empty(); }
  const SchedulerStats& stats() const { return stats_; }

  /// Predicted wait of `job` if it were scheduled statically behind the
  /// jobs ahead of it in the queue.
  Seconds estimate_wait_time(const Job& job, const SystemState& state) const;

  /// One job's turn in a pass. Starts are applied to `state` and
  /// `profile` immediately. `may_reserve` is false for jobs that EASY
  /// backfill leaves unreserved.
  SchedulingDecision schedule(const Job& job, SystemState& state, AvailabilityProfile& profile, bool may_reserve);

  /// Visits every waiting job in priority order.
  std::vector<SchedulingDecision> backfill_pass(SystemState& state);

 private:
  struct MateBase {
    const RunningJob* running = nullptr;
    std::vector<int> mate_cores;
    std::vector<int> newcomer_cores;
    /// Progress walked up to `walked_at`; refreshed when the clock moves.
    std::optional<TimelineWalk> walk;
    Seconds walked_at = -1;
    /// Windows known to keep the penalty under the cut-off (up to and
    /// including `under_up_to`) or not (from `over_from`), at `walked_at`.
    Seconds under_up_to = -1;
    Seconds over_from = kForever;
  };

  bool try_malleable(const Job& job, Seconds earliest, SystemState& state, AvailabilityProfile& profile,
                     SchedulingDecision& out);
  std::vector<MateBase>& mate_bases(const SystemState& state, const Job& newcomer);
  double current_cutoff(const SystemState& state);
  static bool within_cutoff(MateBase& base, Seconds now, double cutoff, Seconds window);
  /// Drops cached mate data if the machine changed since it was built.
  void refresh_cache(const SystemState& state);

  SchedulerConfig config_;
  QueueState queue_;
  SchedulerStats stats_;
  std::map<int, std::vector<MateBase>> bases_;  // by newcomer ranks per node
  std::optional<double> cutoff_;
  std::optional<std::uint64_t> cached_generation_;
  std::map<int, int> probe_share_;  // newcomer cores beside one full mate, by ranks per node
};

}  // namespace sdsim
