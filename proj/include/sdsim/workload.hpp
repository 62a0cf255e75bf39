#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdsim/cluster.hpp"
#include "sdsim/types.hpp"

namespace sdsim {

/// One workload entry.
///
/// `requested_time` is the user estimate and the only duration the scheduler
/// sees; `base_runtime` is how long the job actually runs on its full static
/// allocation. Either may exceed the other.
struct Job {
  JobId id = 0;
  Seconds submit_time = 0;
  Seconds requested_time = 1;
  Seconds base_runtime = 1;
  int requested_nodes = 1;
  int ranks_per_node = 1;
  bool malleable = false;
  std::int64_t priority = 0;

  friend bool operator==(const Job&, const Job&) = default;
};

enum class WorkloadSource { swf, synthetic };

struct WorkloadMeta {
  std::size_t job_count = 0;
  int system_nodes = 0;
  int system_cores = 0;
  WorkloadSource source = WorkloadSource::swf;
  /// Records filtered out during parsing (non-positive run time or size).
  std::size_t dropped = 0;
};

struct Workload {
  std::vector<Job> jobs;
  WorkloadMeta meta;
};

/// Raised for malformed traces and invalid generator parameters.
class WorkloadError : public std::runtime_error {
 public:
  explicit WorkloadError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct SwfOptions {
  double malleable_fraction = 1.0;
  std::uint64_t seed = 0;
  int ranks_per_node = 1;
};

/// Reads an SWF v2 trace.
///
/// Requested nodes come from the requested processor count (field 8), or
/// the allocated count (field 5) when no request was recorded, rounded up
/// to whole nodes. The requested time falls back to the run time when the
/// trace has none. Records with a non-positive run time or processor count
/// are dropped. Jobs larger than the cluster are rejected.
Workload parse_swf(std::istream& in, const ClusterConfig& cluster, const SwfOptions& options);

struct SynthParams {
  std::size_t job_count = 1000;
  int min_nodes = 1;
  int max_nodes = 128;
  Seconds min_runtime = 60;
  Seconds max_runtime = 36000;
  double min_inflation = 1.0;
  double max_inflation = 4.0;
  double interarrival_mean = 600.0;
  double malleable_fraction = 1.0;
  int ranks_per_node = 1;
};

/// Poisson arrivals, log-uniform node counts, uniform runtimes, and user
/// estimates inflated by a uniform factor. Deterministic for a given seed.
Workload gen_synthetic(const SynthParams& params, const ClusterConfig& cluster, std::uint64_t seed);

/// Marks each job malleable with probability `fraction`, drawing once per
/// job in list order from a stream derived from `seed`. Both the SWF parser
/// and the generator use this, so a generated trace written out and parsed
/// back with the same seed gets the same flags.
void assign_malleability(std::vector<Job>& jobs, double fraction, std::uint64_t seed);

/// Checks the per-job invariants against a cluster; throws WorkloadError.
void validate_job(const Job& job, const ClusterConfig& cluster);

}  // namespace sdsim
