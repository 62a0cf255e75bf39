#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdsim/types.hpp"

namespace sdsim {

struct ClusterConfig {
  int node_count = 1;
  int sockets_per_node = 2;
  int cores_per_socket = 24;
  /// Maximum number of jobs sharing one node.
  int max_residents = 2;

  int cores_per_node() const { return sockets_per_node * cores_per_socket; }
  int total_cores() const { return node_count * cores_per_node(); }
  void validate() const;

  friend bool operator==(const ClusterConfig&, const ClusterConfig&) = default;
};

class AllocationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when bookkeeping no longer matches what the caller expects.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A contiguous run of cores on one node owned by one job.
struct CoreRange {
  JobId job = 0;
  int first = 0;
  int count = 0;
};

struct Allocation {
  JobId job = 0;
  std::vector<std::pair<NodeId, int>> placement;
};

/// Per-core ownership for the whole machine. Cores are indexed socket-major
/// inside a node, so core `c` lives on socket `c / cores_per_socket`.
class ClusterState {
 public:
  explicit ClusterState(const ClusterConfig& config);

  const ClusterConfig& config() const { return config_; }

  /// Takes the lowest-indexed unowned cores on each named node.
  Allocation allocate(JobId job, std::span<const std::pair<NodeId, int>> placement);

  /// Releases every core of `job`; returns how many were freed.
  int release(JobId job);

  /// Replaces the ownership of a whole node with `layout`. Jobs previously
  /// on the node but absent from `layout` lose their cores there.
  void set_node_layout(NodeId node, std::span<const CoreRange> layout);

  std::vector<NodeId> free_nodes() const;
  int free_node_count() const { return free_count_; }
  bool is_free(NodeId node) const { return residents_.at(node).empty(); }

  std::optional<JobId> owner(NodeId node, int core) const;
  int cores_owned(JobId job, NodeId node) const;
  int unowned_cores(NodeId node) const;
  const std::vector<JobId>& residents(NodeId node) const { return residents_.at(node); }
  /// Nodes on which `job` owns cores, ascending. Empty for unknown jobs.
  std::vector<NodeId> nodes_of(JobId job) const;
  bool has_job(JobId job) const { return job_nodes_.contains(job); }

  /// Cross-checks the redundant indexes; returns one message per problem.
  std::vector<std::string> check_invariants() const;

  friend bool operator==(const ClusterState&, const ClusterState&) = default;

 private:
  static constexpr JobId kNoOwner = 0;

  JobId& core(NodeId node, int c) { return owners_[static_cast<std::size_t>(node) * cpn_ + c]; }
  JobId core(NodeId node, int c) const { return owners_[static_cast<std::size_t>(node) * cpn_ + c]; }
  void check_node(NodeId node) const;
  void refresh_residents(NodeId node);

  ClusterConfig config_;
  int cpn_;
  std::vector<JobId> owners_;
  std::vector<std::vector<JobId>> residents_;
  std::map<JobId, std::vector<NodeId>> job_nodes_;
  int free_count_;
};

}  // namespace sdsim
