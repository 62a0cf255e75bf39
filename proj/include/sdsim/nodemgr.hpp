#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdsim/cluster.hpp"
#include "sdsim/types.hpp"

namespace sdsim {

/// Upper bound on the share of a node's cores that may be taken from one
/// resident job. Strictly between 0 and 1.
class SharingFactor {
 public:
  explicit SharingFactor(double value);
  double value() const { return value_; }
  /// Cores one resident may lend on a node of `cores_per_node` cores.
  int max_take(int cores_per_node) const;

 private:
  double value_;
};

class DistributionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Resident {
  JobId job = 0;
  int cores = 0;
  int ranks_per_node = 1;
  bool malleable = false;
};

struct Newcomer {
  JobId job = 0;
  int ranks_per_node = 1;
};

struct NodeShare {
  JobId job = 0;
  int cores = 0;
  int first_core = 0;
  std::vector<int> sockets;
};

/// Cores a resident handed to a newcomer on one node, with the lender's
/// count before the shrink so they can be given back exactly.
struct Loan {
  JobId lender = 0;
  JobId borrower = 0;
  int cores = 0;
  int lender_cores_before = 0;

  friend bool operator==(const Loan&, const Loan&) = default;
};

struct NodePlan {
  std::vector<NodeShare> shares;
  std::vector<Loan> loans;

  int cores_of(JobId job) const;
  std::vector<CoreRange> layout() const;
};

/// Splits a node among its residents and an optional newcomer.
///
/// With a newcomer, each malleable resident gives up cores toward an even
/// split, never more than the sharing factor allows in total per lender
/// (counting `loans` already outstanding) and never below one core per
/// rank. Without one, unowned cores are handed to malleable residents,
/// fewest-cores first. Residents keep their order and get contiguous core
/// ranges, so two jobs on a two-socket node land on separate sockets.
/// Returns nullopt when the newcomer cannot get one core per rank or the
/// node is at its resident cap.
std::optional<NodePlan> distribute_cpus(const ClusterConfig& config, std::span<const Resident> residents,
                                        const std::optional<Newcomer>& newcomer, SharingFactor sharing,
                                        std::span<const Loan> loans = {});

struct CoreDirective {
  enum class Kind { place, shrink, expand };
  Kind kind = Kind::place;
  JobId job = 0;
  NodeId node = 0;
  int from = 0;
  int to = 0;
  /// Job whose arrival or departure triggered the change.
  JobId cause = 0;
};

struct JobTraits {
  int ranks_per_node = 1;
  bool malleable = false;
};
using TraitsLookup = std::function<JobTraits(JobId)>;

/// Per-node shrink/expand state machine. Owns the loan records; the
/// cluster holds the resulting core ownership.
class NodeManager {
 public:
  NodeManager(const ClusterConfig& config, SharingFactor sharing);

  SharingFactor sharing() const { return sharing_; }

  std::optional<NodePlan> plan_start(const ClusterState& cluster, NodeId node, const Newcomer& newcomer,
                                     const TraitsLookup& traits) const;

  /// Shrinks the node's residents and places the newcomer. Throws
  /// DistributionError when no feasible plan exists.
  std::vector<CoreDirective> on_job_start(ClusterState& cluster, NodeId node, const Newcomer& newcomer,
                                          const TraitsLookup& traits);

  /// Removes `ended` from the node. Cores it borrowed go back to their
  /// lenders; cores it owned go to whoever remains.
  std::vector<CoreDirective> on_job_end(ClusterState& cluster, NodeId node, JobId ended,
                                        const TraitsLookup& traits);

  std::span<const Loan> loans(NodeId node) const { return loans_.at(node); }
  /// Lenders not restored to their pre-shrink count when a borrower left.
  const std::vector<std::string>& restoration_failures() const { return restoration_failures_; }

 private:
  std::vector<Resident> residents_of(const ClusterState& cluster, NodeId node, const TraitsLookup& traits,
                                     JobId skip = 0) const;

  ClusterConfig config_;
  SharingFactor sharing_;
  std::vector<std::vector<Loan>> loans_;
  std::vector<std::string> restoration_failures_;
};

}  // namespace sdsim
