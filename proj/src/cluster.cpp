#include "sdsim/cluster.hpp"

#include <algorithm>

namespace sdsim {

void ClusterConfig::validate() const {
  if (node_count < 1) throw std::invalid_argument("node count must be positive");
  if (sockets_per_node < 1) throw std::invalid_argument("sockets per node must be positive");
  if (cores_per_socket < 1) throw std::invalid_argument("cores per socket must be positive");
  if (max_residents < 1) throw std::invalid_argument("max residents per node must be positive");
}

ClusterState::ClusterState(const ClusterConfig& config)
    : config_(config),
      cpn_(config.cores_per_node()),
      owners_(static_cast<std::size_t>(config.node_count) * config.cores_per_node(), kNoOwner),
      residents_(static_cast<std::size_t>(config.node_count)),
      free_count_(config.node_count) {
  config.validate();
}

void ClusterState::check_node(NodeId node) const {
  if (node < 0 || node >= config_.node_count) throw AllocationError("node " + std::to_string(node) + " out of range");
}

// Rebuilds the resident list of one node from core ownership and keeps the
// job->nodes index and free counter in step.
void ClusterState::refresh_residents(NodeId node) {
  std::vector<JobId>& list = residents_[node];
  const bool was_free = list.empty();
  std::vector<JobId> now;
  for (int c = 0; c < cpn_; ++c) {
    const JobId j = core(node, c);
    if (j != kNoOwner && std::find(now.begin(), now.end(), j) == now.end()) now.push_back(j);
  }
  // Keep arrival order for jobs that stay so layouts are stable.
  std::vector<JobId> ordered;
  for (JobId j : list)
    if (std::find(now.begin(), now.end(), j) != now.end()) ordered.push_back(j);
  for (JobId j : now)
    if (std::find(ordered.begin(), ordered.end(), j) == ordered.end()) ordered.push_back(j);

  for (JobId j : list) {
    if (std::find(ordered.begin(), ordered.end(), j) != ordered.end()) continue;
    auto it = job_nodes_.find(j);
    if (it == job_nodes_.end()) continue;
    std::erase(it->second, node);
    if (it->second.empty()) job_nodes_.erase(it);
  }
  for (JobId j : ordered) {
    auto& nodes = job_nodes_[j];
    auto pos = std::lower_bound(nodes.begin(), nodes.end(), node);
    if (pos == nodes.end() || *pos != node) nodes.insert(pos, node);
  }
  list = std::move(ordered);
  const bool is_free_now = list.empty();
  if (was_free && !is_free_now) --free_count_;
  if (!was_free && is_free_now) ++free_count_;
}

Allocation ClusterState::allocate(JobId job, std::span<const std::pair<NodeId, int>> placement) {
  if (job == kNoOwner) throw AllocationError("job id 0 is reserved");
  for (const auto& [node, count] : placement) {
    check_node(node);
    if (count < 1) throw AllocationError("allocation of fewer than one core");
    if (unowned_cores(node) < count)
      throw AllocationError("node " + std::to_string(node) + " has " + std::to_string(unowned_cores(node)) +
                            " free cores, job " + std::to_string(job) + " wants " + std::to_string(count));
    const auto& res = residents_[node];
    if (std::find(res.begin(), res.end(), job) == res.end() &&
        static_cast<int>(res.size()) >= config_.max_residents)
      throw AllocationError("node " + std::to_string(node) + " already hosts the maximum number of jobs");
  }
  for (const auto& [node, count] : placement) {
    int left = count;
    for (int c = 0; c < cpn_ && left > 0; ++c) {
      if (core(node, c) == kNoOwner) {
        core(node, c) = job;
        --left;
      }
    }
    refresh_residents(node);
  }
  return Allocation{job, {placement.begin(), placement.end()}};
}

int ClusterState::release(JobId job) {
  auto it = job_nodes_.find(job);
  if (it == job_nodes_.end()) throw StateError("release of unknown job " + std::to_string(job));
  const std::vector<NodeId> nodes = it->second;
  int freed = 0;
  for (NodeId node : nodes) {
    for (int c = 0; c < cpn_; ++c) {
      if (core(node, c) == job) {
        core(node, c) = kNoOwner;
        ++freed;
      }
    }
    refresh_residents(node);
  }
  return freed;
}

void ClusterState::set_node_layout(NodeId node, std::span<const CoreRange> layout) {
  check_node(node);
  if (static_cast<int>(layout.size()) > config_.max_residents)
    throw AllocationError("layout for node " + std::to_string(node) + " exceeds the resident cap");
  std::vector<JobId> fresh(static_cast<std::size_t>(cpn_), kNoOwner);
  for (const CoreRange& r : layout) {
    if (r.job == kNoOwner || r.count < 0 || r.first < 0 || r.first + r.count > cpn_)
      throw AllocationError("invalid core range on node " + std::to_string(node));
    for (int c = r.first; c < r.first + r.count; ++c) {
      if (fresh[c] != kNoOwner) throw AllocationError("overlapping core ranges on node " + std::to_string(node));
      fresh[c] = r.job;
    }
  }
  for (int c = 0; c < cpn_; ++c) core(node, c) = fresh[c];
  refresh_residents(node);
}

std::vector<NodeId> ClusterState::free_nodes() const {
  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(free_count_));
  for (NodeId n = 0; n < config_.node_count; ++n)
    if (residents_[n].empty()) out.push_back(n);
  return out;
}

std::optional<JobId> ClusterState::owner(NodeId node, int c) const {
  check_node(node);
  if (c < 0 || c >= cpn_) throw AllocationError("core index out of range");
  const JobId j = core(node, c);
  if (j == kNoOwner) return std::nullopt;
  return j;
}

int ClusterState::cores_owned(JobId job, NodeId node) const {
  check_node(node);
  int n = 0;
  for (int c = 0; c < cpn_; ++c) n += core(node, c) == job ? 1 : 0;
  return n;
}

int ClusterState::unowned_cores(NodeId node) const { return cores_owned(kNoOwner, node); }

std::vector<NodeId> ClusterState::nodes_of(JobId job) const {
  auto it = job_nodes_.find(job);
  return it == job_nodes_.end() ? std::vector<NodeId>{} : it->second;
}

std::vector<std::string> ClusterState::check_invariants() const {
  std::vector<std::string> problems;
  int free_seen = 0;
  std::map<JobId, std::vector<NodeId>> derived;
  for (NodeId n = 0; n < config_.node_count; ++n) {
    std::vector<JobId> owners;
    int owned = 0;
    for (int c = 0; c < cpn_; ++c) {
      const JobId j = core(n, c);
      if (j == kNoOwner) continue;
      ++owned;
      if (std::find(owners.begin(), owners.end(), j) == owners.end()) owners.push_back(j);
    }
    if (owned + unowned_cores(n) != cpn_) problems.push_back("core conservation broken on node " + std::to_string(n));
    if (owners.empty()) ++free_seen;
    if (static_cast<int>(owners.size()) > config_.max_residents)
      problems.push_back("node " + std::to_string(n) + " exceeds the resident cap");
    auto res = residents_[n];
    std::sort(res.begin(), res.end());
    std::sort(owners.begin(), owners.end());
    if (res != owners) problems.push_back("resident index stale on node " + std::to_string(n));
    for (JobId j : owners) derived[j].push_back(n);
  }
  if (free_seen != free_count_) problems.push_back("free node counter out of step");
  if (derived != job_nodes_) problems.push_back("job->node index out of step");
  return problems;
}

}  // namespace sdsim
