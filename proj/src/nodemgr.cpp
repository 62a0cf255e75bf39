#include "sdsim/nodemgr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdsim {

SharingFactor::SharingFactor(double value) : value_(value) {
  if (!(value > 0.0 && value < 1.0)) throw std::invalid_argument("sharing factor must lie strictly between 0 and 1");
}

int SharingFactor::max_take(int cores_per_node) const {
  return static_cast<int>(std::floor(value_ * cores_per_node + 1e-9));
}

int NodePlan::cores_of(JobId job) const {
  for (const auto& s : shares)
    if (s.job == job) return s.cores;
  return 0;
}

std::vector<CoreRange> NodePlan::layout() const {
  std::vector<CoreRange> out;
  for (const auto& s : shares)
    if (s.cores > 0) out.push_back(CoreRange{s.job, s.first_core, s.cores});
  return out;
}

namespace {

std::vector<NodeShare> lay_out(const ClusterConfig& config, const std::vector<std::pair<JobId, int>>& counts) {
  std::vector<NodeShare> shares;
  int next = 0;
  for (const auto& [job, n] : counts) {
    NodeShare s{job, n, next, {}};
    for (int c = next; c < next + n; ++c) {
      const int socket = c / config.cores_per_socket;
      if (s.sockets.empty() || s.sockets.back() != socket) s.sockets.push_back(socket);
    }
    next += n;
    shares.push_back(std::move(s));
  }
  return shares;
}

// Hands out `spare` cores one at a time to the malleable resident holding
// the fewest, earliest resident first on ties.
void fill_spare(std::vector<std::pair<JobId, int>>& counts, std::span<const Resident> residents, int spare,
                int cores_per_node) {
  while (spare > 0) {
    int pick = -1;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (!residents[i].malleable || counts[i].second >= cores_per_node) continue;
      if (pick < 0 || counts[i].second < counts[static_cast<std::size_t>(pick)].second) pick = static_cast<int>(i);
    }
    if (pick < 0) return;
    ++counts[static_cast<std::size_t>(pick)].second;
    --spare;
  }
}

}  // namespace

std::optional<NodePlan> distribute_cpus(const ClusterConfig& config, std::span<const Resident> residents,
                                        const std::optional<Newcomer>& newcomer, SharingFactor sharing,
                                        std::span<const Loan> loans) {
  const int cpn = config.cores_per_node();
  const int used = std::accumulate(residents.begin(), residents.end(), 0,
                                   [](int acc, const Resident& r) { return acc + r.cores; });
  if (used > cpn) throw DistributionError("residents hold more cores than the node has");

  std::vector<std::pair<JobId, int>> counts;
  for (const auto& r : residents) counts.emplace_back(r.job, r.cores);

  NodePlan plan;
  if (!newcomer) {
    fill_spare(counts, residents, cpn - used, cpn);
    plan.shares = lay_out(config, counts);
    return plan;
  }

  if (static_cast<int>(residents.size()) + 1 > config.max_residents) return std::nullopt;
  const int target = cpn / static_cast<int>(residents.size() + 1);
  int gained = cpn - used;
  for (std::size_t i = 0; i < residents.size(); ++i) {
    const Resident& r = residents[i];
    if (!r.malleable) continue;
    int lent = 0;
    for (const auto& l : loans)
      if (l.lender == r.job) lent += l.cores;
    const int take = std::max(0, std::min({sharing.max_take(cpn) - lent, r.cores - r.ranks_per_node,
                                           r.cores - target}));
    if (take == 0) continue;
    plan.loans.push_back(Loan{r.job, newcomer->job, take, r.cores});
    counts[i].second -= take;
    gained += take;
  }
  if (gained < std::max(1, newcomer->ranks_per_node)) return std::nullopt;
  counts.emplace_back(newcomer->job, gained);
  plan.shares = lay_out(config, counts);
  return plan;
}

NodeManager::NodeManager(const ClusterConfig& config, SharingFactor sharing)
    : config_(config), sharing_(sharing), loans_(static_cast<std::size_t>(config.node_count)) {}

std::vector<Resident> NodeManager::residents_of(const ClusterState& cluster, NodeId node,
                                                const TraitsLookup& traits, JobId skip) const {
  std::vector<Resident> out;
  for (JobId j : cluster.residents(node)) {
    if (j == skip) continue;
    const JobTraits t = traits(j);
    out.push_back(Resident{j, cluster.cores_owned(j, node), t.ranks_per_node, t.malleable});
  }
  return out;
}

std::optional<NodePlan> NodeManager::plan_start(const ClusterState& cluster, NodeId node, const Newcomer& newcomer,
                                                const TraitsLookup& traits) const {
  const auto residents = residents_of(cluster, node, traits);
  return distribute_cpus(config_, residents, newcomer, sharing_, loans_.at(node));
}

std::vector<CoreDirective> NodeManager::on_job_start(ClusterState& cluster, NodeId node, const Newcomer& newcomer,
                                                     const TraitsLookup& traits) {
  const auto residents = residents_of(cluster, node, traits);
  auto plan = distribute_cpus(config_, residents, newcomer, sharing_, loans_.at(node));
  if (!plan)
    throw DistributionError("job " + std::to_string(newcomer.job) + " does not fit on node " + std::to_string(node));

  std::vector<CoreDirective> out;
  for (const auto& r : residents) {
    const int now = plan->cores_of(r.job);
    if (now != r.cores) out.push_back({CoreDirective::Kind::shrink, r.job, node, r.cores, now, newcomer.job});
  }
  out.push_back({CoreDirective::Kind::place, newcomer.job, node, 0, plan->cores_of(newcomer.job), newcomer.job});

  const auto layout = plan->layout();
  cluster.set_node_layout(node, layout);
  auto& node_loans = loans_.at(node);
  node_loans.insert(node_loans.end(), plan->loans.begin(), plan->loans.end());
  return out;
}

std::vector<CoreDirective> NodeManager::on_job_end(ClusterState& cluster, NodeId node, JobId ended,
                                                   const TraitsLookup& traits) {
  const auto& current = cluster.residents(node);
  if (std::find(current.begin(), current.end(), ended) == current.end())
    throw StateError("job " + std::to_string(ended) + " is not resident on node " + std::to_string(node));

  auto residents = residents_of(cluster, node, traits, ended);
  auto& node_loans = loans_.at(node);
  // A returned loan should bring its lender back to where it stood before
  // that loan, less whatever it lent afterwards and still has out.
  std::vector<std::pair<Loan, int>> returned;
  std::vector<Loan> kept;
  // The ended job may itself have lent some of what it borrowed, so it can
  // only hand back what it still holds.
  int freed = cluster.cores_owned(ended, node);
  for (std::size_t i = 0; i < node_loans.size(); ++i) {
    const Loan& l = node_loans[i];
    if (l.borrower == ended) {
      auto it = std::find_if(residents.begin(), residents.end(), [&](const Resident& r) { return r.job == l.lender; });
      if (it == residents.end())
        throw StateError("loan from job " + std::to_string(l.lender) + " on node " + std::to_string(node) +
                         " outlived its lender");
      const int give = std::min(l.cores, freed);
      freed -= give;
      it->cores += give;
      int expected = l.lender_cores_before - (l.cores - give);
      for (std::size_t j = i + 1; j < node_loans.size(); ++j)
        if (node_loans[j].lender == l.lender && node_loans[j].borrower != ended) expected -= node_loans[j].cores;
      returned.emplace_back(l, expected);
    } else if (l.lender != ended) {
      kept.push_back(l);
    }
  }
  node_loans = std::move(kept);

  int used = 0;
  for (const auto& r : residents) used += r.cores;
  if (used > config_.cores_per_node()) throw StateError("returned loans overfill node " + std::to_string(node));
  // Any spare cores go to the remaining residents.
  auto plan = distribute_cpus(config_, residents, std::nullopt, sharing_, node_loans);

  std::vector<CoreDirective> out;
  for (const auto& r : residents) {
    const int before = cluster.cores_owned(r.job, node);
    const int after = plan->cores_of(r.job);
    if (after != before) out.push_back({CoreDirective::Kind::expand, r.job, node, before, after, ended});
  }
  cluster.set_node_layout(node, plan->layout());

  for (const auto& [l, expected] : returned) {
    const int restored = cluster.cores_owned(l.lender, node);
    if (restored < expected)
      restoration_failures_.push_back("job " + std::to_string(l.lender) + " on node " + std::to_string(node) +
                                      " has " + std::to_string(restored) + " cores after job " +
                                      std::to_string(ended) + " left, expected " + std::to_string(expected));
  }
  return out;
}

}  // namespace sdsim
