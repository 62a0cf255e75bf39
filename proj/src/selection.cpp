#include "sdsim/selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace sdsim {

std::vector<JobId> MateSolution::mate_ids() const {
  std::vector<JobId> ids;
  for (const auto& m : mates) ids.push_back(m.job);
  return ids;
}

std::vector<NodeId> MateSolution::nodes() const {
  std::vector<NodeId> out = free_nodes_used;
  for (const auto& m : mates) out.insert(out.end(), m.nodes.begin(), m.nodes.end());
  std::sort(out.begin(), out.end());
  return out;
}

CutoffPolicy CutoffPolicy::fixed(double value) {
  if (!(value > 1.0)) throw std::invalid_argument("a fixed maximum slowdown must be greater than 1");
  return CutoffPolicy(false, value);
}

CutoffPolicy CutoffPolicy::dynamic() { return CutoffPolicy(true, std::numeric_limits<double>::infinity()); }

double update_cutoff(const CutoffPolicy& policy, std::span<const RunningEstimate> running) {
  if (!policy.is_dynamic()) return policy.value();
  if (running.empty()) return std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& r : running)
    sum += static_cast<double>(r.wait_time + r.requested_time) / static_cast<double>(r.requested_time);
  return sum / static_cast<double>(running.size());
}

double slowdown_penalty(Seconds wait_time, Seconds increase, Seconds requested_time) {
  return static_cast<double>(wait_time + increase + requested_time) / static_cast<double>(requested_time);
}

TimelineWalk elapsed_walk(const Job& job, const ExecutionState& exec, Seconds now) {
  TimelineWalk walk(job, exec.cores_per_node);
  for (const ConfigSlot& slot : exec.history) walk.run(slot, ModelKind::worst_case);
  if (now > exec.config_since) walk.run(ConfigSlot{now - exec.config_since, exec.cores}, ModelKind::worst_case);
  return walk;
}

PenaltyEstimate penalty(const Job& mate, const ExecutionState& exec, TimelineWalk so_far,
                        std::span<const int> shrunk_cores, Seconds window) {
  if (window > 0) so_far.run(ConfigSlot{window, {shrunk_cores.begin(), shrunk_cores.end()}}, ModelKind::worst_case);
  PenaltyEstimate out;
  out.increase = so_far.increase();
  out.penalty = slowdown_penalty(exec.start_time - mate.submit_time, out.increase, mate.requested_time);
  return out;
}

PenaltyEstimate penalty(const Job& mate, const ExecutionState& exec, std::span<const int> shrunk_cores,
                        Seconds window, Seconds now) {
  return penalty(mate, exec, elapsed_walk(mate, exec, now), shrunk_cores, window);
}

namespace {

bool eligible(const MateCandidate& c, Seconds new_job_end, const SelectionParams& params) {
  return c.penalty < params.max_penalty && c.predicted_end >= new_job_end && c.weight() >= 1;
}

// Canonical Performance Impact: summed in ascending id order so every
// enumeration order produces bit-identical totals.
struct Scored {
  double pi = 0.0;
  std::vector<const MateCandidate*> mates;  // ascending id
  int free_used = 0;
};

Scored score(std::vector<const MateCandidate*> picked, int free_used) {
  std::sort(picked.begin(), picked.end(), [](auto* a, auto* b) { return a->job < b->job; });
  Scored s;
  for (auto* m : picked) s.pi += m->penalty;
  s.mates = std::move(picked);
  s.free_used = free_used;
  return s;
}

bool better(const Scored& a, const Scored& b) {
  if (a.pi != b.pi) return a.pi < b.pi;
  return std::lexicographical_compare(a.mates.begin(), a.mates.end(), b.mates.begin(), b.mates.end(),
                                      [](auto* x, auto* y) { return x->job < y->job; });
}

// Σw must hit W exactly, or fall short by no more than the free nodes on
// hand when topping up is enabled.
int free_needed(int weight_sum, int required, std::size_t free_available, bool use_free) {
  if (weight_sum == required) return 0;
  if (use_free && weight_sum < required && static_cast<std::size_t>(required - weight_sum) <= free_available)
    return required - weight_sum;
  return -1;
}

MateSolution materialize(const Scored& s, std::span<const NodeId> free_nodes) {
  MateSolution out;
  for (auto* m : s.mates) out.mates.push_back(*m);
  out.performance_impact = s.pi;
  std::vector<NodeId> sorted_free(free_nodes.begin(), free_nodes.end());
  std::sort(sorted_free.begin(), sorted_free.end());
  out.free_nodes_used.assign(sorted_free.begin(), sorted_free.begin() + s.free_used);
  return out;
}

}  // namespace

std::optional<MateSolution> select_mates(int required_nodes, Seconds new_job_end,
                                         std::span<const MateCandidate> candidates,
                                         std::span<const NodeId> free_nodes, const SelectionParams& params) {
  std::vector<const MateCandidate*> list;
  for (const auto& c : candidates)
    if (eligible(c, new_job_end, params)) list.push_back(&c);
  std::stable_sort(list.begin(), list.end(), [](auto* a, auto* b) {
    return a->penalty != b->penalty ? a->penalty < b->penalty : a->job < b->job;
  });
  if (params.candidate_cap >= 0 && list.size() > static_cast<std::size_t>(params.candidate_cap))
    list.resize(static_cast<std::size_t>(params.candidate_cap));

  std::optional<Scored> best;
  std::vector<const MateCandidate*> picked;

  // Depth-first over combinations of increasing index, at most max_mates deep.
  auto recurse = [&](auto&& self, std::size_t from, int weight_sum) -> void {
    for (std::size_t i = from; i < list.size(); ++i) {
      const int w = weight_sum + list[i]->weight();
      if (w > required_nodes) continue;
      picked.push_back(list[i]);
      const int free_used = free_needed(w, required_nodes, free_nodes.size(), params.use_free_nodes);
      if (free_used >= 0) {
        Scored s = score(picked, free_used);
        if (!best || better(s, *best)) best = std::move(s);
      }
      if (static_cast<int>(picked.size()) < params.max_mates && w < required_nodes) self(self, i + 1, w);
      picked.pop_back();
    }
  };
  if (params.max_mates >= 1) recurse(recurse, 0, 0);

  if (!best) return std::nullopt;
  return materialize(*best, free_nodes);
}

std::optional<MateSolution> brute_force_select(int required_nodes, Seconds new_job_end,
                                               std::span<const MateCandidate> candidates,
                                               std::span<const NodeId> free_nodes, const SelectionParams& params) {
  const std::size_t n = candidates.size();
  if (n > 24) throw std::invalid_argument("brute force selection limited to 24 candidates");
  std::optional<Scored> best;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    if (std::popcount(mask) > params.max_mates) continue;
    std::vector<const MateCandidate*> picked;
    int weight = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      ok = eligible(candidates[i], new_job_end, params);
      picked.push_back(&candidates[i]);
      weight += candidates[i].weight();
    }
    if (!ok) continue;
    const int free_used = free_needed(weight, required_nodes, free_nodes.size(), params.use_free_nodes);
    if (free_used < 0) continue;
    Scored s = score(picked, free_used);
    if (!best || better(s, *best)) best = std::move(s);
  }
  if (!best) return std::nullopt;
  return materialize(*best, free_nodes);
}

}  // namespace sdsim
