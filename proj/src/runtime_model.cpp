#include "sdsim/runtime_model.hpp"

#include <algorithm>
#include <numeric>

namespace sdsim {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

double ExecutionState::work_done() const {
  return total_units == 0 ? 1.0 : static_cast<double>(done_units) / static_cast<double>(total_units);
}

int ExecutionState::cores_on(NodeId node) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == node) return cores[i];
  return 0;
}

ExecutionState start_execution(const Job& job, Seconds now, int cores_per_node, std::vector<NodeId> nodes,
                               std::vector<int> cores) {
  if (nodes.size() != cores.size() || nodes.empty()) throw ModelError("node and core lists disagree");
  ExecutionState exec;
  exec.job = job.id;
  exec.start_time = now;
  exec.cores_per_node = cores_per_node;
  exec.nodes = std::move(nodes);
  exec.cores = std::move(cores);
  exec.total_units = job.base_runtime * static_cast<std::int64_t>(exec.req_cpus());
  exec.config_since = now;
  exec.last_update = now;
  return exec;
}

std::int64_t unit_rate(std::span<const int> cores, int cores_per_node, ModelKind model) {
  if (cores.empty()) throw ModelError("configuration without nodes");
  const int lowest = *std::min_element(cores.begin(), cores.end());
  if (lowest <= 0) throw ModelError("node with zero assigned cores");
  if (*std::max_element(cores.begin(), cores.end()) > cores_per_node)
    throw ModelError("more cores than a node holds");
  if (model == ModelKind::ideal) return std::accumulate(cores.begin(), cores.end(), std::int64_t{0});
  return static_cast<std::int64_t>(lowest) * static_cast<std::int64_t>(cores.size());
}

double progress_rate(const ExecutionState& exec, ModelKind model) {
  return static_cast<double>(unit_rate(exec.cores, exec.cores_per_node, model)) / exec.req_cpus();
}

double advance(ExecutionState& exec, Seconds dt, ModelKind model) {
  if (dt < 0) throw ModelError("negative time step");
  const std::int64_t rate = unit_rate(exec.cores, exec.cores_per_node, model);
  const std::int64_t left = exec.total_units - exec.done_units;
  // dt * rate may overflow for absurd dt; compare against the time needed.
  if (dt >= ceil_div(left, rate))
    exec.done_units = exec.total_units;
  else
    exec.done_units += dt * rate;
  return exec.work_done();
}

void advance_to(ExecutionState& exec, Seconds now, ModelKind model) {
  if (now < exec.last_update) throw ModelError("time went backwards");
  advance(exec, now - exec.last_update, model);
  exec.last_update = now;
}

void reconfigure(ExecutionState& exec, Seconds now, std::vector<int> cores) {
  if (cores.size() != exec.nodes.size()) throw ModelError("core list does not match the job's nodes");
  if (cores == exec.cores) return;
  if (now > exec.config_since) exec.history.push_back(ConfigSlot{now - exec.config_since, exec.cores});
  exec.cores = std::move(cores);
  exec.config_since = now;
}

Seconds remaining_time(const ExecutionState& exec, ModelKind model) {
  const std::int64_t left = exec.total_units - exec.done_units;
  if (left <= 0) return 0;
  return ceil_div(left, unit_rate(exec.cores, exec.cores_per_node, model));
}

std::vector<ConfigSlot> elapsed_timeline(const ExecutionState& exec, Seconds now) {
  std::vector<ConfigSlot> out = exec.history;
  if (now > exec.config_since) out.push_back(ConfigSlot{now - exec.config_since, exec.cores});
  return out;
}

TimelineWalk::TimelineWalk(const Job& job, int cores_per_node)
    : requested_(job.requested_time),
      nodes_(job.requested_nodes),
      cores_per_node_(cores_per_node),
      full_(static_cast<std::int64_t>(job.requested_nodes) * cores_per_node),
      left_(job.requested_time * full_) {}

void TimelineWalk::run(const ConfigSlot& slot, ModelKind model) {
  if (slot.duration <= 0) throw ModelError("timeline slots must have positive duration");
  if (static_cast<int>(slot.cores.size()) != nodes_) throw ModelError("timeline slot does not cover the job's nodes");
  if (done_) return;
  const std::int64_t rate = unit_rate(slot.cores, cores_per_node_, model);
  const Seconds needed = ceil_div(left_, rate);
  if (slot.duration >= needed) {
    elapsed_ += needed;
    left_ = 0;
    done_ = true;
    return;
  }
  left_ -= slot.duration * rate;
  elapsed_ += slot.duration;
}

Seconds TimelineWalk::increase() const { return elapsed_ + ceil_div(left_, full_) - requested_; }

Seconds predict_increase(const Job& job, int cores_per_node, std::span<const ConfigSlot> timeline, ModelKind model) {
  TimelineWalk walk(job, cores_per_node);
  for (const ConfigSlot& slot : timeline) walk.run(slot, model);
  return walk.increase();
}

}  // namespace sdsim
