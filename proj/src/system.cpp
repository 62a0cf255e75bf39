#include "sdsim/system.hpp"

#include <algorithm>
#include <set>

namespace sdsim {

SystemState::SystemState(const ClusterConfig& config, SharingFactor sharing, ModelKind execution_model,
                         EventLog& log)
    : config_(config), model_(execution_model), log_(&log), cluster_(config), nodes_(config, sharing) {}

void SystemState::set_now(Seconds now) {
  if (now < now_) throw StateError("clock moved backwards");
  now_ = now;
}

const RunningJob* SystemState::find(JobId job) const {
  auto it = running_.find(job);
  return it == running_.end() ? nullptr : &it->second;
}

TraitsLookup SystemState::traits(const Job* extra) const {
  return [this, extra](JobId id) -> JobTraits {
    if (extra && extra->id == id) return {extra->ranks_per_node, extra->malleable};
    const RunningJob& r = running_.at(id);
    return {r.job.ranks_per_node, r.job.malleable};
  };
}

std::vector<int> SystemState::cores_from_cluster(const ExecutionState& exec) const {
  std::vector<int> cores;
  cores.reserve(exec.nodes.size());
  for (NodeId n : exec.nodes) cores.push_back(cluster_.cores_owned(exec.job, n));
  return cores;
}

void SystemState::start_static(const Job& job, std::span<const NodeId> nodes) {
  ++generation_;
  if (running_.contains(job.id)) throw StateError("job " + std::to_string(job.id) + " already running");
  if (static_cast<int>(nodes.size()) != job.requested_nodes)
    throw AllocationError("job " + std::to_string(job.id) + " placed on the wrong number of nodes");
  const int cpn = config_.cores_per_node();
  std::vector<std::pair<NodeId, int>> placement;
  for (NodeId n : nodes) {
    if (!cluster_.is_free(n)) throw AllocationError("static start on busy node " + std::to_string(n));
    placement.emplace_back(n, cpn);
  }
  cluster_.allocate(job.id, placement);

  std::vector<NodeId> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  RunningJob rj{job, start_execution(job, now_, cpn, sorted, std::vector<int>(sorted.size(), cpn)), 0, false};
  running_.emplace(job.id, std::move(rj));

  LogRecord rec;
  rec.time = now_;
  rec.kind = LogKind::start;
  rec.job = job.id;
  rec.nodes = sorted;
  log_->append(std::move(rec));

  refresh_predictions({job.id});
  reconfigured_.push_back(job.id);
}

void SystemState::start_malleable(const Job& job, const MateSolution& solution, const MalleableStartInfo& info) {
  ++generation_;
  if (running_.contains(job.id)) throw StateError("job " + std::to_string(job.id) + " already running");
  if (!job.malleable) throw StateError("malleable start of a rigid job " + std::to_string(job.id));
  const std::vector<NodeId> all_nodes = solution.nodes();
  if (static_cast<int>(all_nodes.size()) != job.requested_nodes)
    throw AllocationError("mate solution does not match the job's node count");

  LogRecord rec;
  rec.time = now_;
  rec.kind = LogKind::malleable_start;
  rec.job = job.id;
  rec.nodes = all_nodes;
  rec.mates = solution.mate_ids();
  rec.free_nodes = solution.free_nodes_used;
  rec.performance_impact = solution.performance_impact;
  rec.static_end = info.static_end;
  rec.mall_end = info.mall_end;
  rec.cutoff = info.cutoff;
  log_->append(std::move(rec));

  const Newcomer newcomer{job.id, job.ranks_per_node};
  const auto lookup = traits(&job);
  std::vector<CoreDirective> directives;
  for (const auto& mate : solution.mates) {
    for (NodeId n : mate.nodes) {
      auto d = nodes_.on_job_start(cluster_, n, newcomer, lookup);
      directives.insert(directives.end(), d.begin(), d.end());
    }
  }
  const int cpn = config_.cores_per_node();
  if (!solution.free_nodes_used.empty()) {
    std::vector<std::pair<NodeId, int>> placement;
    for (NodeId n : solution.free_nodes_used) placement.emplace_back(n, cpn);
    cluster_.allocate(job.id, placement);
  }

  std::vector<int> cores;
  for (NodeId n : all_nodes) cores.push_back(cluster_.cores_owned(job.id, n));
  running_.emplace(job.id, RunningJob{job, start_execution(job, now_, cpn, all_nodes, cores), 0, true});

  apply_directives(directives);

  std::vector<JobId> affected{job.id};
  for (const auto& d : directives)
    if (d.job != job.id && std::find(affected.begin(), affected.end(), d.job) == affected.end())
      affected.push_back(d.job);
  refresh_predictions(affected);
  reconfigured_.insert(reconfigured_.end(), affected.begin(), affected.end());
}

void SystemState::complete(JobId id) {
  ++generation_;
  auto it = running_.find(id);
  if (it == running_.end()) throw StateError("completion of unknown job " + std::to_string(id));
  const std::vector<NodeId> nodes = it->second.exec.nodes;

  LogRecord rec;
  rec.time = now_;
  rec.kind = LogKind::end;
  rec.job = id;
  log_->append(std::move(rec));

  const auto lookup = traits();
  std::vector<CoreDirective> directives;
  for (NodeId n : nodes) {
    auto d = nodes_.on_job_end(cluster_, n, id, lookup);
    directives.insert(directives.end(), d.begin(), d.end());
  }
  if (cluster_.has_job(id)) throw StateError("job " + std::to_string(id) + " still owns cores after completion");
  running_.erase(it);

  apply_directives(directives);
  std::vector<JobId> affected;
  for (const auto& d : directives)
    if (std::find(affected.begin(), affected.end(), d.job) == affected.end()) affected.push_back(d.job);
  refresh_predictions(affected);
  reconfigured_.insert(reconfigured_.end(), affected.begin(), affected.end());
}

// Logs shrink/expand directives and moves each touched job to its new core
// counts, accruing progress at the old counts first.
void SystemState::apply_directives(const std::vector<CoreDirective>& directives) {
  std::vector<JobId> touched;
  for (const auto& d : directives) {
    if (d.kind == CoreDirective::Kind::place) continue;
    LogRecord rec;
    rec.time = now_;
    rec.kind = d.kind == CoreDirective::Kind::shrink ? LogKind::shrink : LogKind::expand;
    rec.job = d.job;
    rec.node = d.node;
    rec.cores_from = d.from;
    rec.cores_to = d.to;
    rec.cause = d.cause;
    log_->append(std::move(rec));
    if (std::find(touched.begin(), touched.end(), d.job) == touched.end()) touched.push_back(d.job);
  }
  for (JobId j : touched) {
    RunningJob& r = running_.at(j);
    advance_to(r.exec, now_, model_);
    reconfigure(r.exec, now_, cores_from_cluster(r.exec));
  }
}

Seconds SystemState::predict_end(JobId id) const {
  const RunningJob& r = running_.at(id);
  const ExecutionState& exec = r.exec;

  // A lender gets its cores back when the last of its borrowers is predicted
  // to finish; everyone else keeps the current split until done.
  Seconds restore = -1;
  for (NodeId n : exec.nodes) {
    for (const Loan& l : nodes_.loans(n)) {
      if (l.lender != id) continue;
      auto b = running_.find(l.borrower);
      if (b != running_.end()) restore = std::max(restore, b->second.predicted_end);
    }
  }
  std::vector<ConfigSlot> timeline = elapsed_timeline(exec, now_);
  if (restore < 0)
    timeline.push_back(ConfigSlot{kForever, exec.cores});
  else if (restore > now_)
    timeline.push_back(ConfigSlot{restore - now_, exec.cores});
  return exec.start_time + r.job.requested_time +
         predict_increase(r.job, exec.cores_per_node, timeline, ModelKind::worst_case);
}

void SystemState::refresh_predictions(const std::vector<JobId>& jobs) {
  // Borrowers first, then every job lending to them: a lender's prediction
  // depends on when its borrowers finish.
  std::set<JobId> lenders;
  for (JobId j : jobs) {
    auto it = running_.find(j);
    if (it == running_.end()) continue;
    for (NodeId n : it->second.exec.nodes)
      for (const Loan& l : nodes_.loans(n))
        if (l.borrower == j || l.lender == j) lenders.insert(l.lender);
  }
  for (JobId j : jobs) {
    if (lenders.contains(j)) continue;
    auto it = running_.find(j);
    if (it != running_.end()) it->second.predicted_end = predict_end(j);
  }
  for (JobId j : lenders) {
    auto it = running_.find(j);
    if (it != running_.end()) it->second.predicted_end = predict_end(j);
  }
}

std::optional<NodePlan> SystemState::plan_share(NodeId node, const Job& newcomer) const {
  return nodes_.plan_start(cluster_, node, Newcomer{newcomer.id, newcomer.ranks_per_node}, traits(&newcomer));
}

Seconds SystemState::node_release(NodeId node) const {
  Seconds release = now_;
  for (JobId j : cluster_.residents(node)) release = std::max(release, std::max(running_.at(j).predicted_end, now_ + 1));
  return release;
}

std::vector<JobId> SystemState::take_reconfigured() {
  std::vector<JobId> out;
  out.swap(reconfigured_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Seconds SystemState::completion_time(JobId job) const {
  const ExecutionState& exec = running_.at(job).exec;
  if (exec.last_update != now_) throw StateError("completion time asked for an unsynchronised job");
  return now_ + remaining_time(exec, model_);
}

void SystemState::sync(JobId job) { advance_to(running_.at(job).exec, now_, model_); }

std::vector<std::string> SystemState::check_invariants() const {
  std::vector<std::string> problems = cluster_.check_invariants();
  const int cpn = config_.cores_per_node();
  std::int64_t owned = 0;
  for (const auto& [id, r] : running_) {
    const std::string tag = "job " + std::to_string(id) + ": ";
    if (cluster_.nodes_of(id) != r.exec.nodes) problems.push_back(tag + "node list differs from the cluster");
    for (std::size_t i = 0; i < r.exec.nodes.size(); ++i) {
      const int have = cluster_.cores_owned(id, r.exec.nodes[i]);
      owned += have;
      if (have != r.exec.cores[i]) problems.push_back(tag + "execution state and cluster disagree on core count");
      if (have < 1) problems.push_back(tag + "node without cores");
      if (r.job.malleable && have < r.job.ranks_per_node) problems.push_back(tag + "below one core per rank");
      if (!r.job.malleable && have != cpn) problems.push_back(tag + "rigid job not on whole nodes");
    }
  }
  std::int64_t unowned = 0;
  for (NodeId n = 0; n < config_.node_count; ++n) unowned += cluster_.unowned_cores(n);
  if (owned + unowned != config_.total_cores()) problems.push_back("machine-wide core conservation broken");
  for (const auto& f : nodes_.restoration_failures()) problems.push_back("restoration: " + f);
  return problems;
}

}  // namespace sdsim
