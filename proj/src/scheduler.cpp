#include "sdsim/scheduler.hpp"

#include <algorithm>
#include <stdexcept>

namespace sdsim {

AvailabilityProfile::AvailabilityProfile(Seconds now, int total_nodes, std::span<const Seconds> busy_release_times)
    : total_(total_nodes) {
  std::vector<Seconds> releases(busy_release_times.begin(), busy_release_times.end());
  std::sort(releases.begin(), releases.end());
  int free_now = total_nodes - static_cast<int>(releases.size());
  times_.push_back(now);
  free_.push_back(free_now);
  for (Seconds t : releases) {
    if (t <= now) throw std::logic_error("busy node released in the past");
    if (t != times_.back()) {
      times_.push_back(t);
      free_.push_back(free_.back());
    }
    ++free_.back();
  }
}

AvailabilityProfile AvailabilityProfile::of(const SystemState& state) {
  // Same as node_release for every busy node, in one sweep over jobs.
  const Seconds now = state.now();
  std::vector<Seconds> per_node(static_cast<std::size_t>(state.config().node_count), -1);
  for (const auto& [id, r] : state.running()) {
    const Seconds end = std::max(r.predicted_end, now + 1);
    for (NodeId n : r.exec.nodes) per_node[static_cast<std::size_t>(n)] = std::max(per_node[static_cast<std::size_t>(n)], end);
  }
  std::vector<Seconds> releases;
  for (Seconds t : per_node)
    if (t >= 0) releases.push_back(t);
  return AvailabilityProfile(state.now(), state.config().node_count, releases);
}

int AvailabilityProfile::available_at(Seconds t) const {
  if (t < times_.front()) return 0;
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return free_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

Seconds AvailabilityProfile::earliest_start(int nodes, Seconds duration) const {
  if (nodes > total_) throw std::invalid_argument("job larger than the machine");
  std::size_t i = 0;
  const std::size_t n = times_.size();
  while (i < n) {
    if (free_[i] < nodes) {
      ++i;
      continue;
    }
    const Seconds end = times_[i] + duration;
    std::size_t j = i + 1;
    bool ok = true;
    for (; j < n && times_[j] < end; ++j) {
      if (free_[j] < nodes) {
        ok = false;
        break;
      }
    }
    if (ok) return times_[i];
    i = j + 1;
  }
  throw std::logic_error("availability profile never frees enough nodes");
}

bool AvailabilityProfile::fits(int nodes, Seconds start, Seconds duration) const {
  if (available_at(start) < nodes) return false;
  auto it = std::upper_bound(times_.begin(), times_.end(), start);
  for (auto i = static_cast<std::size_t>(it - times_.begin()); i < times_.size() && times_[i] < start + duration; ++i)
    if (free_[i] < nodes) return false;
  return true;
}

std::size_t AvailabilityProfile::breakpoint(Seconds t) {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  const auto i = static_cast<std::size_t>(it - times_.begin());
  if (it != times_.end() && *it == t) return i;
  if (i == 0) throw std::logic_error("breakpoint before profile start");
  times_.insert(it, t);
  free_.insert(free_.begin() + static_cast<std::ptrdiff_t>(i), free_[i - 1]);
  return i;
}

void AvailabilityProfile::reserve(int nodes, Seconds start, Seconds duration) {
  if (duration <= 0) return;
  const std::size_t first = breakpoint(start);
  const std::size_t last = breakpoint(start + duration);
  for (std::size_t i = first; i < last; ++i) free_[i] -= nodes;
}

bool AvailabilityProfile::try_claim(std::span<const Claim> claims) {
  AvailabilityProfile trial = *this;
  for (const Claim& c : claims) {
    if (c.to <= c.from) continue;
    trial.reserve(c.nodes, c.from, c.to - c.from);
  }
  if (std::any_of(trial.free_.begin(), trial.free_.end(), [](int f) { return f < 0; })) return false;
  *this = std::move(trial);
  return true;
}

Scheduler::Scheduler(SchedulerConfig config) : config_(std::move(config)) {
  if (config_.selection.max_mates < 1) throw std::invalid_argument("at least one mate must be allowed");
  if (config_.selection.candidate_cap < 1) throw std::invalid_argument("candidate cap must be positive");
}

void Scheduler::submit(const Job& job) {
  auto pos = std::upper_bound(queue_.pending.begin(), queue_.pending.end(), job,
                              [](const Job& a, const Job& b) { return a.priority < b.priority; });
  queue_.pending.insert(pos, job);
}

Seconds Scheduler::estimate_wait_time(const Job& job, const SystemState& state) const {
  if (job.requested_nodes > state.config().node_count)
    throw std::invalid_argument("job " + std::to_string(job.id) + " is larger than the machine");
  AvailabilityProfile profile = AvailabilityProfile::of(state);
  for (const Job& ahead : queue_.pending) {
    if (ahead.priority >= job.priority || ahead.id == job.id) break;
    const Seconds start = profile.earliest_start(ahead.requested_nodes, ahead.requested_time);
    profile.reserve(ahead.requested_nodes, start, ahead.requested_time);
    if (config_.depth == ReservationDepth::easy) break;
  }
  return profile.earliest_start(job.requested_nodes, job.requested_time) - state.now();
}

void Scheduler::refresh_cache(const SystemState& state) {
  if (cached_generation_ == state.generation()) return;
  bases_.clear();
  cutoff_.reset();
  cached_generation_ = state.generation();
}

double Scheduler::current_cutoff(const SystemState& state) {
  refresh_cache(state);
  if (!cutoff_) {
    std::vector<RunningEstimate> est;
    est.reserve(state.running().size());
    for (const auto& [id, r] : state.running()) est.push_back({r.wait_time(), r.job.requested_time});
    cutoff_ = update_cutoff(config_.cutoff, est);
  }
  return *cutoff_;
}

std::vector<Scheduler::MateBase>& Scheduler::mate_bases(const SystemState& state, const Job& newcomer) {
  refresh_cache(state);
  auto found = bases_.find(newcomer.ranks_per_node);
  if (found != bases_.end()) return found->second;

  std::vector<MateBase> bases;
  const auto& cluster = state.cluster();
  const int cap = state.config().max_residents;
  for (const auto& [id, r] : state.running()) {
    if (!r.job.malleable) continue;
    const auto& nodes = r.exec.nodes;
    if (std::any_of(nodes.begin(), nodes.end(),
                    [&](NodeId n) { return static_cast<int>(cluster.residents(n).size()) >= cap; }))
      continue;
    MateBase base{&r, {}, {}, std::nullopt, -1, -1, kForever};
    bool feasible = true;
    for (NodeId n : nodes) {
      const auto plan = state.plan_share(n, newcomer);
      if (!plan || plan->cores_of(id) < std::max(1, r.job.ranks_per_node)) {
        feasible = false;
        break;
      }
      base.mate_cores.push_back(plan->cores_of(id));
      base.newcomer_cores.push_back(plan->cores_of(newcomer.id));
    }
    if (feasible) bases.push_back(std::move(base));
  }
  // Latest predicted end first: the jobs that outlast a newcomer form a prefix.
  std::sort(bases.begin(), bases.end(), [](const MateBase& a, const MateBase& b) {
    if (a.running->predicted_end != b.running->predicted_end) return a.running->predicted_end > b.running->predicted_end;
    return a.running->job.id < b.running->job.id;
  });
  return bases_.emplace(newcomer.ranks_per_node, std::move(bases)).first->second;
}

// Penalty grows with the shrink window, so answers for one window settle
// every shorter (under the cut-off) or longer (over it) one.
bool Scheduler::within_cutoff(MateBase& base, Seconds now, double cutoff, Seconds window) {
  const RunningJob& r = *base.running;
  if (base.walked_at != now) {
    base.walk = elapsed_walk(r.job, r.exec, now);
    base.walked_at = now;
    base.under_up_to = -1;
    base.over_from = kForever;
  }
  if (window <= base.under_up_to) return true;
  if (window >= base.over_from) return false;
  if (penalty(r.job, r.exec, *base.walk, base.mate_cores, window).penalty < cutoff) {
    base.under_up_to = window;
    return true;
  }
  base.over_from = window;
  return false;
}

bool Scheduler::try_malleable(const Job& job, Seconds earliest, SystemState& state, AvailabilityProfile& profile,
                              SchedulingDecision& out) {
  const Seconds now = state.now();
  const ClusterConfig& cfg = state.config();
  const int cpn = cfg.cores_per_node();

  // Share the new job would get on a node taken from a single full-node
  // mate, which is the placement the sharing factor implies.
  auto probe = probe_share_.find(job.ranks_per_node);
  if (probe == probe_share_.end()) {
    const Resident resident{-1, cpn, 1, true};
    const auto plan = distribute_cpus(cfg, std::span(&resident, 1), Newcomer{0, job.ranks_per_node},
                                      state.node_manager().sharing());
    probe = probe_share_.emplace(job.ranks_per_node, plan ? plan->cores_of(0) : 0).first;
  }
  const int share = probe->second;
  if (share == 0) return false;

  const Seconds static_end = earliest - now + job.requested_time;
  // The same share on every node for the whole run: the work simply
  // stretches by cpn / share.
  const Seconds mall_end = (job.requested_time * cpn + share - 1) / share;
  if (!(static_end > mall_end)) {
    ++stats_.gate_rejections;
    return false;
  }

  const double cutoff = current_cutoff(state);
  auto& bases = mate_bases(state, job);
  std::vector<MateBase*> usable;
  for (std::size_t i = 0; i < bases.size() && bases[i].running->predicted_end >= now + mall_end; ++i) {
    if (within_cutoff(bases[i], now, cutoff, mall_end)) usable.push_back(&bases[i]);
  }

  // Cheap necessary condition before building candidates: the widest
  // usable mates must be able to cover the request.
  {
    std::vector<int> widths;
    for (const MateBase* b : usable) {
      const int w = static_cast<int>(b->running->exec.nodes.size());
      if (w <= job.requested_nodes) widths.push_back(w);
    }
    const auto top = std::min(widths.size(), static_cast<std::size_t>(config_.selection.max_mates));
    std::partial_sort(widths.begin(), widths.begin() + static_cast<std::ptrdiff_t>(top), widths.end(),
                      std::greater<>());
    int reach = 0;
    for (std::size_t i = 0; i < top; ++i) reach += widths[i];
    if (config_.selection.use_free_nodes) reach += state.cluster().free_node_count();
    if (reach < job.requested_nodes) {
      ++stats_.no_solution;
      return false;
    }
  }

  std::vector<MateCandidate> candidates;
  candidates.reserve(usable.size());
  for (const MateBase* base : usable) {
    const RunningJob& r = *base->running;
    const PenaltyEstimate pe = penalty(r.job, r.exec, *base->walk, base->mate_cores, mall_end);
    MateCandidate c;
    c.job = r.job.id;
    c.nodes = r.exec.nodes;
    c.penalty = pe.penalty;
    c.predicted_end = r.predicted_end;
    c.mate_cores = base->mate_cores;
    c.newcomer_cores = base->newcomer_cores;
    c.shrunk_end = r.exec.start_time + r.job.requested_time + pe.increase;
    candidates.push_back(std::move(c));
  }

  SelectionParams params = config_.selection;
  params.max_penalty = cutoff;
  std::vector<NodeId> free_nodes;
  if (params.use_free_nodes) free_nodes = state.cluster().free_nodes();
  auto solution = select_mates(job.requested_nodes, now + mall_end, candidates, free_nodes, params);
  if (!solution) {
    ++stats_.no_solution;
    return false;
  }

  // The chosen mates fix the actual split; recheck the gate and containment
  // with it.
  std::vector<int> actual;
  for (NodeId n : solution->nodes()) {
    int cores = cpn;
    for (const auto& m : solution->mates)
      for (std::size_t i = 0; i < m.nodes.size(); ++i)
        if (m.nodes[i] == n) cores = m.newcomer_cores[i];
    actual.push_back(cores);
  }
  const std::vector<ConfigSlot> actual_slots{ConfigSlot{kForever, actual}};
  const Seconds actual_end = job.requested_time + predict_increase(job, cpn, actual_slots, ModelKind::worst_case);
  bool ok = static_end > actual_end;
  for (auto& m : solution->mates) {
    ok = ok && m.predicted_end >= now + actual_end;
    if (ok && actual_end != mall_end) {
      const RunningJob& r = *state.find(m.job);
      m.shrunk_end = r.exec.start_time + r.job.requested_time +
                     penalty(r.job, r.exec, m.mate_cores, actual_end, now).increase;
    }
  }
  if (!ok) {
    ++stats_.recheck_rejections;
    return false;
  }

  // Shrunk mates hold their nodes longer; that extension and any free nodes
  // taken must not push back a reservation already in the profile.
  std::vector<AvailabilityProfile::Claim> claims;
  for (const auto& m : solution->mates) {
    for (NodeId n : m.nodes) {
      const Seconds old_release = state.node_release(n);
      const Seconds new_release = std::max({m.shrunk_end, now + actual_end, now + 1});
      if (new_release > old_release) claims.push_back({1, old_release, new_release});
    }
  }
  for (std::size_t i = 0; i < solution->free_nodes_used.size(); ++i) claims.push_back({1, now, now + actual_end});
  if (!profile.try_claim(claims)) {
    ++stats_.safety_rejections;
    return false;
  }

  state.start_malleable(job, *solution, MalleableStartInfo{static_end, actual_end, cutoff});
  ++stats_.malleable_starts;

  out.kind = SchedulingDecision::Kind::malleable_start;
  out.start = now;
  out.nodes = solution->nodes();
  out.static_end = static_end;
  out.mall_end = actual_end;
  out.mates = std::move(solution);
  return true;
}

SchedulingDecision Scheduler::schedule(const Job& job, SystemState& state, AvailabilityProfile& profile,
                                       bool may_reserve) {
  SchedulingDecision out;
  out.job = job.id;
  const Seconds now = state.now();
  const int need = job.requested_nodes;
  if (need > state.config().node_count)
    throw std::invalid_argument("job " + std::to_string(job.id) + " is larger than the machine");

  if (state.cluster().free_node_count() >= need && profile.fits(need, now, job.requested_time)) {
    auto free = state.cluster().free_nodes();
    free.resize(static_cast<std::size_t>(need));
    state.start_static(job, free);
    profile.reserve(need, now, job.requested_time);
    ++stats_.static_starts;
    out.kind = SchedulingDecision::Kind::static_start;
    out.start = now;
    out.nodes = std::move(free);
    return out;
  }

  const Seconds earliest = profile.earliest_start(need, job.requested_time);
  if (config_.policy == Policy::sd && job.malleable && try_malleable(job, earliest, state, profile, out)) return out;

  if (may_reserve) {
    profile.reserve(need, earliest, job.requested_time);
    out.kind = SchedulingDecision::Kind::reserve;
    out.start = earliest;
  } else {
    out.kind = SchedulingDecision::Kind::skip;
    out.start = earliest;
  }
  return out;
}

std::vector<SchedulingDecision> Scheduler::backfill_pass(SystemState& state) {
  ++stats_.passes;
  std::vector<SchedulingDecision> decisions;
  decisions.reserve(queue_.pending.size());
  queue_.reservations.clear();
  if (queue_.pending.empty()) return decisions;

  AvailabilityProfile profile = AvailabilityProfile::of(state);
  bool head_reserved = false;
  std::vector<Job> still_waiting;
  still_waiting.reserve(queue_.pending.size());
  for (const Job& job : queue_.pending) {
    const bool may_reserve = config_.depth == ReservationDepth::conservative || !head_reserved;
    SchedulingDecision d = schedule(job, state, profile, may_reserve);
    switch (d.kind) {
      case SchedulingDecision::Kind::static_start:
      case SchedulingDecision::Kind::malleable_start:
        break;
      case SchedulingDecision::Kind::reserve:
        head_reserved = true;
        queue_.reservations.push_back({job.id, d.start, job.requested_nodes});
        still_waiting.push_back(job);
        break;
      case SchedulingDecision::Kind::skip:
        still_waiting.push_back(job);
        break;
    }
    decisions.push_back(std::move(d));
  }
  queue_.pending = std::move(still_waiting);
  return decisions;
}

}  // namespace sdsim
