#include "sdsim/engine.hpp"

#include <future>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>

namespace sdsim {

void SimConfig::validate() const {
  cluster.validate();
  if (backfill_interval < 0) throw std::invalid_argument("backfill interval must not be negative");
  if (scheduler.selection.max_mates < 1) throw std::invalid_argument("max mates must be at least 1");
  if (scheduler.selection.candidate_cap < 1) throw std::invalid_argument("candidate cap must be at least 1");
  if (metrics.bounded_slowdown && *metrics.bounded_slowdown <= 0)
    throw std::invalid_argument("bounded slowdown threshold must be positive");
}

namespace {

// Completions free nodes before same-instant arrivals are scheduled.
enum class EventKind { complete = 0, submit = 1, tick = 2 };

struct Event {
  Seconds time = 0;
  EventKind kind = EventKind::tick;
  std::uint64_t seq = 0;
  JobId job = 0;
  std::uint64_t version = 0;
  std::size_t index = 0;  // into the workload, for submissions

  bool operator>(const Event& o) const {
    return std::tie(time, kind, seq) > std::tie(o.time, o.kind, o.seq);
  }
};

class Simulation {
 public:
  Simulation(const Workload& workload, const SimConfig& config)
      : workload_(workload),
        config_(config),
        state_(config.cluster, config.sharing, config.model, result_.log),
        scheduler_(config.scheduler) {}

  RunResult run() {
    std::set<JobId> ids;
    for (std::size_t i = 0; i < workload_.jobs.size(); ++i) {
      validate_job(workload_.jobs[i], config_.cluster);
      if (!ids.insert(workload_.jobs[i].id).second)
        throw WorkloadError("duplicate job id " + std::to_string(workload_.jobs[i].id));
      Event e;
      e.time = workload_.jobs[i].submit_time;
      e.kind = EventKind::submit;
      e.job = workload_.jobs[i].id;
      e.index = i;
      push(e);
    }
    try {
      loop();
    } catch (const SimulationError&) {
      throw;
    } catch (const std::exception& e) {
      throw SimulationError(std::string(e.what()) + "\n" + dump());
    }
    if (!state_.running().empty() || !scheduler_.idle())
      throw SimulationError("simulation ended with unfinished jobs\n" + dump());
    result_.stats = scheduler_.stats();
    result_.report = summarize(result_.log, config_.metrics);
    return std::move(result_);
  }

 private:
  void push(Event e) {
    e.seq = next_seq_++;
    queue_.push(e);
  }

  void loop() {
    while (!queue_.empty()) {
      const Seconds now = queue_.top().time;
      state_.set_now(now);
      while (!queue_.empty() && queue_.top().time == now) {
        const Event e = queue_.top();
        queue_.pop();
        handle(e);
        reissue_completions();
        check("after event");
      }
      if (!scheduler_.idle()) {
        scheduler_.backfill_pass(state_);
        reissue_completions();
        check("after scheduling");
      }
      // Starts made by the pass may finish this very second.
      if (!queue_.empty() && queue_.top().time == now) continue;
      if (!scheduler_.idle() && !tick_pending_ && config_.backfill_interval > 0) {
        Event t;
        t.time = now + config_.backfill_interval;
        t.kind = EventKind::tick;
        push(t);
        tick_pending_ = true;
      }
    }
  }

  void handle(const Event& e) {
    ++result_.events;
    switch (e.kind) {
      case EventKind::submit: {
        const Job& job = workload_.jobs[e.index];
        LogRecord rec;
        rec.time = e.time;
        rec.kind = LogKind::submit;
        rec.job = job.id;
        rec.requested_nodes = job.requested_nodes;
        rec.requested_time = job.requested_time;
        rec.base_runtime = job.base_runtime;
        rec.malleable = job.malleable;
        result_.log.append(std::move(rec));
        scheduler_.submit(job);
        break;
      }
      case EventKind::complete: {
        auto v = versions_.find(e.job);
        if (v == versions_.end() || v->second != e.version) return;  // superseded
        state_.sync(e.job);
        if (!state_.find(e.job)->exec.finished())
          throw SimulationError("job " + std::to_string(e.job) + " not finished at its completion time");
        versions_.erase(v);
        state_.complete(e.job);
        break;
      }
      case EventKind::tick:
        tick_pending_ = false;
        break;
    }
  }

  void reissue_completions() {
    for (JobId j : state_.take_reconfigured()) {
      if (!state_.find(j)) continue;
      state_.sync(j);
      Event e;
      e.time = state_.completion_time(j);
      e.kind = EventKind::complete;
      e.job = j;
      e.version = ++versions_[j];
      push(e);
    }
  }

  void check(const char* where) {
    if (!config_.check_invariants) return;
    for (const auto& p : state_.check_invariants())
      result_.violations.push_back(std::to_string(state_.now()) + ": " + p + " (" + where + ")");
  }

  std::string dump() const {
    std::ostringstream out;
    out << "time " << state_.now() << ", " << state_.running().size() << " running, "
        << scheduler_.queue().pending.size() << " waiting\n";
    for (const auto& [id, r] : state_.running()) {
      out << "  job " << id << " start=" << r.exec.start_time << " predicted_end=" << r.predicted_end << " cores=";
      for (std::size_t i = 0; i < r.exec.nodes.size(); ++i)
        out << (i ? "," : "") << r.exec.nodes[i] << ':' << r.exec.cores[i];
      out << '\n';
    }
    for (const auto& p : state_.check_invariants()) out << "  invariant: " << p << '\n';
    return out.str();
  }

  const Workload& workload_;
  const SimConfig& config_;
  RunResult result_;
  SystemState state_;
  Scheduler scheduler_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::map<JobId, std::uint64_t> versions_;
  std::uint64_t next_seq_ = 0;
  bool tick_pending_ = false;
};

}  // namespace

RunResult run(const Workload& workload, const SimConfig& config) {
  config.validate();
  return Simulation(workload, config).run();
}

ReportRatios ratios(const SimReport& a, const SimReport& b) {
  ReportRatios r;
  r.makespan = ratio(static_cast<double>(b.makespan), static_cast<double>(a.makespan));
  r.avg_response = ratio(b.avg_response, a.avg_response);
  r.avg_slowdown = ratio(b.avg_slowdown, a.avg_slowdown);
  r.avg_wait = ratio(b.avg_wait, a.avg_wait);
  return r;
}

CompareResult replay_compare(const Workload& workload, const SimConfig& a, const SimConfig& b) {
  auto fa = std::async(std::launch::async, [&] { return run(workload, a); });
  auto fb = std::async(std::launch::async, [&] { return run(workload, b); });
  CompareResult out{fa.get(), fb.get(), {}, {}};
  out.ratios = ratios(out.a.report, out.b.report);
  out.heatmap = heatmap(out.b.report.categories, out.a.report.categories);
  return out;
}

}  // namespace sdsim
