#include "sdsim/metrics.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <string>

namespace sdsim {

std::size_t Buckets::node_bucket(int n) const {
  return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), n) - nodes.begin());
}

std::size_t Buckets::runtime_bucket(Seconds r) const {
  return static_cast<std::size_t>(std::lower_bound(runtime.begin(), runtime.end(), r) - runtime.begin());
}

std::vector<JobOutcome> job_outcomes(const EventLog& log) {
  std::map<JobId, JobOutcome> jobs;
  std::set<JobId> started, ended;
  auto known = [&](const LogRecord& r) -> JobOutcome& {
    auto it = jobs.find(r.job);
    if (it == jobs.end())
      throw MetricsError("job " + std::to_string(r.job) + " appears at " + std::to_string(r.time) + " before submission");
    return it->second;
  };
  for (const LogRecord& r : log.records()) {
    switch (r.kind) {
      case LogKind::submit: {
        if (jobs.contains(r.job)) throw MetricsError("job " + std::to_string(r.job) + " submitted twice");
        JobOutcome o;
        o.job = r.job;
        o.submit = r.time;
        o.nodes = r.requested_nodes;
        o.base_runtime = r.base_runtime;
        jobs.emplace(r.job, o);
        break;
      }
      case LogKind::start:
      case LogKind::malleable_start: {
        JobOutcome& o = known(r);
        if (!started.insert(r.job).second) throw MetricsError("job " + std::to_string(r.job) + " started twice");
        o.start = r.time;
        o.malleable_start = r.kind == LogKind::malleable_start;
        break;
      }
      case LogKind::end: {
        JobOutcome& o = known(r);
        if (!started.contains(r.job)) throw MetricsError("job " + std::to_string(r.job) + " ended before starting");
        if (!ended.insert(r.job).second) throw MetricsError("job " + std::to_string(r.job) + " ended twice");
        o.end = r.time;
        break;
      }
      case LogKind::shrink:
      case LogKind::expand:
        break;
    }
  }
  std::vector<JobOutcome> out;
  out.reserve(jobs.size());
  for (auto& [id, o] : jobs) {
    if (!ended.contains(id)) throw MetricsError("incomplete log: job " + std::to_string(id) + " never ended");
    out.push_back(o);
  }
  return out;
}

double slowdown(const JobOutcome& job, const MetricsOptions& options) {
  const double response = static_cast<double>(job.response());
  if (!options.bounded_slowdown) return response / static_cast<double>(job.base_runtime);
  const double denom = static_cast<double>(std::max(job.base_runtime, *options.bounded_slowdown));
  return std::max(1.0, response / denom);
}

namespace {

std::vector<DayStat> series_of(const std::vector<JobOutcome>& jobs, const EventLog& log, const MetricsOptions& options) {
  if (jobs.empty()) return {};
  Seconds origin = std::numeric_limits<Seconds>::max();
  for (const auto& j : jobs) origin = std::min(origin, j.submit);
  auto day_of = [origin](Seconds t) { return static_cast<int>((t - origin) / 86400); };

  int last = 0;
  for (const auto& j : jobs) last = std::max(last, day_of(j.end));
  std::vector<DayStat> days(static_cast<std::size_t>(last) + 1);
  std::vector<double> sums(days.size(), 0.0);
  for (std::size_t d = 0; d < days.size(); ++d) days[d].day = static_cast<int>(d);
  for (const auto& j : jobs) {
    const auto d = static_cast<std::size_t>(day_of(j.end));
    ++days[d].completed;
    sums[d] += slowdown(j, options);
  }
  for (const LogRecord& r : log.records())
    if (r.kind == LogKind::malleable_start) ++days[static_cast<std::size_t>(day_of(r.time))].malleable_starts;
  for (std::size_t d = 0; d < days.size(); ++d)
    if (days[d].completed) days[d].avg_slowdown = sums[d] / static_cast<double>(days[d].completed);
  return days;
}

CategoryTable table_of(const std::vector<JobOutcome>& jobs, const MetricsOptions& options) {
  CategoryTable t;
  t.buckets = options.buckets;
  t.cells.assign(t.buckets.rows() * t.buckets.cols(), {});
  for (const auto& j : jobs) {
    CategoryCell& c = t.cells[t.buckets.node_bucket(j.nodes) * t.buckets.cols() + t.buckets.runtime_bucket(j.base_runtime)];
    ++c.count;
    c.avg_slowdown += slowdown(j, options);
    c.avg_runtime += static_cast<double>(j.runtime());
    c.avg_wait += static_cast<double>(j.wait());
  }
  for (auto& c : t.cells) {
    if (!c.count) continue;
    const auto n = static_cast<double>(c.count);
    c.avg_slowdown /= n;
    c.avg_runtime /= n;
    c.avg_wait /= n;
  }
  return t;
}

}  // namespace

SimReport summarize(const EventLog& log, const MetricsOptions& options) {
  const auto jobs = job_outcomes(log);
  if (jobs.empty()) throw MetricsError("log contains no jobs");
  SimReport rep;
  rep.job_count = jobs.size();
  Seconds first = std::numeric_limits<Seconds>::max(), last = std::numeric_limits<Seconds>::min();
  double response = 0, sd = 0, wait = 0;
  for (const auto& j : jobs) {
    first = std::min(first, j.submit);
    last = std::max(last, j.end);
    response += static_cast<double>(j.response());
    sd += slowdown(j, options);
    wait += static_cast<double>(j.wait());
    if (j.malleable_start) ++rep.malleable_starts;
  }
  const auto n = static_cast<double>(jobs.size());
  rep.makespan = last - first;
  rep.avg_response = response / n;
  rep.avg_slowdown = sd / n;
  rep.avg_wait = wait / n;

  std::set<JobId> mates;
  for (const LogRecord& r : log.records())
    if (r.kind == LogKind::malleable_start) mates.insert(r.mates.begin(), r.mates.end());
  rep.mate_jobs = mates.size();
  rep.daily = series_of(jobs, log, options);
  rep.categories = table_of(jobs, options);
  return rep;
}

std::vector<DayStat> daily_series(const EventLog& log, const MetricsOptions& options) {
  return series_of(job_outcomes(log), log, options);
}

CategoryTable categorize(const EventLog& log, const MetricsOptions& options) {
  return table_of(job_outcomes(log), options);
}

double ratio(double numerator, double denominator) {
  if (denominator == 0.0) return numerator == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return numerator / denominator;
}

Heatmap heatmap(const CategoryTable& table, const CategoryTable& baseline) {
  if (!(table.buckets == baseline.buckets) || table.cells.size() != baseline.cells.size())
    throw MetricsError("heatmap bucket mismatch");
  Heatmap h;
  h.buckets = table.buckets;
  h.cells.resize(table.cells.size());
  for (std::size_t i = 0; i < table.cells.size(); ++i) {
    const CategoryCell& b = baseline.cells[i];
    const CategoryCell& s = table.cells[i];
    HeatmapCell& c = h.cells[i];
    c.baseline_count = b.count;
    c.count = s.count;
    if (!b.count || !s.count) continue;
    c.slowdown_ratio = ratio(b.avg_slowdown, s.avg_slowdown);
    c.runtime_ratio = ratio(b.avg_runtime, s.avg_runtime);
    c.wait_ratio = ratio(b.avg_wait, s.avg_wait);
  }
  return h;
}

Heatmap heatmap(const EventLog& log, const EventLog& baseline, const MetricsOptions& options) {
  return heatmap(categorize(log, options), categorize(baseline, options));
}

}  // namespace sdsim
