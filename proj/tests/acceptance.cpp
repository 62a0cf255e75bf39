// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <sdsim/engine.hpp>
#include <sdsim/report_io.hpp>
#include <sdsim/runtime_model.hpp>
#include <sdsim/selection.hpp>

#include "test_support.hpp"

using namespace sdsim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
}

void skip(int id, const std::string& detail) { std::cout << "SKIP criterion " << id << ": " << detail << std::endl; }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// 1. select_mates against exhaustive search.
void selection_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240101);
  int mismatches = 0;
  int solved = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto in = fixtures::random_instance(rng, 12, 6);
    const auto fast = select_mates(in.required, in.new_job_end, in.candidates, in.free_nodes, in.params);
    const auto slow = brute_force_select(in.required, in.new_job_end, in.candidates, in.free_nodes, in.params);
    bool same = fast.has_value() == slow.has_value();
    if (same && fast) {
      ++solved;
      same = fast->performance_impact == slow->performance_impact && fast->mate_ids() == slow->mate_ids() &&
             fast->free_nodes_used == slow->free_nodes_used;
    }
    if (!same) ++mismatches;
  }
  const double t = seconds_since(t0);
  report(1, mismatches == 0 && t < 10.0,
         "1000 instances, " + std::to_string(solved) + " solvable, " + std::to_string(mismatches) +
             " mismatches, " + fmt(t) + " s");
}

// Progress rate computed straight from the definitions.
double direct_rate(const std::vector<int>& cores, int cpn, ModelKind model) {
  const double n = static_cast<double>(cores.size());
  if (model == ModelKind::ideal) {
    double sum = 0;
    for (int c : cores) sum += c;
    return sum / (n * cpn);
  }
  return static_cast<double>(*std::min_element(cores.begin(), cores.end())) / cpn;
}

// Runs the job one second at a time; full speed once the timeline ends.
Seconds stepping_increase(Seconds req, const std::vector<ConfigSlot>& timeline, int cpn, ModelKind model) {
  double work = 0;
  Seconds t = 0;
  const double target = static_cast<double>(req);
  for (const auto& slot : timeline) {
    const double rate = direct_rate(slot.cores, cpn, model);
    for (Seconds s = 0; s < slot.duration && work < target - 1e-9; ++s, ++t) work += rate;
    if (work >= target - 1e-9) return t - req;
  }
  while (work < target - 1e-9) {
    work += 1.0;
    ++t;
  }
  return t - req;
}

// 2. Model ordering and agreement with the stepping oracle.
void model_ordering() {
  const auto t0 = Clock::now();
  constexpr int cpn = 48;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> nodes_d(1, 4), slots_d(1, 4), cores_d(1, cpn);
  std::uniform_int_distribution<Seconds> req_d(1, 3000), dur_d(1, 2000);
  std::bernoulli_distribution full_node(0.2), full_timeline(0.1);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int nodes = nodes_d(rng);
    const Job job = fixtures::make_job(1, 0, nodes, req_d(rng), 1);
    const bool full = full_timeline(rng);
    std::vector<ConfigSlot> timeline;
    for (int s = slots_d(rng); s > 0; --s) {
      ConfigSlot slot{dur_d(rng), {}};
      for (int n = 0; n < nodes; ++n) slot.cores.push_back(full || full_node(rng) ? cpn : cores_d(rng));
      timeline.push_back(slot);
    }
    const Seconds ideal = predict_increase(job, cpn, timeline, ModelKind::ideal);
    const Seconds worst = predict_increase(job, cpn, timeline, ModelKind::worst_case);
    bool ok = ideal >= 0 && worst >= 0 && ideal <= worst;
    if (full) ok = ok && ideal == 0 && worst == 0;
    ok = ok && std::abs(ideal - stepping_increase(job.requested_time, timeline, cpn, ModelKind::ideal)) <= 1;
    ok = ok && std::abs(worst - stepping_increase(job.requested_time, timeline, cpn, ModelKind::worst_case)) <= 1;
    if (!ok) ++bad;
  }
  const double t = seconds_since(t0);
  report(2, bad == 0 && t < 10.0, "1000 timelines, " + std::to_string(bad) + " violations, " + fmt(t) + " s");
}

Workload contended_workload(double malleable_fraction) {
  SynthParams p;
  p.job_count = 600;
  p.max_nodes = 8;
  p.min_runtime = 60;
  p.max_runtime = 7200;
  p.interarrival_mean = 300;
  p.malleable_fraction = malleable_fraction;
  return gen_synthetic(p, fixtures::small_cluster(16), 3);
}

SimConfig small_config(Policy policy) {
  SimConfig c;
  c.cluster = fixtures::small_cluster(16);
  c.scheduler.policy = policy;
  c.scheduler.cutoff = CutoffPolicy::dynamic();
  c.check_invariants = true;
  return c;
}

// 3 and 4. One contended run, checked after every event.
void gating_and_conservation() {
  const Workload w = contended_workload(1.0);
  const RunResult r = run(w, small_config(Policy::sd));
  std::size_t mstarts = 0;
  std::size_t gate_violations = 0;
  for (const auto& rec : r.log.records()) {
    if (rec.kind != LogKind::malleable_start) continue;
    ++mstarts;
    if (!(rec.mall_end < rec.static_end)) ++gate_violations;
  }
  report(3, mstarts > 0 && gate_violations == 0,
         std::to_string(w.jobs.size()) + " jobs on 16 nodes, " + std::to_string(mstarts) + " malleable starts, " +
             std::to_string(gate_violations) + " with mall_end >= static_end");
  std::string first = r.violations.empty() ? "" : ", first: " + r.violations.front();
  report(4, r.violations.empty() && r.events > 0,
         std::to_string(r.events) + " events checked, " + std::to_string(r.violations.size()) + " violations" + first);
}

// 5. No malleable jobs: the sd policy must behave exactly like static.
void null_malleability() {
  const Workload w = contended_workload(0.0);
  const RunResult sd = run(w, small_config(Policy::sd));
  const RunResult st = run(w, small_config(Policy::static_backfill));
  const bool same = sd.log.str() == st.log.str();
  report(5, same, std::string("event logs ") + (same ? "identical" : "differ") + " over " +
                      std::to_string(sd.log.size()) + " records");
}

Workload large_workload() {
  SynthParams p;
  p.job_count = 5000;
  p.max_nodes = 128;
  p.min_runtime = 60;
  p.max_runtime = 36000;
  p.min_inflation = 1.0;
  p.max_inflation = 4.0;
  p.interarrival_mean = 450;
  p.malleable_fraction = 1.0;
  ClusterConfig c;
  c.node_count = 1024;
  return gen_synthetic(p, c, 1);
}

SimConfig large_config(Policy policy) {
  SimConfig c;
  c.cluster.node_count = 1024;
  c.scheduler.policy = policy;
  c.scheduler.cutoff = CutoffPolicy::dynamic();
  c.seed = 1;
  return c;
}

std::string report_json(const RunResult& r, const SimConfig& c) {
  std::ostringstream s;
  write_report_json(s, r, c);
  write_report_csv(s, r);
  return s.str();
}

struct LargeRun {
  std::string static_log, sd_log, static_report, sd_report;
};

// 6. Large synthetic comparison.
LargeRun directional() {
  const Workload w = large_workload();
  const SimConfig st_cfg = large_config(Policy::static_backfill);
  const SimConfig sd_cfg = large_config(Policy::sd);

  auto t0 = Clock::now();
  const RunResult st = run(w, st_cfg);
  const double t_st = seconds_since(t0);
  t0 = Clock::now();
  const RunResult sd = run(w, sd_cfg);
  const double t_sd = seconds_since(t0);

  const ReportRatios q = ratios(st.report, sd.report);
  report(6, q.avg_slowdown < 1.0 && q.makespan <= 1.02 && t_st < 120.0 && t_sd < 120.0,
         "slowdown " + fmt(st.report.avg_slowdown) + " -> " + fmt(sd.report.avg_slowdown) + " (ratio " +
             fmt(q.avg_slowdown) + "), makespan ratio " + fmt(q.makespan, 6) + ", " +
             std::to_string(sd.report.malleable_starts) + " malleable starts, runs " + fmt(t_st, 3) + " s / " +
             fmt(t_sd, 3) + " s");
  return {st.log.str(), sd.log.str(), report_json(st, st_cfg), report_json(sd, sd_cfg)};
}

// 8. The same runs again.
void determinism(const LargeRun& first) {
  const Workload w = large_workload();
  const SimConfig st_cfg = large_config(Policy::static_backfill);
  const SimConfig sd_cfg = large_config(Policy::sd);
  const RunResult st = run(w, st_cfg);
  const RunResult sd = run(w, sd_cfg);
  const bool logs = st.log.str() == first.static_log && sd.log.str() == first.sd_log;
  const bool reports = report_json(st, st_cfg) == first.static_report && report_json(sd, sd_cfg) == first.sd_report;
  report(8, logs && reports,
         std::string("repeated static and sd runs: logs ") + (logs ? "identical" : "differ") + ", reports " +
             (reports ? "identical" : "differ"));
}

// 7. Public trace replay, only when the trace is supplied.
void trace_replay() {
  const char* path = std::getenv("SDSIM_CURIE_SWF");
  if (!path || !*path) {
    skip(7, "set SDSIM_CURIE_SWF to the CEA-Curie SWF to run the trace replay");
    return;
  }
  const auto t0 = Clock::now();
  ClusterConfig cluster;
  cluster.node_count = 5040;
  cluster.sockets_per_node = 2;
  cluster.cores_per_socket = 8;
  std::ifstream in(path);
  if (!in) {
    report(7, false, std::string("cannot open ") + path);
    return;
  }
  const Workload w = parse_swf(in, cluster, SwfOptions{1.0, 1, 1});

  SimConfig st_cfg;
  st_cfg.cluster = cluster;
  st_cfg.scheduler.policy = Policy::static_backfill;
  SimConfig sd_cfg = st_cfg;
  sd_cfg.scheduler.policy = Policy::sd;
  sd_cfg.scheduler.cutoff = CutoffPolicy::fixed(10.0);
  const CompareResult r = replay_compare(w, st_cfg, sd_cfg);

  constexpr double kMakespan = 21615111.0;
  const double mk = static_cast<double>(r.a.report.makespan);
  const double frac =
      static_cast<double>(r.b.report.malleable_starts) / static_cast<double>(std::max<std::size_t>(1, w.jobs.size()));
  const double t = seconds_since(t0);
  const bool ok = std::abs(mk - kMakespan) <= 0.15 * kMakespan &&
                  r.b.report.avg_slowdown < r.a.report.avg_slowdown && frac >= 0.05 && frac <= 0.20;
  report(7, ok,
         std::to_string(w.jobs.size()) + " jobs, static makespan " + fmt(mk, 10) + " (target 21615111 +-15%), slowdown " +
             fmt(r.a.report.avg_slowdown) + " -> " + fmt(r.b.report.avg_slowdown) + ", malleable fraction " +
             fmt(frac * 100, 3) + "%, " + fmt(t, 4) + " s");
}

}  // namespace

int main() {
  try {
    selection_oracle();
    model_ordering();
    gating_and_conservation();
    null_malleability();
    const LargeRun large = directional();
    trace_replay();
    determinism(large);
  } catch (const std::exception& e) {
    std::cout << "FAIL: unexpected error: " << e.what() << std::endl;
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
