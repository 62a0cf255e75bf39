#include "sdsim/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>

#include "json.hpp"

namespace sdsim {

namespace {

using nlohmann::ordered_json;

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }

ordered_json json_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

ordered_json json_opt(const std::optional<double>& v) { return v ? json_num(*v) : ordered_json(nullptr); }

const char* policy_name(Policy p) { return p == Policy::sd ? "sd" : "static"; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string node_bucket_label(const Buckets& b, std::size_t row) {
  const int lo = row == 0 ? 1 : b.nodes[row - 1] + 1;
  if (row == b.nodes.size()) return std::to_string(lo) + "+";
  return std::to_string(lo) + "-" + std::to_string(b.nodes[row]);
}

std::string runtime_bucket_label(const Buckets& b, std::size_t col) {
  if (col == b.runtime.size()) return ">" + std::to_string(b.runtime.back());
  if (col == 0) return "<=" + std::to_string(b.runtime[0]);
  return std::to_string(b.runtime[col - 1] + 1) + "-" + std::to_string(b.runtime[col]);
}

void write_report_csv(std::ostream& out, const RunResult& r) {
  const SimReport& s = r.report;
  out << "metric,value\n"
      << "job_count," << s.job_count << '\n'
      << "makespan," << s.makespan << '\n'
      << "avg_response," << num(s.avg_response) << '\n'
      << "avg_slowdown," << num(s.avg_slowdown) << '\n'
      << "avg_wait," << num(s.avg_wait) << '\n'
      << "malleable_starts," << s.malleable_starts << '\n'
      << "mate_jobs," << s.mate_jobs << '\n'
      << "static_starts," << r.stats.static_starts << '\n'
      << "scheduler_passes," << r.stats.passes << '\n';
}

void write_report_json(std::ostream& out, const RunResult& r, const SimConfig& c) {
  const SimReport& s = r.report;
  ordered_json j;
  j["job_count"] = s.job_count;
  j["makespan"] = s.makespan;
  j["avg_response"] = s.avg_response;
  j["avg_slowdown"] = s.avg_slowdown;
  j["avg_wait"] = s.avg_wait;
  j["malleable_starts"] = s.malleable_starts;
  j["mate_jobs"] = s.mate_jobs;

  ordered_json days = ordered_json::array();
  for (const DayStat& d : s.daily)
    days.push_back({{"day", d.day},
                    {"completed", d.completed},
                    {"avg_slowdown", json_opt(d.avg_slowdown)},
                    {"malleable_starts", d.malleable_starts}});
  j["daily"] = days;

  ordered_json cells = ordered_json::array();
  const Buckets& b = s.categories.buckets;
  for (std::size_t row = 0; row < b.rows(); ++row)
    for (std::size_t col = 0; col < b.cols(); ++col) {
      const CategoryCell& cell = s.categories.at(row, col);
      ordered_json e{{"nodes", node_bucket_label(b, row)}, {"runtime", runtime_bucket_label(b, col)}, {"count", cell.count}};
      if (cell.count) {
        e["avg_slowdown"] = cell.avg_slowdown;
        e["avg_runtime"] = cell.avg_runtime;
        e["avg_wait"] = cell.avg_wait;
      }
      cells.push_back(e);
    }
  j["categories"] = cells;

  j["scheduler"] = {{"passes", r.stats.passes},
                    {"static_starts", r.stats.static_starts},
                    {"malleable_starts", r.stats.malleable_starts},
                    {"gate_rejections", r.stats.gate_rejections},
                    {"no_solution", r.stats.no_solution},
                    {"recheck_rejections", r.stats.recheck_rejections},
                    {"safety_rejections", r.stats.safety_rejections}};

  const auto& sc = c.scheduler;
  ordered_json cfg;
  cfg["nodes"] = c.cluster.node_count;
  cfg["sockets"] = c.cluster.sockets_per_node;
  cfg["cores_per_socket"] = c.cluster.cores_per_socket;
  cfg["max_residents"] = c.cluster.max_residents;
  cfg["policy"] = policy_name(sc.policy);
  cfg["easy"] = sc.depth == ReservationDepth::easy;
  cfg["max_slowdown"] = sc.cutoff.is_dynamic() ? ordered_json("dyn") : json_num(sc.cutoff.value());
  cfg["runtime_model"] = c.model == ModelKind::ideal ? "ideal" : "worst";
  cfg["sharing_factor"] = c.sharing.value();
  cfg["max_mates"] = sc.selection.max_mates;
  cfg["candidate_cap"] = sc.selection.candidate_cap;
  cfg["use_free_nodes"] = sc.selection.use_free_nodes;
  cfg["backfill_interval"] = c.backfill_interval;
  cfg["seed"] = c.seed;
  cfg["bounded_slowdown"] = c.metrics.bounded_slowdown ? ordered_json(*c.metrics.bounded_slowdown) : ordered_json(nullptr);
  j["config"] = cfg;
  if (c.check_invariants) j["invariant_violations"] = r.violations.size();

  out << j.dump(2) << '\n';
}

void write_heatmap_csv(std::ostream& out, const CategoryTable& t) {
  out << "node_bucket,runtime_bucket,count,avg_slowdown,avg_runtime,avg_wait\n";
  for (std::size_t row = 0; row < t.buckets.rows(); ++row)
    for (std::size_t col = 0; col < t.buckets.cols(); ++col) {
      const CategoryCell& c = t.at(row, col);
      out << node_bucket_label(t.buckets, row) << ',' << runtime_bucket_label(t.buckets, col) << ',' << c.count;
      if (c.count)
        out << ',' << num(c.avg_slowdown) << ',' << num(c.avg_runtime) << ',' << num(c.avg_wait) << '\n';
      else
        out << ",,,\n";
    }
}

void write_daily_csv(std::ostream& out, const std::vector<DayStat>& days) {
  out << "day,completed,avg_slowdown,malleable_starts\n";
  for (const DayStat& d : days)
    out << d.day << ',' << d.completed << ',' << opt(d.avg_slowdown) << ',' << d.malleable_starts << '\n';
}

void write_ratios_csv(std::ostream& out, const CompareResult& r) {
  const SimReport& a = r.a.report;
  const SimReport& b = r.b.report;
  out << "metric,a,b,ratio\n"
      << "makespan," << a.makespan << ',' << b.makespan << ',' << num(r.ratios.makespan) << '\n'
      << "avg_response," << num(a.avg_response) << ',' << num(b.avg_response) << ',' << num(r.ratios.avg_response) << '\n'
      << "avg_slowdown," << num(a.avg_slowdown) << ',' << num(b.avg_slowdown) << ',' << num(r.ratios.avg_slowdown) << '\n'
      << "avg_wait," << num(a.avg_wait) << ',' << num(b.avg_wait) << ',' << num(r.ratios.avg_wait) << '\n';
}

void write_heatmap_ratio_csv(std::ostream& out, const Heatmap& h) {
  out << "node_bucket,runtime_bucket,baseline_count,count,slowdown_ratio,runtime_ratio,wait_ratio\n";
  for (std::size_t row = 0; row < h.buckets.rows(); ++row)
    for (std::size_t col = 0; col < h.buckets.cols(); ++col) {
      const HeatmapCell& c = h.at(row, col);
      out << node_bucket_label(h.buckets, row) << ',' << runtime_bucket_label(h.buckets, col) << ','
          << c.baseline_count << ',' << c.count << ',' << opt(c.slowdown_ratio) << ',' << opt(c.runtime_ratio) << ','
          << opt(c.wait_ratio) << '\n';
    }
}

void write_run_outputs(const std::filesystem::path& dir, const RunResult& r, const SimConfig& c) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "events.log");
    r.log.write(out);
  }
  {
    auto out = open_out(dir / "report.json");
    write_report_json(out, r, c);
  }
  {
    auto out = open_out(dir / "report.csv");
    write_report_csv(out, r);
  }
  {
    auto out = open_out(dir / "heatmap.csv");
    write_heatmap_csv(out, r.report.categories);
  }
  {
    auto out = open_out(dir / "daily.csv");
    write_daily_csv(out, r.report.daily);
  }
}

void write_compare_outputs(const std::filesystem::path& dir, const CompareResult& r, const SimConfig& a,
                           const SimConfig& b) {
  write_run_outputs(dir / "a", r.a, a);
  write_run_outputs(dir / "b", r.b, b);
  {
    auto out = open_out(dir / "ratios.csv");
    write_ratios_csv(out, r);
  }
  {
    auto out = open_out(dir / "heatmap.csv");
    write_heatmap_ratio_csv(out, r.heatmap);
  }
}

}  // namespace sdsim
