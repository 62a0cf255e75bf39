#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "sdsim/engine.hpp"
#include "sdsim/metrics.hpp"

namespace sdsim {

std::string node_bucket_label(const Buckets& b, std::size_t row);
std::string runtime_bucket_label(const Buckets& b, std::size_t col);

/// Headline metrics plus scheduler counters, one `metric,value` row each.
void write_report_csv(std::ostream& out, const RunResult& result);
void write_report_json(std::ostream& out, const RunResult& result, const SimConfig& config);
/// node_bucket,runtime_bucket,count,avg_slowdown,avg_runtime,avg_wait;
/// averages are blank for empty cells.
void write_heatmap_csv(std::ostream& out, const CategoryTable& table);
/// day,completed,avg_slowdown,malleable_starts
void write_daily_csv(std::ostream& out, const std::vector<DayStat>& days);

/// metric,a,b,ratio with ratio = b / a.
void write_ratios_csv(std::ostream& out, const CompareResult& result);
/// node_bucket,runtime_bucket,baseline_count,count,slowdown_ratio,runtime_ratio,wait_ratio
void write_heatmap_ratio_csv(std::ostream& out, const Heatmap& map);

/// events.log, report.json, report.csv, heatmap.csv and daily.csv in `dir`.
void write_run_outputs(const std::filesystem::path& dir, const RunResult& result, const SimConfig& config);

/// a/ and b/ run outputs plus ratios.csv and heatmap.csv with per-category
/// ratios in `dir`.
void write_compare_outputs(const std::filesystem::path& dir, const CompareResult& result, const SimConfig& a,
                           const SimConfig& b);

}  // namespace sdsim
