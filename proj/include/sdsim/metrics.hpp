#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "sdsim/event_log.hpp"
#include "sdsim/types.hpp"

namespace sdsim {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Upper bucket edges, inclusive. A final open bucket catches the rest.
struct Buckets {
  std::vector<int> nodes{2, 8, 32, 128, 512};
  std::vector<Seconds> runtime{3600, 14400, 43200, 86400};

  std::size_t node_bucket(int n) const;
  std::size_t runtime_bucket(Seconds r) const;
  std::size_t rows() const { return nodes.size() + 1; }
  std::size_t cols() const { return runtime.size() + 1; }
  friend bool operator==(const Buckets&, const Buckets&) = default;
};

struct MetricsOptions {
  /// Bounded slowdown threshold; unset means raw slowdown.
  std::optional<Seconds> bounded_slowdown;
  Buckets buckets;
};

/// Outcome of one job, reconstructed from the log.
struct JobOutcome {
  JobId job = 0;
  Seconds submit = 0;
  Seconds start = 0;
  Seconds end = 0;
  int nodes = 0;
  Seconds base_runtime = 0;
  bool malleable_start = false;

  Seconds wait() const { return start - submit; }
  Seconds response() const { return end - submit; }
  Seconds runtime() const { return end - start; }
};

struct DayStat {
  int day = 0;
  std::size_t completed = 0;
  /// Unset on days where nothing completed.
  std::optional<double> avg_slowdown;
  std::size_t malleable_starts = 0;
};

struct CategoryCell {
  std::size_t count = 0;
  double avg_slowdown = 0.0;
  double avg_runtime = 0.0;
  double avg_wait = 0.0;
};

/// Row-major over node buckets x runtime buckets (by base runtime).
struct CategoryTable {
  Buckets buckets;
  std::vector<CategoryCell> cells;

  const CategoryCell& at(std::size_t row, std::size_t col) const { return cells[row * buckets.cols() + col]; }
};

struct SimReport {
  std::size_t job_count = 0;
  Seconds makespan = 0;
  double avg_response = 0.0;
  double avg_slowdown = 0.0;
  double avg_wait = 0.0;
  std::size_t malleable_starts = 0;
  /// Distinct jobs that were shrunk for someone else at least once.
  std::size_t mate_jobs = 0;
  std::vector<DayStat> daily;
  CategoryTable categories;
};

std::vector<JobOutcome> job_outcomes(const EventLog& log);
double slowdown(const JobOutcome& job, const MetricsOptions& options);

SimReport summarize(const EventLog& log, const MetricsOptions& options = {});
std::vector<DayStat> daily_series(const EventLog& log, const MetricsOptions& options = {});
CategoryTable categorize(const EventLog& log, const MetricsOptions& options = {});

/// Ratios baseline / other per category. Unset where either side has no
/// jobs; x / 0 is infinity and 0 / 0 is 1.
struct HeatmapCell {
  std::size_t baseline_count = 0;
  std::size_t count = 0;
  std::optional<double> slowdown_ratio;
  std::optional<double> runtime_ratio;
  std::optional<double> wait_ratio;
};

struct Heatmap {
  Buckets buckets;
  std::vector<HeatmapCell> cells;

  const HeatmapCell& at(std::size_t row, std::size_t col) const { return cells[row * buckets.cols() + col]; }
};

Heatmap heatmap(const CategoryTable& table, const CategoryTable& baseline);
Heatmap heatmap(const EventLog& log, const EventLog& baseline, const MetricsOptions& options = {});

double ratio(double numerator, double denominator);

}  // namespace sdsim
