#include "sdsim/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace sdsim {

namespace {

constexpr std::size_t kSwfFields = 18;
constexpr std::uint64_t kMalleabilityStream = 0x9e3779b97f4a7c15ULL;

// Uniform in [0, 1) from the top 53 bits, identical on every platform.
double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string with_line(const std::string& what, std::size_t line) {
  if (line == 0) return what;
  return "line " + std::to_string(line) + ": " + what;
}

bool parse_number(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

void sort_and_number(std::vector<Job>& jobs) {
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    return a.submit_time != b.submit_time ? a.submit_time < b.submit_time : a.id < b.id;
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) jobs[i].priority = static_cast<std::int64_t>(i);
}

}  // namespace

WorkloadError::WorkloadError(const std::string& what, std::size_t line)
    : std::runtime_error(with_line(what, line)), line_(line) {}

void validate_job(const Job& job, const ClusterConfig& cluster) {
  if (job.id <= 0) throw WorkloadError("job id must be positive");
  if (job.submit_time < 0) throw WorkloadError("job " + std::to_string(job.id) + ": negative submit time");
  if (job.base_runtime < 1 || job.requested_time < 1)
    throw WorkloadError("job " + std::to_string(job.id) + ": runtimes must be at least one second");
  if (job.requested_nodes < 1 || job.requested_nodes > cluster.node_count)
    throw WorkloadError("job " + std::to_string(job.id) + " requests " + std::to_string(job.requested_nodes) +
                        " nodes on a " + std::to_string(cluster.node_count) + "-node cluster");
  if (job.ranks_per_node < 1 || job.ranks_per_node > cluster.cores_per_node())
    throw WorkloadError("job " + std::to_string(job.id) + ": ranks per node outside [1, cores per node]");
}

void assign_malleability(std::vector<Job>& jobs, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw WorkloadError("malleable fraction must lie in [0, 1]");
  std::mt19937_64 rng(seed ^ kMalleabilityStream);
  for (Job& job : jobs) job.malleable = unit_draw(rng) < fraction;
}

Workload parse_swf(std::istream& in, const ClusterConfig& cluster, const SwfOptions& options) {
  cluster.validate();
  if (options.ranks_per_node < 1 || options.ranks_per_node > cluster.cores_per_node())
    throw WorkloadError("ranks per node must lie in [1, cores per node]");

  Workload out;
  out.meta.source = WorkloadSource::swf;
  out.meta.system_nodes = cluster.node_count;
  out.meta.system_cores = cluster.total_cores();

  const int cpn = cluster.cores_per_node();
  std::string text;
  std::size_t line_no = 0;
  std::vector<double> fields;
  fields.reserve(kSwfFields);
  while (std::getline(in, text)) {
    ++line_no;
    std::string_view line(text);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == ';') continue;

    fields.clear();
    std::size_t pos = first;
    while (pos < line.size()) {
      auto end = line.find_first_of(" \t\r", pos);
      if (end == std::string_view::npos) end = line.size();
      double value = 0;
      if (!parse_number(line.substr(pos, end - pos), value))
        throw WorkloadError("non-numeric field '" + std::string(line.substr(pos, end - pos)) + "'", line_no);
      fields.push_back(value);
      pos = line.find_first_not_of(" \t\r", end);
      if (pos == std::string_view::npos) break;
    }
    if (fields.size() != kSwfFields)
      throw WorkloadError("expected 18 fields, found " + std::to_string(fields.size()), line_no);

    const auto id = static_cast<JobId>(std::llround(fields[0]));
    const auto submit = static_cast<Seconds>(std::llround(fields[1]));
    const auto run_time = static_cast<Seconds>(std::llround(fields[3]));
    const auto allocated = static_cast<std::int64_t>(std::llround(fields[4]));
    const auto requested_procs = static_cast<std::int64_t>(std::llround(fields[7]));
    const auto requested_time = static_cast<Seconds>(std::llround(fields[8]));

    const std::int64_t procs = requested_procs > 0 ? requested_procs : allocated;
    if (run_time <= 0 || procs <= 0) {
      ++out.meta.dropped;
      continue;
    }
    if (id <= 0) throw WorkloadError("job id must be positive", line_no);
    if (submit < 0) throw WorkloadError("negative submit time", line_no);

    Job job;
    job.id = id;
    job.submit_time = submit;
    job.base_runtime = run_time;
    job.requested_time = requested_time > 0 ? requested_time : run_time;
    const std::int64_t nodes = (procs + cpn - 1) / cpn;
    if (nodes > cluster.node_count)
      throw WorkloadError("job " + std::to_string(id) + " needs " + std::to_string(nodes) + " nodes, cluster has " +
                              std::to_string(cluster.node_count),
                          line_no);
    job.requested_nodes = static_cast<int>(nodes);
    job.ranks_per_node = options.ranks_per_node;
    out.jobs.push_back(job);
  }

  if (out.jobs.empty()) throw WorkloadError("workload is empty after filtering");
  sort_and_number(out.jobs);
  assign_malleability(out.jobs, options.malleable_fraction, options.seed);
  out.meta.job_count = out.jobs.size();
  return out;
}

Workload gen_synthetic(const SynthParams& p, const ClusterConfig& cluster, std::uint64_t seed) {
  cluster.validate();
  if (p.job_count < 1) throw WorkloadError("job count must be at least 1");
  if (p.min_nodes < 1 || p.min_nodes > p.max_nodes) throw WorkloadError("invalid node range");
  if (p.max_nodes > cluster.node_count) throw WorkloadError("node range exceeds cluster size");
  if (p.min_runtime < 1 || p.min_runtime > p.max_runtime) throw WorkloadError("invalid runtime range");
  if (!(p.min_inflation >= 1.0) || p.min_inflation > p.max_inflation)
    throw WorkloadError("invalid estimate inflation range (must be >= 1)");
  if (!(p.interarrival_mean > 0.0)) throw WorkloadError("interarrival mean must be positive");
  if (p.ranks_per_node < 1 || p.ranks_per_node > cluster.cores_per_node())
    throw WorkloadError("ranks per node must lie in [1, cores per node]");

  std::mt19937_64 rng(seed);
  const double log_lo = std::log(static_cast<double>(p.min_nodes));
  const double log_hi = std::log(static_cast<double>(p.max_nodes) + 1.0);

  Workload out;
  out.meta.source = WorkloadSource::synthetic;
  out.meta.system_nodes = cluster.node_count;
  out.meta.system_cores = cluster.total_cores();
  out.jobs.reserve(p.job_count);

  Seconds clock = 0;
  for (std::size_t i = 0; i < p.job_count; ++i) {
    if (i > 0) clock += static_cast<Seconds>(std::llround(-p.interarrival_mean * std::log1p(-unit_draw(rng))));

    Job job;
    job.id = static_cast<JobId>(i + 1);
    job.submit_time = clock;

    const double draw = std::exp(log_lo + (log_hi - log_lo) * unit_draw(rng));
    job.requested_nodes = std::clamp(static_cast<int>(draw), p.min_nodes, p.max_nodes);

    const auto span = static_cast<double>(p.max_runtime - p.min_runtime + 1);
    job.base_runtime = std::min(p.max_runtime, p.min_runtime + static_cast<Seconds>(span * unit_draw(rng)));

    const double factor = p.min_inflation + (p.max_inflation - p.min_inflation) * unit_draw(rng);
    job.requested_time = std::max<Seconds>(
        job.base_runtime, static_cast<Seconds>(std::ceil(static_cast<double>(job.base_runtime) * factor)));
    job.ranks_per_node = p.ranks_per_node;
    out.jobs.push_back(job);
  }

  sort_and_number(out.jobs);
  assign_malleability(out.jobs, p.malleable_fraction, seed);
  out.meta.job_count = out.jobs.size();
  return out;
}

}  // namespace sdsim
