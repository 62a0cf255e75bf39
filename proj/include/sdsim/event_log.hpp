#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "sdsim/types.hpp"

namespace sdsim {

enum class LogKind { submit, start, malleable_start, shrink, expand, end };

const char* to_string(LogKind kind);

/// One line of the event log. Only the fields relevant to `kind` are set.
struct LogRecord {
  Seconds time = 0;
  LogKind kind = LogKind::submit;
  JobId job = 0;

  // submit
  int requested_nodes = 0;
  Seconds requested_time = 0;
  Seconds base_runtime = 0;
  bool malleable = false;

  // start, malleable_start
  std::vector<NodeId> nodes;

  // malleable_start
  std::vector<JobId> mates;
  std::vector<NodeId> free_nodes;
  double performance_impact = 0.0;
  /// Predicted end of the static alternative, relative to `time`.
  Seconds static_end = 0;
  /// Predicted end when started now with mates, relative to `time`.
  Seconds mall_end = 0;
  double cutoff = 0.0;

  // shrink, expand
  NodeId node = 0;
  int cores_from = 0;
  int cores_to = 0;
  JobId cause = 0;
};

/// Append-only record of everything the simulator decided, in processing
/// order. Rendered one record per line:
///
///   <time> SUBMIT job=<id> nodes=<n> req=<s> runtime=<s> malleable=<0|1>
///   <time> START job=<id> nodes=<a,b,..>
///   <time> MSTART job=<id> nodes=<..> mates=<..> free=<..> pi=<x> cutoff=<x> static_end=<s> mall_end=<s>
///   <time> SHRINK job=<id> node=<n> cores=<from>-><to> for=<id>
///   <time> EXPAND job=<id> node=<n> cores=<from>-><to> after=<id>
///   <time> END job=<id>
class EventLog {
 public:
  void append(LogRecord record) { records_.push_back(std::move(record)); }
  const std::vector<LogRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  void write(std::ostream& out) const;
  std::string str() const;

 private:
  std::vector<LogRecord> records_;
};

std::string format_record(const LogRecord& record);

}  // namespace sdsim
