#include "sdsim/event_log.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace sdsim {

const char* to_string(LogKind kind) {
  switch (kind) {
    case LogKind::submit: return "SUBMIT";
    case LogKind::start: return "START";
    case LogKind::malleable_start: return "MSTART";
    case LogKind::shrink: return "SHRINK";
    case LogKind::expand: return "EXPAND";
    case LogKind::end: return "END";
  }
  return "?";
}

namespace {

template <typename T>
void join(std::ostream& out, const std::vector<T>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) out << (i ? "," : "") << items[i];
}

std::string fixed6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string format_record(const LogRecord& r) {
  std::ostringstream out;
  out << r.time << ' ' << to_string(r.kind) << " job=" << r.job;
  switch (r.kind) {
    case LogKind::submit:
      out << " nodes=" << r.requested_nodes << " req=" << r.requested_time << " runtime=" << r.base_runtime
          << " malleable=" << (r.malleable ? 1 : 0);
      break;
    case LogKind::start:
      out << " nodes=";
      join(out, r.nodes);
      break;
    case LogKind::malleable_start:
      out << " nodes=";
      join(out, r.nodes);
      out << " mates=";
      join(out, r.mates);
      out << " free=";
      join(out, r.free_nodes);
      out << " pi=" << fixed6(r.performance_impact) << " cutoff=" << fixed6(r.cutoff)
          << " static_end=" << r.static_end << " mall_end=" << r.mall_end;
      break;
    case LogKind::shrink:
      out << " node=" << r.node << " cores=" << r.cores_from << "->" << r.cores_to << " for=" << r.cause;
      break;
    case LogKind::expand:
      out << " node=" << r.node << " cores=" << r.cores_from << "->" << r.cores_to << " after=" << r.cause;
      break;
    case LogKind::end:
      break;
  }
  return out.str();
}

void EventLog::write(std::ostream& out) const {
  for (const auto& r : records_) out << format_record(r) << '\n';
}

std::string EventLog::str() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

}  // namespace sdsim
