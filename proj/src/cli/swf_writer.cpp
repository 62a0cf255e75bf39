#include "sdsim/swf_writer.hpp"

namespace sdsim {

void write_swf(std::ostream& out, const Workload& workload, const ClusterConfig& cluster) {
  out << "; Version: 2.2\n"
      << "; Computer: sdsim synthetic\n"
      << "; MaxJobs: " << workload.jobs.size() << '\n'
      << "; MaxRecords: " << workload.jobs.size() << '\n'
      << "; MaxNodes: " << cluster.node_count << '\n'
      << "; MaxProcs: " << cluster.total_cores() << '\n';
  const int cpn = cluster.cores_per_node();
  for (const Job& j : workload.jobs) {
    const long long procs = static_cast<long long>(j.requested_nodes) * cpn;
    // 1 job, 2 submit, 3 wait, 4 run, 5 procs, 6 cpu, 7 mem, 8 req procs,
    // 9 req time, 10 req mem, 11 status, 12 user, 13 group, 14 app,
    // 15 queue, 16 partition, 17 preceding job, 18 think time
    out << j.id << ' ' << j.submit_time << " -1 " << j.base_runtime << ' ' << procs << " -1 -1 " << procs << ' '
        << j.requested_time << " -1 1 -1 -1 -1 -1 -1 -1 -1\n";
  }
}

}  // namespace sdsim
