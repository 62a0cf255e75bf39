#pragma once

#include <ostream>

#include "sdsim/cluster.hpp"
#include "sdsim/workload.hpp"

namespace sdsim {

/// Writes `workload` as SWF. Fields the simulator reads are filled in (job
/// number, submit, run time, processors, requested processors and time);
/// every other field is -1. Malleability is not part of the format.
void write_swf(std::ostream& out, const Workload& workload, const ClusterConfig& cluster);

}  // namespace sdsim
