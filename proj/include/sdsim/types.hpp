#pragma once

#include <cstdint>
#include <limits>

namespace sdsim {

/// Simulated time and durations, in whole seconds.
using Seconds = std::int64_t;
using JobId = std::int64_t;
using NodeId = int;

inline constexpr Seconds kForever = std::numeric_limits<Seconds>::max() / 4;

}  // namespace sdsim
