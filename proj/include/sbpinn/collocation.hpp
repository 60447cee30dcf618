#pragma once

#include "sbpinn/diffnet.hpp"

#include <vector>

namespace sbpinn {

/// Training points in Omega = [x_lo, x_hi] x [0, T]: interior space-time
/// points, the t = 0 and t = T lines, and optionally points on the two walls
/// x = x_lo and x = x_hi.
struct CollocationSet {
    std::vector<SpaceTime> interior;
    std::vector<SpaceTime> initial;
    std::vector<SpaceTime> terminal;
    std::vector<SpaceTime> wall;
};

}  // namespace sbpinn
