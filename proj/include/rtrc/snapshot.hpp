#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rtrc/lattice.hpp"
#include "rtrc/signal_phase.hpp"

namespace rtrc {

/// Reservoir readings at one time step.
struct ReservoirSnapshot {
    std::int64_t t = 0;
    std::vector<double> u;   // per junction: sum of incoming link densities
    std::vector<double> x1;  // u * cos^2(theta)
    std::vector<double> x2;  // u * sin^2(theta)
    std::vector<double> k;   // per link density
};

/// Builds a snapshot from per-link densities and the current phases.
ReservoirSnapshot make_snapshot(const Network& net, const PhaseBank& phases, std::vector<double> link_densities,
                                std::int64_t t);

/// Header `t,u_1..u_J,x1_1..x1_J,x2_1..x2_J,k_<from>_<to>...` (junctions 1-based).
void write_snapshot_header(std::ostream& os, const Network& net);
void write_snapshot_row(std::ostream& os, const ReservoirSnapshot& snap);

}  // namespace rtrc
