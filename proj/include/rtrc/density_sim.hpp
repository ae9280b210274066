#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rtrc/lattice.hpp"
#include "rtrc/signal_phase.hpp"
#include "rtrc/snapshot.hpp"

namespace rtrc {

/// Vehicle content Q per directed link.
struct DensityState {
    std::vector<double> q;

    double total() const;
};

enum class DensityInit : std::uint8_t { uniform, random };

/// Spreads `total_vehicles` over the links, either evenly or with
/// Dirichlet(1, ..., 1) proportions.
DensityState init_density(const Network& net, double total_vehicles, DensityInit mode, std::mt19937_64& rng);

/// Q / L for one link.
double link_density(const DensityState& state, const Network& net, LinkId link);
std::vector<double> link_densities(const DensityState& state, const Network& net);

struct DensityStep {
    DensityState state;
    ReservoirSnapshot snapshot;
};

/// One step of the free-flow density model under the current signal phases.
///
/// Every link on a "go" axis discharges min(Q/L, Q) into the exits of its
/// downstream junction, split by the turn table. The snapshot describes the
/// state before the move.
DensityStep step_density(const DensityState& state, const Network& net, const TurnTable& turns,
                         const PhaseBank& phases);

/// Owns the moving parts of one density-model run.
class DensitySimulation {
public:
    DensitySimulation(const Network& net, TurnTable turns, PhaseBank phases, DensityState state);

    /// Records the snapshot at the current step, moves the traffic and
    /// advances the phases with the optional external input.
    ReservoirSnapshot advance(std::optional<double> u_ext = std::nullopt);

    const DensityState& state() const { return state_; }
    const PhaseBank& phases() const { return phases_; }
    const TurnTable& turns() const { return turns_; }
    std::int64_t time() const { return t_; }

private:
    const Network* net_;
    TurnTable turns_;
    PhaseBank phases_;
    DensityState state_;
    std::int64_t t_ = 0;
};

}  // namespace rtrc
