#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rtrc/lattice.hpp"
#include "rtrc/signal_phase.hpp"
#include "rtrc/snapshot.hpp"

namespace rtrc {

/// Optimal-velocity car-following parameters.
struct OVParams {
    double sensitivity = 1.0;  // a, 1/time
    double v_scale = 2.0;
    double offset = 2.0;  // c, headway at the inflection point
    double width = 1.0;   // w
    double dt = 0.1;
    double d_min = 0.1;
    double horizon = 1.0e3;  // headway used for a leader facing green
    int substeps = 10;       // Euler steps per reservoir sample

    void validate() const;
    double max_speed() const;
};

/// V(h) = (v_scale/2) * (tanh((h - c)/w) + tanh(c/w)). Throws for h < 0.
double ov_velocity(double headway, const OVParams& p);

struct Agent {
    LinkId link = 0;
    double x = 0.0;
    double v = 0.0;
    /// Exit chosen for the next junction crossing, kept while blocked.
    std::optional<LinkId> next;
};

/// Agents grouped by link, each group ordered front (largest x) to back.
class AgentState {
public:
    AgentState() = default;
    explicit AgentState(std::size_t link_count) : lanes_(link_count) {}

    std::vector<std::vector<Agent>>& lanes() { return lanes_; }
    const std::vector<std::vector<Agent>>& lanes() const { return lanes_; }
    const std::vector<Agent>& lane(LinkId l) const { return lanes_.at(static_cast<std::size_t>(l)); }

    std::size_t count() const;

private:
    std::vector<std::vector<Agent>> lanes_;
};

/// `per_link` agents evenly spaced on every link, moving at V(spacing).
AgentState place_agents(const Network& net, int per_link, const OVParams& p);

/// One Euler substep of all agents under the current signals.
void step_agents(AgentState& agents, const Network& net, const TurnTable& turns, const PhaseBank& phases,
                 const OVParams& p, std::mt19937_64& rng);

/// Agent count over link length.
std::vector<double> agent_link_densities(const AgentState& agents, const Network& net);

class AgentSimulation {
public:
    AgentSimulation(const Network& net, TurnTable turns, PhaseBank phases, AgentState agents, OVParams params,
                    std::uint64_t seed);

    /// Snapshot at the current reservoir step, then `substeps` Euler steps and
    /// one phase step.
    ReservoirSnapshot advance(std::optional<double> u_ext = std::nullopt);

    const AgentState& agents() const { return agents_; }
    const PhaseBank& phases() const { return phases_; }
    std::int64_t time() const { return t_; }

private:
    const Network* net_;
    TurnTable turns_;
    PhaseBank phases_;
    AgentState agents_;
    OVParams params_;
    std::mt19937_64 rng_;
    std::int64_t t_ = 0;
};

}  // namespace rtrc
