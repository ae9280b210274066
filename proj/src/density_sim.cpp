#include "rtrc/density_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rtrc {

double DensityState::total() const { return std::accumulate(q.begin(), q.end(), 0.0); }

DensityState init_density(const Network& net, double total_vehicles, DensityInit mode, std::mt19937_64& rng) {
    if (!(total_vehicles > 0.0) || !std::isfinite(total_vehicles))
        throw std::invalid_argument("total vehicle count must be positive");
    const auto m = static_cast<std::size_t>(net.link_count());
    DensityState s;
    if (m == 0) {
        throw std::invalid_argument("network has no links to hold vehicles");
    }
    if (mode == DensityInit::uniform) {
        s.q.assign(m, total_vehicles / static_cast<double>(m));
        return s;
    }
    std::exponential_distribution<double> gamma1(1.0);
    s.q.resize(m);
    for (auto& x : s.q) x = gamma1(rng);
    const double sum = std::accumulate(s.q.begin(), s.q.end(), 0.0);
    for (auto& x : s.q) x = x / sum * total_vehicles;
    // absorb the normalisation residue in the largest entry
    const double residue = total_vehicles - s.total();
    *std::max_element(s.q.begin(), s.q.end()) += residue;
    return s;
}

double link_density(const DensityState& state, const Network& net, LinkId link) {
    return state.q.at(static_cast<std::size_t>(link)) / net.link(link).length;
}

std::vector<double> link_densities(const DensityState& state, const Network& net) {
    std::vector<double> k(state.q.size());
    for (std::size_t l = 0; l < k.size(); ++l) k[l] = state.q[l] / net.links()[l].length;
    return k;
}

DensityStep step_density(const DensityState& state, const Network& net, const TurnTable& turns,
                         const PhaseBank& phases) {
    if (static_cast<int>(state.q.size()) != net.link_count())
        throw std::invalid_argument("density state does not match network");

    DensityStep out;
    out.snapshot = make_snapshot(net, phases, link_densities(state, net), phases.time());
    out.state = state;
    auto& next = out.state.q;

    for (const auto& link : net.links()) {
        const auto l = static_cast<std::size_t>(link.id);
        const double q = state.q[l];
        if (q <= 0.0) continue;
        const auto light = phases.state(static_cast<std::size_t>(link.to)).for_axis(axis_of(link.heading));
        if (light == Light::stop) continue;

        const double outflow = std::min(q / link.length, q);
        next[l] -= outflow;
        const auto& row = turns.row(link.id);
        double given = 0.0;
        for (std::size_t e = 0; e + 1 < row.size(); ++e) {
            const double share = outflow * row[e].weight;
            next[static_cast<std::size_t>(row[e].out)] += share;
            given += share;
        }
        // the last exit takes the remainder so the split is exact
        if (!row.empty()) next[static_cast<std::size_t>(row.back().out)] += outflow - given;
    }
    for (auto& q : next)
        if (q < 0.0) q = 0.0;
    return out;
}

DensitySimulation::DensitySimulation(const Network& net, TurnTable turns, PhaseBank phases, DensityState state)
    : net_(&net), turns_(std::move(turns)), phases_(std::move(phases)), state_(std::move(state)) {
    if (static_cast<int>(turns_.size()) != net.link_count()) throw std::invalid_argument("turn table mismatch");
    t_ = phases_.time();
}

ReservoirSnapshot DensitySimulation::advance(std::optional<double> u_ext) {
    auto step = step_density(state_, *net_, turns_, phases_);
    state_ = std::move(step.state);
    phases_.step(t_, u_ext);
    ++t_;
    return std::move(step.snapshot);
}

}  // namespace rtrc
