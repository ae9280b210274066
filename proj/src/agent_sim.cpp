#include "rtrc/agent_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rtrc {

void OVParams::validate() const {
    if (!(sensitivity > 0.0)) throw std::invalid_argument("OV sensitivity must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("OV time step must be positive");
    if (!(d_min >= 0.0)) throw std::invalid_argument("minimum spacing must be nonnegative");
    if (!(v_scale >= 0.0) || !(width > 0.0)) throw std::invalid_argument("OV function parameters invalid");
    if (!(horizon > 0.0)) throw std::invalid_argument("OV horizon must be positive");
    if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
}

double OVParams::max_speed() const { return 0.5 * v_scale * (1.0 + std::tanh(offset / width)); }

double ov_velocity(double headway, const OVParams& p) {
    if (headway < 0.0) throw std::invalid_argument("headway must be nonnegative");
    return 0.5 * p.v_scale * (std::tanh((headway - p.offset) / p.width) + std::tanh(p.offset / p.width));
}

std::size_t AgentState::count() const {
    std::size_t n = 0;
    for (const auto& lane : lanes_) n += lane.size();
    return n;
}

AgentState place_agents(const Network& net, int per_link, const OVParams& p) {
    if (per_link < 0) throw std::invalid_argument("agents per link must be nonnegative");
    AgentState state(static_cast<std::size_t>(net.link_count()));
    for (const auto& link : net.links()) {
        if (per_link == 0) continue;
        const double spacing = link.length / per_link;
        if (spacing < p.d_min)
            throw std::invalid_argument("link " + std::to_string(link.id) + " too short for " +
                                        std::to_string(per_link) + " agents");
        auto& lane = state.lanes()[static_cast<std::size_t>(link.id)];
        const double v = ov_velocity(spacing, p);
        for (int k = 0; k < per_link; ++k) lane.push_back({link.id, link.length - (k + 0.5) * spacing, v, {}});
    }
    return state;
}

namespace {

LinkId sample_exit(const TurnTable& turns, LinkId in, std::mt19937_64& rng) {
    const auto& row = turns.row(in);
    if (row.empty()) throw std::logic_error("link without exits");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = unit(rng);
    double acc = 0.0;
    for (const auto& e : row) {
        acc += e.weight;
        if (r < acc) return e.out;
    }
    // r landed in the rounding gap above the cumulative sum
    for (auto it = row.rbegin(); it != row.rend(); ++it)
        if (it->weight > 0.0) return it->out;
    return row.back().out;
}

void clamp_followers(std::vector<Agent>& lane, std::size_t from, double d_min) {
    for (std::size_t k = std::max<std::size_t>(from, 1); k < lane.size(); ++k) {
        const Agent& pred = lane[k - 1];
        Agent& a = lane[k];
        if (a.x > pred.x - d_min) {
            a.x = std::max(0.0, pred.x - d_min);
            a.v = std::min(a.v, pred.v);
        }
    }
}

}  // namespace

void step_agents(AgentState& agents, const Network& net, const TurnTable& turns, const PhaseBank& phases,
                 const OVParams& p, std::mt19937_64& rng) {
    auto& lanes = agents.lanes();
    if (static_cast<int>(lanes.size()) != net.link_count()) throw std::invalid_argument("agent state mismatch");

    std::vector<Light> lights(lanes.size());
    for (const auto& link : net.links())
        lights[static_cast<std::size_t>(link.id)] =
            phases.state(static_cast<std::size_t>(link.to)).for_axis(axis_of(link.heading));

    // synchronous velocity update, then positions
    for (const auto& link : net.links()) {
        auto& lane = lanes[static_cast<std::size_t>(link.id)];
        const bool red = lights[static_cast<std::size_t>(link.id)] == Light::stop;
        std::vector<double> headway(lane.size());
        for (std::size_t k = 0; k < lane.size(); ++k) {
            double h;
            if (k > 0)
                h = lane[k - 1].x - lane[k].x;
            else
                h = red ? link.length - lane[k].x : p.horizon;
            headway[k] = std::max(0.0, h);
        }
        for (std::size_t k = 0; k < lane.size(); ++k) {
            Agent& a = lane[k];
            a.v = std::max(0.0, a.v + p.sensitivity * (ov_velocity(headway[k], p) - a.v) * p.dt);
            a.x += a.v * p.dt;
        }
        if (red && !lane.empty() && lane.front().x > link.length) {
            lane.front().x = link.length;
            lane.front().v = 0.0;
        }
        clamp_followers(lane, 1, p.d_min);
    }

    // junction crossings, in link order
    for (const auto& link : net.links()) {
        auto& lane = lanes[static_cast<std::size_t>(link.id)];
        while (!lane.empty() && lane.front().x > link.length) {
            Agent& a = lane.front();
            if (!a.next) a.next = sample_exit(turns, link.id, rng);
            auto& target = lanes[static_cast<std::size_t>(*a.next)];
            const double free_entry = a.x - link.length;
            double entry = free_entry;
            if (!target.empty()) entry = std::min(entry, target.back().x - p.d_min);
            if (entry < 0.0) {
                a.x = link.length;
                a.v = 0.0;
                clamp_followers(lane, 1, p.d_min);
                break;
            }
            Agent moved{*a.next, entry, a.v, {}};
            if (entry < free_entry) moved.v = std::min(moved.v, target.back().v);
            target.push_back(moved);
            lane.erase(lane.begin());
        }
    }
}

std::vector<double> agent_link_densities(const AgentState& agents, const Network& net) {
    std::vector<double> k(static_cast<std::size_t>(net.link_count()), 0.0);
    for (const auto& link : net.links())
        k[static_cast<std::size_t>(link.id)] =
            static_cast<double>(agents.lane(link.id).size()) / link.length;
    return k;
}

AgentSimulation::AgentSimulation(const Network& net, TurnTable turns, PhaseBank phases, AgentState agents,
                                 OVParams params, std::uint64_t seed)
    : net_(&net), turns_(std::move(turns)), phases_(std::move(phases)), agents_(std::move(agents)),
      params_(params), rng_(seed) {
    params_.validate();
    t_ = phases_.time();
}

ReservoirSnapshot AgentSimulation::advance(std::optional<double> u_ext) {
    auto snap = make_snapshot(*net_, phases_, agent_link_densities(agents_, *net_), t_);
    for (int s = 0; s < params_.substeps; ++s) step_agents(agents_, *net_, turns_, phases_, params_, rng_);
    phases_.step(t_, u_ext);
    ++t_;
    return snap;
}

}  // namespace rtrc
