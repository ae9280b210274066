#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rtrc/agent_sim.hpp"

using namespace rtrc;

namespace {

// phases that never change within a test
PhaseBank frozen(const Network& net, double xi, std::vector<std::uint8_t> flags = {}) {
    const auto n = static_cast<std::size_t>(net.junction_count());
    PhaseBank bank(std::vector<double>(n, 1e12), std::vector<double>(n, xi), PhaseMode::constant_rate);
    if (!flags.empty()) bank.set_ns_stop_first(std::move(flags));
    return bank;
}

void check_invariants(const AgentState& s, const Network& net, const OVParams& p, std::size_t expected) {
    REQUIRE(s.count() == expected);
    for (const auto& link : net.links()) {
        const auto& lane = s.lane(link.id);
        for (std::size_t k = 0; k < lane.size(); ++k) {
            REQUIRE(lane[k].link == link.id);
            REQUIRE(lane[k].x >= 0.0);
            REQUIRE(lane[k].x <= link.length);
            REQUIRE(lane[k].v >= 0.0);
            REQUIRE(lane[k].v <= p.max_speed() + 1e-9);
            if (k > 0) REQUIRE(lane[k - 1].x - lane[k].x >= p.d_min - 1e-12);
        }
    }
}

}  // namespace

TEST_CASE("optimal velocity function") {
    const OVParams p;
    CHECK(std::abs(ov_velocity(0.0, p)) <= 1e-15);
    CHECK(ov_velocity(p.offset, p) == doctest::Approx(0.5 * p.v_scale * std::tanh(p.offset / p.width)));
    CHECK(ov_velocity(1e6, p) == doctest::Approx(0.5 * p.v_scale * (1.0 + std::tanh(p.offset / p.width))));
    CHECK(p.max_speed() == doctest::Approx(1.0 + std::tanh(2.0)));
    double prev = -1.0;
    for (double h = 0.0; h < 50.0; h += 0.01) {
        const double v = ov_velocity(h, p);
        CHECK(v >= prev);
        CHECK(v <= p.max_speed());
        prev = v;
    }
    CHECK_THROWS_AS(ov_velocity(-0.1, p), std::invalid_argument);

    OVParams q;
    q.v_scale = 3.0;
    q.offset = 1.5;
    q.width = 0.5;
    CHECK(ov_velocity(1.5, q) == doctest::Approx(1.5 * std::tanh(3.0)));
}

TEST_CASE("parameter validation") {
    OVParams p;
    p.sensitivity = 0.0;
    CHECK_THROWS(p.validate());
    p = {};
    p.dt = -1.0;
    CHECK_THROWS(p.validate());
    p = {};
    p.d_min = -0.1;
    CHECK_THROWS(p.validate());
    CHECK_NOTHROW(OVParams{}.validate());
}

TEST_CASE("agent link densities") {
    const auto net = build_lattice(3, 2.0);
    AgentState s(static_cast<std::size_t>(net.link_count()));
    CHECK(agent_link_densities(s, net)[0] == 0.0);
    for (double x : {1.8, 1.0, 0.2}) s.lanes()[0].push_back({0, x, 0.0, {}});
    const auto k = agent_link_densities(s, net);
    CHECK(k[0] == 1.5);
    CHECK(k[1] == 0.0);

    OVParams p;
    const auto placed = place_agents(build_lattice(3, 20.0), 4, p);
    const auto net20 = build_lattice(3, 20.0);
    const auto k20 = agent_link_densities(placed, net20);
    double total = 0.0;
    for (const auto& l : net20.links()) total += k20[static_cast<std::size_t>(l.id)] * l.length;
    CHECK(total == doctest::Approx(static_cast<double>(placed.count())));
    CHECK(placed.count() == 96);
}

TEST_CASE("placement") {
    OVParams p;
    const auto net = build_lattice(3, 20.0);
    const auto s = place_agents(net, 4, p);
    for (const auto& l : net.links()) {
        const auto& lane = s.lane(l.id);
        REQUIRE(lane.size() == 4);
        CHECK(lane[0].x == 17.5);
        CHECK(lane[3].x == 2.5);
        CHECK(lane[0].v == doctest::Approx(ov_velocity(5.0, p)));
    }
    CHECK_THROWS_AS(place_agents(build_lattice(3, 0.2), 4, p), std::invalid_argument);
}

TEST_CASE("free agent on green moves uniformly") {
    const auto net = build_lattice(3, 20.0);
    std::mt19937_64 rng(1);
    const auto turns = assign_turn_table(net, {0.0, 0.0, 1.0}, rng, TurnAssignment::labelled);
    const OVParams p;
    // theta = 0.1: east-west is green everywhere
    const auto phases = frozen(net, 0.1);
    const LinkId l = *net.find_link(net.junction_at(1, 0), net.junction_at(1, 1));
    AgentState s(static_cast<std::size_t>(net.link_count()));
    const double v = ov_velocity(p.horizon, p);
    s.lanes()[static_cast<std::size_t>(l)].push_back({l, 0.0, v, {}});
    for (int k = 1; k <= 40; ++k) {
        step_agents(s, net, turns, phases, p, rng);
        const auto& a = s.lane(l).front();
        CHECK(a.v == v);
        CHECK(a.x == doctest::Approx(k * v * p.dt).epsilon(1e-12));
    }
}

TEST_CASE("leader stops at a red light") {
    const auto net = build_lattice(3, 20.0);
    std::mt19937_64 rng(2);
    const auto turns = assign_turn_table(net, {}, rng);
    const OVParams p;
    // theta = 0.1 stops north-south traffic; pick a southbound link
    const auto phases = frozen(net, 0.1);
    const LinkId l = *net.find_link(net.junction_at(0, 1), net.junction_at(1, 1));
    AgentState s(static_cast<std::size_t>(net.link_count()));
    s.lanes()[static_cast<std::size_t>(l)].push_back({l, 0.0, p.max_speed(), {}});

    // independent Euler integration against an obstacle at x = L
    double x = 0.0, v = p.max_speed();
    const double L = 20.0;
    for (int k = 0; k < 20000; ++k) {
        const double h = std::max(0.0, L - x);
        const double target = 0.5 * p.v_scale * (std::tanh((h - p.offset) / p.width) + std::tanh(p.offset / p.width));
        v = std::max(0.0, v + p.sensitivity * (target - v) * p.dt);
        x += v * p.dt;
        if (x > L) {
            x = L;
            v = 0.0;
        }
        step_agents(s, net, turns, phases, p, rng);
        REQUIRE(s.lane(l).size() == 1);
        const auto& a = s.lane(l).front();
        REQUIRE(a.x <= L);
        REQUIRE(a.x == doctest::Approx(x).epsilon(1e-12));
        REQUIRE(a.v == doctest::Approx(v).epsilon(1e-12));
    }
    CHECK(s.lane(l).front().v < 1e-6);
    CHECK(s.lane(l).front().x > L - 0.1);
}

TEST_CASE("blocked crossing waits at the stop line") {
    const auto net = build_lattice(3, 20.0);
    std::mt19937_64 rng(3);
    const auto turns = assign_turn_table(net, {0.0, 0.0, 1.0}, rng, TurnAssignment::labelled);
    const OVParams p;
    const auto phases = frozen(net, 0.1);
    const LinkId in = *net.find_link(net.junction_at(1, 0), net.junction_at(1, 1));
    const LinkId out = *net.find_link(net.junction_at(1, 1), net.junction_at(1, 2));
    AgentState s(static_cast<std::size_t>(net.link_count()));
    s.lanes()[static_cast<std::size_t>(in)].push_back({in, 19.99, p.max_speed(), {}});
    s.lanes()[static_cast<std::size_t>(out)].push_back({out, 0.05, 0.0, {}});
    // after one substep the blocker is still within d_min of the entry
    step_agents(s, net, turns, phases, p, rng);
    CHECK(s.count() == 2);
    REQUIRE(s.lane(in).size() == 1);
    CHECK(s.lane(in).front().x == 20.0);
    CHECK(s.lane(in).front().v == 0.0);
    CHECK(s.lane(in).front().next == out);
}

TEST_CASE("crossing keeps the overshoot and the speed") {
    const auto net = build_lattice(3, 20.0);
    std::mt19937_64 rng(4);
    const auto turns = assign_turn_table(net, {0.0, 0.0, 1.0}, rng, TurnAssignment::labelled);
    OVParams p;
    const auto phases = frozen(net, 0.1);
    const LinkId in = *net.find_link(net.junction_at(1, 0), net.junction_at(1, 1));
    const LinkId out = *net.find_link(net.junction_at(1, 1), net.junction_at(1, 2));
    AgentState s(static_cast<std::size_t>(net.link_count()));
    const double v = ov_velocity(p.horizon, p);
    s.lanes()[static_cast<std::size_t>(in)].push_back({in, 19.9, v, {}});
    step_agents(s, net, turns, phases, p, rng);
    CHECK(s.lane(in).empty());
    REQUIRE(s.lane(out).size() == 1);
    CHECK(s.lane(out).front().x == doctest::Approx(19.9 + v * p.dt - 20.0));
    CHECK(s.lane(out).front().v == v);
}

TEST_CASE("count conservation and no collisions over 1e5 substeps") {
    const auto net = build_lattice(3, 20.0);
    std::mt19937_64 rng(5);
    const auto turns = assign_turn_table(net, {0.5, 0.2, 0.3}, rng);
    const OVParams p;
    auto phases = PhaseBank::random(std::vector<double>(9, 100.0), PhaseMode::constant_rate, rng);
    auto s = place_agents(net, 4, p);
    const std::size_t count = s.count();
    for (int k = 0; k < 100000; ++k) {
        step_agents(s, net, turns, phases, p, rng);
        check_invariants(s, net, p, count);
        if (k % p.substeps == p.substeps - 1) phases.step(k / p.substeps);
    }
}

TEST_CASE("dense traffic stays collision free") {
    const auto net = build_lattice(3, 5.0);
    std::mt19937_64 rng(6);
    const auto turns = assign_turn_table(net, {}, rng);
    const OVParams p;
    auto phases = PhaseBank::random(std::vector<double>(9, 30.0), PhaseMode::constant_rate, rng);
    auto s = place_agents(net, 8, p);
    for (int k = 0; k < 20000; ++k) {
        step_agents(s, net, turns, phases, p, rng);
        check_invariants(s, net, p, 192);
        if (k % 10 == 9) phases.step(k / 10);
    }
}

TEST_CASE("uniform flow on a green ring is a fixed point") {
    // clockwise ring 0 -> 1 -> 3 -> 2 -> 0 on the 2 x 2 lattice
    const auto net = build_lattice(2, 20.0);
    const std::vector<LinkId> ring{*net.find_link(0, 1), *net.find_link(1, 3), *net.find_link(3, 2),
                                   *net.find_link(2, 0)};
    std::mt19937_64 rng(7);
    const auto base = assign_turn_table(net, {}, rng);
    std::vector<std::vector<TurnEntry>> rows;
    for (const auto& l : net.links()) rows.push_back(base.row(l.id));
    for (std::size_t k = 0; k < ring.size(); ++k)
        rows[static_cast<std::size_t>(ring[k])] = {{ring[(k + 1) % ring.size()], 1.0}};
    const TurnTable turns(rows);
    // green for the ring's axis at each junction
    const auto phases = frozen(net, 0.1, {0, 1, 1, 0});
    for (LinkId l : ring) {
        const auto& link = net.link(l);
        REQUIRE(phases.state(static_cast<std::size_t>(link.to)).for_axis(axis_of(link.heading)) == Light::go);
    }

    const OVParams p;
    const double spacing = 10.0;
    const double v0 = ov_velocity(spacing, p);
    AgentState s(static_cast<std::size_t>(net.link_count()));
    for (LinkId l : ring)
        for (double x : {15.0, 5.0}) s.lanes()[static_cast<std::size_t>(l)].push_back({l, x, v0, {}});

    for (int k = 0; k < 1000; ++k) step_agents(s, net, turns, phases, p, rng);

    std::vector<double> pos;
    for (std::size_t k = 0; k < ring.size(); ++k)
        for (const auto& a : s.lane(ring[k])) {
            pos.push_back(20.0 * static_cast<double>(k) + a.x);
            CHECK(a.v == doctest::Approx(v0).epsilon(1e-5));
        }
    REQUIRE(pos.size() == 8);
    std::sort(pos.begin(), pos.end());
    for (std::size_t k = 0; k < pos.size(); ++k) {
        const double next = k + 1 < pos.size() ? pos[k + 1] : pos.front() + 80.0;
        CHECK(next - pos[k] == doctest::Approx(spacing).epsilon(1e-3));
    }
}

TEST_CASE("simulation determinism") {
    auto run = [] {
        const auto net = build_lattice(3, 20.0);
        std::mt19937_64 rng(8);
        auto turns = assign_turn_table(net, {}, rng);
        auto phases = PhaseBank::random(std::vector<double>(9, 100.0), PhaseMode::constant_rate, rng);
        const OVParams p;
        AgentSimulation sim(net, std::move(turns), std::move(phases), place_agents(net, 4, p), p, 99);
        std::vector<double> k;
        for (int t = 0; t < 300; ++t) {
            const auto snap = sim.advance();
            k.insert(k.end(), snap.k.begin(), snap.k.end());
            k.insert(k.end(), snap.x2.begin(), snap.x2.end());
        }
        return k;
    };
    CHECK(run() == run());
}
