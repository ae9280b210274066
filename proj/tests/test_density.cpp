#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "rtrc/csv.hpp"
#include "rtrc/density_sim.hpp"

using namespace rtrc;

namespace {

constexpr double kPi = std::numbers::pi;

PhaseBank uniform_phases(const Network& net, double xi) {
    const auto n = static_cast<std::size_t>(net.junction_count());
    return PhaseBank(std::vector<double>(n, 100.0), std::vector<double>(n, xi), PhaseMode::constant_rate);
}

// Flow matrix built from geometry and the closed-form phase, independent of
// the simulator: column l says where the content of link l goes in one step.
std::vector<std::vector<double>> transition_matrix(const Network& net, const TurnTable& turns,
                                                   const std::vector<double>& xi, double tau, int t) {
    const auto m = static_cast<std::size_t>(net.link_count());
    std::vector<std::vector<double>> p(m, std::vector<double>(m, 0.0));
    for (const auto& l : net.links()) {
        const auto& a = net.junction(l.from);
        const auto& b = net.junction(l.to);
        const bool vertical = a.col == b.col;
        double theta = std::fmod(xi[static_cast<std::size_t>(l.to)] + 2 * kPi * t / tau, 2 * kPi);
        if (theta < 0) theta += 2 * kPi;
        const bool ns_stop = theta < kPi;
        const bool green = vertical ? !ns_stop : ns_stop;
        const auto c = static_cast<std::size_t>(l.id);
        if (!green) {
            p[c][c] = 1.0;
            continue;
        }
        const double frac = std::min(1.0 / l.length, 1.0);
        p[c][c] = 1.0 - frac;
        for (const auto& e : turns.row(l.id)) p[static_cast<std::size_t>(e.out)][c] += frac * e.weight;
    }
    return p;
}

std::vector<double> multiply(const std::vector<std::vector<double>>& p, const std::vector<double>& q) {
    std::vector<double> out(q.size(), 0.0);
    for (std::size_t r = 0; r < q.size(); ++r)
        for (std::size_t c = 0; c < q.size(); ++c) out[r] += p[r][c] * q[c];
    return out;
}

}  // namespace

TEST_CASE("init_density") {
    const auto net = build_lattice(3);
    std::mt19937_64 rng(1);
    const auto u = init_density(net, 24.0, DensityInit::uniform, rng);
    REQUIRE(u.q.size() == 24);
    for (double q : u.q) CHECK(q == 1.0);

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 r(seed);
        const auto s = init_density(net, 17.3, DensityInit::random, r);
        CHECK(std::abs(s.total() - 17.3) <= 1e-12);
        for (double q : s.q) CHECK(q >= 0.0);
    }
    std::mt19937_64 a(5), b(5);
    CHECK(init_density(net, 10.0, DensityInit::random, a).q == init_density(net, 10.0, DensityInit::random, b).q);

    CHECK_THROWS_AS(init_density(net, 0.0, DensityInit::uniform, rng), std::invalid_argument);
    CHECK_THROWS_AS(init_density(net, -3.0, DensityInit::random, rng), std::invalid_argument);
}

TEST_CASE("link_density") {
    const auto net = build_lattice(3, 1.0, {{{0, 1}, 2.0}});
    DensityState s;
    s.q.assign(24, 0.0);
    const LinkId l = *net.find_link(0, 1);
    CHECK(link_density(s, net, l) == 0.0);
    s.q[static_cast<std::size_t>(l)] = 3.0;
    CHECK(link_density(s, net, l) == 1.5);

    std::mt19937_64 rng(2);
    const auto r = init_density(net, 30.0, DensityInit::random, rng);
    const auto k = link_densities(r, net);
    double total = 0.0;
    for (const auto& link : net.links()) total += k[static_cast<std::size_t>(link.id)] * link.length;
    CHECK(total == doctest::Approx(30.0).epsilon(1e-13));
}

TEST_CASE("stopped axis keeps its mass") {
    const auto net = build_lattice(3);
    std::mt19937_64 rng(3);
    const auto turns = assign_turn_table(net, {}, rng);
    DensityState s;
    s.q.assign(24, 0.0);
    for (const auto& l : net.links())
        if (axis_of(l.heading) == Axis::north_south) s.q[static_cast<std::size_t>(l.id)] = 0.5 + l.id;
    // theta = 0: north-south stops everywhere
    const auto step = step_density(s, net, turns, uniform_phases(net, 0.0));
    CHECK(step.state.q == s.q);
}

TEST_CASE("single green link with straight-only turns") {
    const auto net = build_lattice(3);
    std::mt19937_64 rng(4);
    const auto turns = assign_turn_table(net, {0.0, 0.0, 1.0}, rng, TurnAssignment::labelled);
    const LinkId in = *net.find_link(net.junction_at(1, 0), net.junction_at(1, 1));
    const LinkId out = *net.find_link(net.junction_at(1, 1), net.junction_at(1, 2));
    DensityState s;
    s.q.assign(24, 0.0);
    s.q[static_cast<std::size_t>(in)] = 2.0;
    const auto step = step_density(s, net, turns, uniform_phases(net, 0.0));
    CHECK(step.state.q[static_cast<std::size_t>(in)] == 0.0);
    CHECK(step.state.q[static_cast<std::size_t>(out)] == 2.0);
    CHECK(step.state.total() == 2.0);
    // the snapshot sees the state before the move
    CHECK(step.snapshot.k[static_cast<std::size_t>(in)] == 2.0);
    CHECK(step.snapshot.u[static_cast<std::size_t>(net.junction_at(1, 1))] == 2.0);
}

TEST_CASE("short links discharge at most their content") {
    LinkLengths lengths;
    const auto base = build_lattice(3);
    for (const auto& l : base.links()) lengths[{l.from, l.to}] = 0.25;
    const auto net = build_lattice(3, 1.0, lengths);
    std::mt19937_64 rng(6);
    const auto turns = assign_turn_table(net, {}, rng);
    const LinkId in = *net.find_link(net.junction_at(1, 0), net.junction_at(1, 1));
    DensityState s;
    s.q.assign(24, 0.0);
    s.q[static_cast<std::size_t>(in)] = 2.0;
    const auto step = step_density(s, net, turns, uniform_phases(net, 0.0));
    CHECK(step.state.q[static_cast<std::size_t>(in)] == 0.0);
    CHECK(step.state.total() == doctest::Approx(2.0).epsilon(1e-15));
    for (double q : step.state.q) CHECK(q >= 0.0);
}

TEST_CASE("snapshot inflow counts red and green links") {
    const auto net = build_lattice(4, 1.0, {{{5, 6}, 2.0}});
    std::mt19937_64 rng(8);
    const auto state = init_density(net, 48.0, DensityInit::random, rng);
    const auto turns = assign_turn_table(net, {}, rng);
    auto phases = PhaseBank::random(std::vector<double>(16, 100.0), PhaseMode::constant_rate, rng);
    const auto step = step_density(state, net, turns, phases);
    for (const auto& j : net.junctions()) {
        double u = 0.0;
        for (LinkId in : net.incoming(j.id)) u += state.q[static_cast<std::size_t>(in)] / net.link(in).length;
        const auto i = static_cast<std::size_t>(j.id);
        CHECK(step.snapshot.u[i] == doctest::Approx(u).epsilon(1e-15));
        CHECK(step.snapshot.x1[i] + step.snapshot.x2[i] == doctest::Approx(u).epsilon(1e-14));
    }
}

TEST_CASE("conservation and nonnegativity over long runs") {
    for (int n : {2, 3, 5}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            CAPTURE(n);
            CAPTURE(seed);
            const auto net = build_lattice(n, 1.0 + 0.5 * static_cast<double>(seed));
            std::mt19937_64 rng(seed * 31 + static_cast<std::uint64_t>(n));
            const auto turns = assign_turn_table(net, {0.5, 0.2, 0.3}, rng);
            auto phases = PhaseBank::random(std::vector<double>(static_cast<std::size_t>(n * n), 20.0 + 40.0 * seed),
                                            PhaseMode::constant_rate, rng);
            auto state = init_density(net, 3.0 * net.link_count(), DensityInit::random, rng);
            const double total = state.total();
            DensitySimulation sim(net, turns, std::move(phases), std::move(state));
            double worst = 0.0, min_q = 0.0;
            for (int t = 0; t < 10000; ++t) {
                sim.advance();
                worst = std::max(worst, std::abs(sim.state().total() - total) / total);
                for (double q : sim.state().q) min_q = std::min(min_q, q);
            }
            CHECK(worst < 1e-9);
            CHECK(min_q >= 0.0);
        }
    }
}

TEST_CASE("matches the transition-matrix oracle") {
    for (TurnWeights w : {TurnWeights{0.0, 0.0, 1.0}, TurnWeights{0.6, 0.1, 0.3}}) {
        const auto net = build_lattice(3, 1.0, {{{0, 1}, 2.0}, {{4, 7}, 3.5}});
        std::mt19937_64 rng(12);
        const auto turns = assign_turn_table(net, w, rng, TurnAssignment::labelled);
        auto phases = PhaseBank::random(std::vector<double>(9, 30.0), PhaseMode::constant_rate, rng);
        const auto xi = phases.xi();
        auto state = init_density(net, 24.0, DensityInit::random, rng);
        std::vector<double> q = state.q;
        DensitySimulation sim(net, turns, std::move(phases), std::move(state));
        for (int t = 0; t < 300; ++t) {
            q = multiply(transition_matrix(net, turns, xi, 30.0, t), q);
            sim.advance();
            for (std::size_t l = 0; l < q.size(); ++l) REQUIRE(sim.state().q[l] == doctest::Approx(q[l]).epsilon(1e-12));
        }
    }
}

TEST_CASE("straight-only turns keep mass on straight lines") {
    const auto net = build_lattice(3);
    std::mt19937_64 rng(13);
    const auto turns = assign_turn_table(net, {0.0, 0.0, 1.0}, rng, TurnAssignment::labelled);
    for (const auto& l : net.links()) {
        const auto straight = net.junction(l.to).outgoing[static_cast<std::size_t>(l.heading)];
        if (straight) {
            CHECK(turns.weight(l.id, *straight) == 1.0);
        }
    }
    // eastbound mass in the middle row moves only along that row until the edge
    DensityState s;
    s.q.assign(24, 0.0);
    const LinkId start = *net.find_link(net.junction_at(1, 0), net.junction_at(1, 1));
    s.q[static_cast<std::size_t>(start)] = 1.0;
    auto phases = uniform_phases(net, 0.0);
    const auto step = step_density(s, net, turns, phases);
    for (const auto& l : net.links()) {
        const double q = step.state.q[static_cast<std::size_t>(l.id)];
        if (q > 0.0) {
            CHECK(net.junction(l.from).row == 1);
            CHECK(l.heading == Heading::east);
        }
    }
}

TEST_CASE("step is linear in the state") {
    const auto net = build_lattice(3, 1.0, {{{3, 4}, 1.7}});
    std::mt19937_64 rng(14);
    const auto turns = assign_turn_table(net, {0.2, 0.5, 0.3}, rng);
    const auto phases = PhaseBank::random(std::vector<double>(9, 100.0), PhaseMode::constant_rate, rng);
    const auto a = init_density(net, 10.0, DensityInit::random, rng);
    const auto b = init_density(net, 4.0, DensityInit::random, rng);
    DensityState twice = a, sum = a;
    for (std::size_t l = 0; l < a.q.size(); ++l) {
        twice.q[l] = 2.0 * a.q[l];
        sum.q[l] = a.q[l] + b.q[l];
    }
    const auto sa = step_density(a, net, turns, phases).state;
    const auto sb = step_density(b, net, turns, phases).state;
    const auto s2 = step_density(twice, net, turns, phases).state;
    const auto ss = step_density(sum, net, turns, phases).state;
    for (std::size_t l = 0; l < a.q.size(); ++l) {
        CHECK(s2.q[l] == doctest::Approx(2.0 * sa.q[l]).epsilon(1e-14));
        CHECK(ss.q[l] == doctest::Approx(sa.q[l] + sb.q[l]).epsilon(1e-14));
    }
}

TEST_CASE("simulation determinism") {
    auto run = [] {
        const auto net = build_lattice(4);
        std::mt19937_64 rng(77);
        const auto turns = assign_turn_table(net, {}, rng);
        auto phases = PhaseBank::random(std::vector<double>(16, 100.0), PhaseMode::constant_rate, rng);
        auto state = init_density(net, 48.0, DensityInit::random, rng);
        DensitySimulation sim(net, turns, std::move(phases), std::move(state));
        std::vector<double> trace;
        for (int t = 0; t < 500; ++t) {
            const auto snap = sim.advance();
            trace.insert(trace.end(), snap.x1.begin(), snap.x1.end());
        }
        return trace;
    };
    CHECK(run() == run());
}

TEST_CASE("snapshot csv layout") {
    const auto net = build_lattice(3);
    std::mt19937_64 rng(15);
    const auto state = init_density(net, 24.0, DensityInit::random, rng);
    const auto turns = assign_turn_table(net, {}, rng);
    const auto step = step_density(state, net, turns, uniform_phases(net, 0.3));
    std::ostringstream os;
    write_snapshot_header(os, net);
    write_snapshot_row(os, step.snapshot);
    std::istringstream is(os.str());
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    const auto cols = split_csv_line(header);
    const auto vals = split_csv_line(row);
    REQUIRE(cols.size() == 1 + 27 + 24);
    REQUIRE(vals.size() == cols.size());
    CHECK(cols[0] == "t");
    CHECK(cols[1] == "u_1");
    CHECK(cols[10] == "x1_1");
    CHECK(cols[19] == "x2_1");
    const auto& l0 = net.link(0);
    CHECK(cols[28] == "k_" + std::to_string(l0.from + 1) + "_" + std::to_string(l0.to + 1));
    double v = 0.0;
    REQUIRE(parse_double(vals[28], v));
    CHECK(v == step.snapshot.k[0]);
}
