#include "rtrc/snapshot.hpp"

#include <ostream>
#include <stdexcept>

#include "rtrc/csv.hpp"

namespace rtrc {

ReservoirSnapshot make_snapshot(const Network& net, const PhaseBank& phases, std::vector<double> link_densities,
                                std::int64_t t) {
    if (static_cast<int>(link_densities.size()) != net.link_count())
        throw std::invalid_argument("density vector does not match link count");
    if (static_cast<int>(phases.size()) != net.junction_count())
        throw std::invalid_argument("phase bank does not match junction count");

    ReservoirSnapshot snap;
    snap.t = t;
    const auto nj = static_cast<std::size_t>(net.junction_count());
    snap.u.assign(nj, 0.0);
    snap.x1.assign(nj, 0.0);
    snap.x2.assign(nj, 0.0);
    for (std::size_t i = 0; i < nj; ++i) {
        double u = 0.0;
        for (const auto& in : net.junctions()[i].incoming)
            if (in) u += link_densities[static_cast<std::size_t>(*in)];
        const auto obs = reservoir_observables(u, phases.theta(i));
        snap.u[i] = u;
        snap.x1[i] = obs.x1;
        snap.x2[i] = obs.x2;
    }
    snap.k = std::move(link_densities);
    return snap;
}

void write_snapshot_header(std::ostream& os, const Network& net) {
    os << "t";
    const int nj = net.junction_count();
    for (const char* prefix : {"u_", "x1_", "x2_"})
        for (int i = 1; i <= nj; ++i) os << ',' << prefix << i;
    for (const auto& l : net.links()) os << ",k_" << l.from + 1 << '_' << l.to + 1;
    os << '\n';
}

void write_snapshot_row(std::ostream& os, const ReservoirSnapshot& snap) {
    os << snap.t;
    for (const auto* v : {&snap.u, &snap.x1, &snap.x2, &snap.k})
        for (double x : *v) os << ',' << format_double(x);
    os << '\n';
}

}  // namespace rtrc
