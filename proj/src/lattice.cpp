#include "rtrc/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rtrc {

namespace {

constexpr std::array<Heading, 4> kHeadings{Heading::north, Heading::east, Heading::south, Heading::west};

std::pair<int, int> step(Heading h) {
    switch (h) {
    case Heading::north: return {-1, 0};
    case Heading::east: return {0, 1};
    case Heading::south: return {1, 0};
    case Heading::west: return {0, -1};
    }
    return {0, 0};
}

const char* heading_name(Heading h) {
    switch (h) {
    case Heading::north: return "N";
    case Heading::east: return "E";
    case Heading::south: return "S";
    case Heading::west: return "W";
    }
    return "?";
}

}  // namespace

std::optional<LinkId> Network::find_link(JunctionId from, JunctionId to) const {
    if (from < 0 || from >= junction_count()) return std::nullopt;
    for (const auto& out : junctions_[static_cast<std::size_t>(from)].outgoing) {
        if (out && links_[static_cast<std::size_t>(*out)].to == to) return out;
    }
    return std::nullopt;
}

std::vector<LinkId> Network::incoming(JunctionId id) const {
    std::vector<LinkId> result;
    for (const auto& in : junction(id).incoming)
        if (in) result.push_back(*in);
    return result;
}

std::vector<LinkId> Network::outgoing(JunctionId id) const {
    std::vector<LinkId> result;
    for (const auto& out : junction(id).outgoing)
        if (out) result.push_back(*out);
    return result;
}

Network build_lattice(int n, double link_length, const LinkLengths& overrides) {
    if (n < 1) throw std::invalid_argument("lattice side must be >= 1, got " + std::to_string(n));
    if (!(link_length > 0.0) || !std::isfinite(link_length))
        throw std::invalid_argument("link length must be positive and finite");

    Network net;
    net.n_ = n;
    net.junctions_.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            auto& j = net.junctions_[static_cast<std::size_t>(r * n + c)];
            j.id = r * n + c;
            j.row = r;
            j.col = c;
        }
    }

    for (auto& from : net.junctions_) {
        for (Heading h : kHeadings) {
            const auto [dr, dc] = step(h);
            const int r = from.row + dr;
            const int c = from.col + dc;
            if (r < 0 || r >= n || c < 0 || c >= n) continue;
            Link link;
            link.id = static_cast<LinkId>(net.links_.size());
            link.from = from.id;
            link.to = r * n + c;
            link.heading = h;
            link.length = link_length;
            if (auto it = overrides.find({link.from, link.to}); it != overrides.end()) link.length = it->second;
            if (!(link.length > 0.0) || !std::isfinite(link.length))
                throw std::invalid_argument("link " + std::to_string(link.from) + "->" + std::to_string(link.to) +
                                            " has nonpositive length");
            from.outgoing[static_cast<std::size_t>(h)] = link.id;
            net.junctions_[static_cast<std::size_t>(link.to)].incoming[static_cast<std::size_t>(h)] = link.id;
            net.links_.push_back(link);
        }
    }
    for (const auto& entry : overrides) {
        const auto [from, to] = entry.first;
        if (!net.find_link(from, to))
            throw std::invalid_argument("length override for nonexistent link " + std::to_string(from) + "->" +
                                        std::to_string(to));
    }
    for (auto& link : net.links_) link.reverse = *net.find_link(link.to, link.from);
    return net;
}

AxisPartition axis_partition(const Network& net, JunctionId junction) {
    AxisPartition part;
    for (const auto& in : net.junction(junction).incoming) {
        if (!in) continue;
        if (axis_of(net.link(*in).heading) == Axis::north_south)
            part.north_south.push_back(*in);
        else
            part.east_west.push_back(*in);
    }
    return part;
}

double TurnTable::weight(LinkId in, LinkId out) const {
    for (const auto& e : row(in))
        if (e.out == out) return e.weight;
    return 0.0;
}

TurnTable assign_turn_table(const Network& net, const TurnWeights& w, std::mt19937_64& rng,
                            TurnAssignment mode) {
    if (w.right < 0.0 || w.left < 0.0 || w.straight < 0.0)
        throw std::invalid_argument("turn weights must be nonnegative");
    if (std::abs(w.right + w.left + w.straight - 1.0) > 1e-12)
        throw std::invalid_argument("turn weights must sum to 1");

    std::vector<std::vector<TurnEntry>> rows(static_cast<std::size_t>(net.link_count()));
    for (const auto& in : net.links()) {
        std::array<double, 3> weights{w.right, w.left, w.straight};
        if (mode == TurnAssignment::shuffled) std::shuffle(weights.begin(), weights.end(), rng);

        const auto& junction = net.junction(in.to);
        const std::array<Heading, 3> exits{turn_right(in.heading), turn_left(in.heading), in.heading};

        std::vector<TurnEntry> row;
        double present = 0.0;
        for (std::size_t k = 0; k < exits.size(); ++k) {
            if (auto out = junction.outgoing[static_cast<std::size_t>(exits[k])]) {
                row.push_back({*out, weights[k]});
                present += weights[k];
            }
        }
        if (row.empty()) {
            row.push_back({in.reverse, 1.0});
        } else if (present > 0.0) {
            for (auto& e : row) e.weight /= present;
        } else {
            for (auto& e : row) e.weight = 1.0 / static_cast<double>(row.size());
        }
        rows[static_cast<std::size_t>(in.id)] = std::move(row);
    }
    return TurnTable(std::move(rows));
}

nlohmann::json to_json(const Network& net, const TurnTable& turns) {
    nlohmann::json j;
    j["n"] = net.side();
    auto links = nlohmann::json::array();
    for (const auto& l : net.links())
        links.push_back({{"id", l.id}, {"from", l.from + 1}, {"to", l.to + 1}, {"length", l.length},
                         {"heading", heading_name(l.heading)}});
    j["links"] = std::move(links);
    auto rows = nlohmann::json::array();
    for (const auto& l : net.links()) {
        if (static_cast<std::size_t>(l.id) >= turns.size()) break;
        for (const auto& e : turns.row(l.id))
            rows.push_back({{"junction", l.to + 1}, {"in", l.id}, {"out", e.out}, {"weight", e.weight}});
    }
    j["turns"] = std::move(rows);
    return j;
}

std::pair<Network, TurnTable> network_from_json(const nlohmann::json& j) {
    const int n = j.at("n").get<int>();
    LinkLengths lengths;
    for (const auto& l : j.at("links"))
        lengths[{l.at("from").get<int>() - 1, l.at("to").get<int>() - 1}] = l.at("length").get<double>();
    Network net = build_lattice(n, 1.0, lengths);
    std::vector<std::vector<TurnEntry>> rows(static_cast<std::size_t>(net.link_count()));
    if (j.contains("turns")) {
        for (const auto& t : j.at("turns")) {
            const LinkId in = t.at("in").get<int>();
            const LinkId out = t.at("out").get<int>();
            if (in < 0 || in >= net.link_count() || out < 0 || out >= net.link_count())
                throw std::invalid_argument("turn entry references unknown link");
            if (net.link(in).to != net.link(out).from || net.link(in).to != t.at("junction").get<int>() - 1)
                throw std::invalid_argument("turn entry does not meet at the stated junction");
            rows[static_cast<std::size_t>(in)].push_back({out, t.at("weight").get<double>()});
        }
    }
    return {std::move(net), TurnTable(std::move(rows))};
}

}  // namespace rtrc
