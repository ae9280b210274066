#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "json.hpp"

namespace rtrc {

using JunctionId = int;
using LinkId = int;

/// Compass heading. For links this is the direction of travel.
enum class Heading : std::uint8_t { north = 0, east = 1, south = 2, west = 3 };

constexpr Heading opposite(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 2) % 4); }
constexpr Heading turn_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }
constexpr Heading turn_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }

enum class Axis : std::uint8_t { north_south, east_west };

/// Links travelling north or south arrive on the north-south axis.
constexpr Axis axis_of(Heading h) {
    return (h == Heading::north || h == Heading::south) ? Axis::north_south : Axis::east_west;
}

struct Link {
    LinkId id = 0;
    JunctionId from = 0;
    JunctionId to = 0;
    double length = 1.0;
    Heading heading = Heading::north;
    LinkId reverse = -1;
};

struct Junction {
    JunctionId id = 0;
    int row = 0;  // 0 is the northernmost row
    int col = 0;
    /// Incoming links indexed by their heading of travel.
    std::array<std::optional<LinkId>, 4> incoming{};
    /// Outgoing links indexed by their heading of travel.
    std::array<std::optional<LinkId>, 4> outgoing{};
};

/// Per-link length overrides keyed by (from, to) junction ids.
using LinkLengths = std::map<std::pair<JunctionId, JunctionId>, double>;

/// Square lattice of signalised junctions joined by directed links.
///
/// Junction ids are row-major, `row * n + col`. Every physical road segment is
/// represented by two directed links, so an n x n lattice has 4n(n-1) links.
class Network {
public:
    Network() = default;

    int side() const { return n_; }
    int junction_count() const { return static_cast<int>(junctions_.size()); }
    int link_count() const { return static_cast<int>(links_.size()); }

    const std::vector<Junction>& junctions() const { return junctions_; }
    const std::vector<Link>& links() const { return links_; }
    const Junction& junction(JunctionId id) const { return junctions_.at(static_cast<std::size_t>(id)); }
    const Link& link(LinkId id) const { return links_.at(static_cast<std::size_t>(id)); }

    JunctionId junction_at(int row, int col) const { return row * n_ + col; }
    std::optional<LinkId> find_link(JunctionId from, JunctionId to) const;

    /// Incoming links of a junction, in heading order.
    std::vector<LinkId> incoming(JunctionId id) const;
    std::vector<LinkId> outgoing(JunctionId id) const;

private:
    friend Network build_lattice(int n, double link_length, const LinkLengths& overrides);

    int n_ = 0;
    std::vector<Junction> junctions_;
    std::vector<Link> links_;
};

/// Builds the n x n lattice. Every link gets `link_length` unless listed in
/// `overrides`. Throws std::invalid_argument for n < 1 or nonpositive lengths.
Network build_lattice(int n, double link_length = 1.0, const LinkLengths& overrides = {});

struct AxisPartition {
    std::vector<LinkId> north_south;
    std::vector<LinkId> east_west;
};

AxisPartition axis_partition(const Network& net, JunctionId junction);

/// Turning probabilities for right, left and straight movements.
struct TurnWeights {
    double right = 1.0 / 3.0;
    double left = 1.0 / 3.0;
    double straight = 1.0 / 3.0;
};

struct TurnEntry {
    LinkId out = 0;
    double weight = 0.0;
};

/// For each incoming link, the distribution of flow over the outgoing links
/// of the junction it feeds.
class TurnTable {
public:
    TurnTable() = default;
    explicit TurnTable(std::vector<std::vector<TurnEntry>> rows) : rows_(std::move(rows)) {}

    const std::vector<TurnEntry>& row(LinkId in) const { return rows_.at(static_cast<std::size_t>(in)); }
    std::size_t size() const { return rows_.size(); }

    double weight(LinkId in, LinkId out) const;

private:
    std::vector<std::vector<TurnEntry>> rows_;
};

/// `shuffled` permutes the three weights at random for every incoming link;
/// `labelled` keeps w_r on the right turn, w_l on the left and w_s straight.
enum class TurnAssignment : std::uint8_t { shuffled, labelled };

/// Puts the three weights onto the right/left/straight exits of every
/// incoming link. Weights of exits missing at the boundary are spread
/// proportionally over the remaining non-reverse exits.
TurnTable assign_turn_table(const Network& net, const TurnWeights& w, std::mt19937_64& rng,
                            TurnAssignment mode = TurnAssignment::shuffled);

/// Links keep their 0-based ids; junctions are numbered from 1.
nlohmann::json to_json(const Network& net, const TurnTable& turns);
std::pair<Network, TurnTable> network_from_json(const nlohmann::json& j);

}  // namespace rtrc
