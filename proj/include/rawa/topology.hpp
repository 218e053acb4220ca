// Overlay construction: the honest random graph plus adversary wiring.

#pragma once

#include <cstddef>
#include <set>
#include <string_view>
#include <vector>

#include "rawa/core.hpp"
#include "rawa/rng.hpp"

namespace rawa {

enum class NodeRole { Honest, Adversary };

enum class AdversaryKind { None, Fse, Wfe, Sawfe };

[[nodiscard]] std::string_view to_string(AdversaryKind kind);
/// Throws std::invalid_argument on an unknown name.
[[nodiscard]] AdversaryKind parse_adversary(std::string_view name);
/// Number of controlled nodes the kind adds to the network (0, 1 or 10).
[[nodiscard]] std::size_t adversary_node_count(AdversaryKind kind);

/// Undirected simple graph over dense PeerIds with a role tag per node.
class Topology {
public:
    PeerId add_node(NodeRole role);
    /// Returns false if the edge already exists. Throws on self-loops.
    bool add_edge(PeerId a, PeerId b);

    [[nodiscard]] std::size_t size() const { return roles_.size(); }
    [[nodiscard]] NodeRole role(PeerId p) const { return roles_.at(p.index); }
    [[nodiscard]] const std::set<PeerId>& neighbors(PeerId p) const { return adj_.at(p.index); }
    [[nodiscard]] bool has_edge(PeerId a, PeerId b) const;
    [[nodiscard]] std::size_t degree(PeerId p) const { return neighbors(p).size(); }
    [[nodiscard]] std::size_t edge_count() const;
    [[nodiscard]] std::vector<PeerId> nodes_with_role(NodeRole role) const;

    bool operator==(const Topology&) const = default;

private:
    std::vector<NodeRole> roles_;
    std::vector<std::set<PeerId>> adj_;
};

/// Every node dials `out_links` distinct peers it is not yet connected to,
/// chosen uniformly. Throws std::invalid_argument if n_honest <= out_links.
[[nodiscard]] Topology build_honest_topology(std::size_t n_honest, std::size_t out_links,
                                             RngStream& rng);

/// FSE: one node linked to every honest node. WFE/SAWFE: ten nodes with four
/// honest links each, drawn as a random partition so every honest node gets
/// exactly one adversary link. Throws std::invalid_argument if the topology
/// already has adversaries or the partition is impossible.
[[nodiscard]] Topology wire_adversary(Topology topology, AdversaryKind kind, RngStream& rng);

}  // namespace rawa
