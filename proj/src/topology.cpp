#include "rawa/topology.hpp"

#include <stdexcept>
#include <string>

namespace rawa {

namespace {
constexpr std::size_t kExploiterNodes = 10;
constexpr std::size_t kExploiterLinks = 4;
}  // namespace

std::string_view to_string(AdversaryKind kind) {
    switch (kind) {
        case AdversaryKind::None: return "none";
        case AdversaryKind::Fse: return "fse";
        case AdversaryKind::Wfe: return "wfe";
        case AdversaryKind::Sawfe: return "sawfe";
    }
    return "?";
}

AdversaryKind parse_adversary(std::string_view name) {
    if (name == "none") return AdversaryKind::None;
    if (name == "fse") return AdversaryKind::Fse;
    if (name == "wfe") return AdversaryKind::Wfe;
    if (name == "sawfe") return AdversaryKind::Sawfe;
    throw std::invalid_argument("unknown adversary '" + std::string(name) + "'");
}

std::size_t adversary_node_count(AdversaryKind kind) {
    switch (kind) {
        case AdversaryKind::None: return 0;
        case AdversaryKind::Fse: return 1;
        case AdversaryKind::Wfe:
        case AdversaryKind::Sawfe: return kExploiterNodes;
    }
    return 0;
}

PeerId Topology::add_node(NodeRole role) {
    roles_.push_back(role);
    adj_.emplace_back();
    return PeerId{static_cast<std::uint32_t>(roles_.size() - 1)};
}

bool Topology::add_edge(PeerId a, PeerId b) {
    if (a == b) throw std::invalid_argument("self-loop on " + a.str());
    if (a.index >= size() || b.index >= size()) throw std::out_of_range("unknown peer");
    if (!adj_[a.index].insert(b).second) return false;
    adj_[b.index].insert(a);
    return true;
}

bool Topology::has_edge(PeerId a, PeerId b) const {
    return a.index < size() && adj_[a.index].contains(b);
}

std::size_t Topology::edge_count() const {
    std::size_t twice = 0;
    for (const auto& s : adj_) twice += s.size();
    return twice / 2;
}

std::vector<PeerId> Topology::nodes_with_role(NodeRole role) const {
    std::vector<PeerId> out;
    for (std::uint32_t i = 0; i < roles_.size(); ++i)
        if (roles_[i] == role) out.push_back(PeerId{i});
    return out;
}

Topology build_honest_topology(std::size_t n_honest, std::size_t out_links, RngStream& rng) {
    if (n_honest <= out_links)
        throw std::invalid_argument("need more honest peers (" + std::to_string(n_honest) +
                                    ") than outgoing links (" + std::to_string(out_links) + ")");
    Topology t;
    for (std::size_t i = 0; i < n_honest; ++i) t.add_node(NodeRole::Honest);

    for (std::uint32_t i = 0; i < n_honest; ++i) {
        const PeerId self{i};
        std::vector<PeerId> candidates;
        for (std::uint32_t j = 0; j < n_honest; ++j) {
            const PeerId other{j};
            if (other != self && !t.has_edge(self, other)) candidates.push_back(other);
        }
        // Earlier peers may already have dialed us; we still pick our own
        // out_links among the rest, capped by what remains.
        for (const auto& target : rng.sample(std::move(candidates), out_links))
            t.add_edge(self, target);
    }
    return t;
}

Topology wire_adversary(Topology topology, AdversaryKind kind, RngStream& rng) {
    if (!topology.nodes_with_role(NodeRole::Adversary).empty())
        throw std::invalid_argument("topology already contains adversary nodes");
    const auto honest = topology.nodes_with_role(NodeRole::Honest);

    switch (kind) {
        case AdversaryKind::None: break;
        case AdversaryKind::Fse: {
            const PeerId spy = topology.add_node(NodeRole::Adversary);
            for (const auto& h : honest) topology.add_edge(spy, h);
            break;
        }
        case AdversaryKind::Wfe:
        case AdversaryKind::Sawfe: {
            if (honest.size() != kExploiterNodes * kExploiterLinks)
                throw std::invalid_argument(
                    "exploiter wiring needs exactly " +
                    std::to_string(kExploiterNodes * kExploiterLinks) +
                    " honest peers for a one-link-per-peer partition, got " +
                    std::to_string(honest.size()));
            auto order = honest;
            rng.shuffle(order);
            for (std::size_t a = 0; a < kExploiterNodes; ++a) {
                const PeerId adv = topology.add_node(NodeRole::Adversary);
                for (std::size_t k = 0; k < kExploiterLinks; ++k)
                    topology.add_edge(adv, order[a * kExploiterLinks + k]);
            }
            break;
        }
    }
    return topology;
}

}  // namespace rawa
