#include "rawa/adversary.hpp"

#include <algorithm>

namespace rawa {

void ObservationRecorder::on_deliver(Millis now, std::uint64_t seq, PeerId from, PeerId to,
                                     const Message& message) {
    if (!adversaries_.contains(to) || adversaries_.contains(from)) return;
    log_.records.push_back(Observation{now, seq, to, from, message});
}

std::set<Cid> observed_cids(const ObservationLog& log) {
    std::set<Cid> out;
    for (const auto& r : log.records)
        if (is_request(r.message.type())) out.insert(r.message.cid());
    return out;
}

namespace {

template <class Accept>
Prediction first_seen(const ObservationLog& log, std::span<const PeerId> population, Accept accept) {
    const std::set<PeerId> members(population.begin(), population.end());
    Prediction p;
    for (const auto& r : log.records) {
        if (!members.contains(r.sender) || !accept(r.message.type())) continue;
        p.links.try_emplace(r.sender, r.message.cid());
    }
    return p;
}

void random_fill(Prediction& p, std::span<const PeerId> population, const std::set<Cid>& observed,
                 RngStream& rng) {
    const std::vector<Cid> pool(observed.begin(), observed.end());
    std::vector<PeerId> order(population.begin(), population.end());
    std::ranges::sort(order);
    for (const auto& peer : order) {
        if (p.links.contains(peer)) continue;
        if (pool.empty())
            p.abstained.insert(peer);
        else
            p.links.emplace(peer, rng.pick(pool));
    }
}

}  // namespace

Prediction fse_classify(const ObservationLog& log, std::span<const PeerId> population,
                        const std::set<Cid>& observed, RngStream& rng) {
    auto p = first_seen(log, population, [](MessageType t) { return is_request(t); });
    random_fill(p, population, observed, rng);
    return p;
}

Prediction wfe_classify(const ObservationLog& log, std::span<const PeerId> population,
                        const std::set<Cid>& observed, RngStream& rng) {
    auto p = first_seen(log, population, [](MessageType t) { return t == MessageType::WantBlock; });
    random_fill(p, population, observed, rng);
    return p;
}

Prediction sawfe_classify(const ObservationLog& log, const SubgraphMap& subgraph,
                          std::span<const PeerId> population, const std::set<Cid>& observed,
                          RngStream& rng) {
    auto p = first_seen(log, population, [](MessageType t) { return t == MessageType::WantBlock; });

    std::map<PeerId, std::vector<PeerId>> predecessors;
    for (const auto& peer : population) {
        auto it = subgraph.find(peer);
        if (it == subgraph.end()) continue;
        for (const auto& succ : it->second) predecessors[succ].push_back(peer);
    }

    std::set<std::pair<PeerId, Cid>> seen;
    for (const auto& r : log.records) {
        if (r.message.type() != MessageType::WantHave) continue;
        if (!seen.emplace(r.sender, r.message.cid()).second) continue;
        auto it = predecessors.find(r.sender);
        if (it == predecessors.end()) continue;
        std::vector<PeerId> open;
        for (const auto& pred : it->second)
            if (!p.links.contains(pred)) open.push_back(pred);
        if (open.empty()) continue;
        p.links.emplace(rng.pick(open), r.message.cid());
    }

    random_fill(p, population, observed, rng);
    return p;
}

}  // namespace rawa
