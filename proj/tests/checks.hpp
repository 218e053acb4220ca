// Protocol invariants evaluated over recorded runs. Each check returns an empty
// string on success or a description of the first violation.

#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "rawa/runner.hpp"
#include "scenario.hpp"

namespace rawa::testing {

/// Successors are a subset of the current neighbors with |S| = min(eta, degree).
inline std::string check_subgraph(std::size_t topologies, std::uint64_t seed) {
    RngStream rng(seed);
    const std::size_t etas[] = {1, 2, 3, kEtaMax};
    for (std::size_t t = 0; t < topologies; ++t) {
        const std::size_t n = 6 + rng.below(60);
        const std::size_t out = 1 + rng.below(std::min<std::size_t>(5, n - 1));
        const std::size_t eta = etas[rng.below(4)];
        Topology topo = build_honest_topology(n, out, rng);
        Simulator sim(SimConfig{}, topo, RngStream(rng.next_u64()));
        for (std::uint32_t i = 0; i < n; ++i) {
            RaWaConfig cfg;
            cfg.eta = eta;
            sim.attach(PeerId{i}, std::make_unique<RaWaEngine>(sim, PeerId{i}, cfg));
        }
        for (std::uint32_t i = 0; i < n; ++i) {
            auto& e = dynamic_cast<RaWaEngine&>(*sim.node(PeerId{i}));
            e.start();
            const auto& succ = e.forward_graph().successors;
            const auto& nb = topo.neighbors(PeerId{i});
            const std::set<PeerId> unique(succ.begin(), succ.end());
            std::ostringstream where;
            where << "topology " << t << " node " << i << " (n=" << n << ", eta=" << eta << ")";
            if (unique.size() != succ.size()) return where.str() + ": duplicate successor";
            if (succ.size() != std::min(eta, nb.size())) return where.str() + ": wrong out-degree";
            for (const auto& s : succ) {
                if (s == PeerId{i}) return where.str() + ": self successor";
                if (!nb.contains(s)) return where.str() + ": successor is not a neighbor";
            }
        }
    }
    return {};
}

/// Every FORWARD-HAVE hop reverses a WANT-FORWARD hop of the same walk.
inline std::string check_return_path(const Recorder& rec) {
    std::set<std::tuple<Cid, PeerId, PeerId, PeerId>> forward;  // cid, origin, from, to
    for (const auto& s : rec.sent)
        if (s.message.type() == MessageType::WantForward && s.message.walk())
            forward.emplace(s.message.cid(), s.message.walk()->origin, s.from, s.to);
    std::size_t checked = 0;
    for (const auto& s : rec.sent) {
        if (s.message.type() != MessageType::ForwardHave || !s.message.walk()) continue;
        ++checked;
        if (!forward.contains({s.message.cid(), s.message.walk()->origin, s.to, s.from}))
            return "FORWARD-HAVE " + s.from.str() + "->" + s.to.str() +
                   " does not reverse a WANT-FORWARD of its walk";
    }
    if (checked == 0) return "no FORWARD-HAVE observed";
    return {};
}

/// Without churn, every re-transmission of a walk takes the same edge at each hop.
inline std::string check_same_path(const Recorder& rec) {
    std::map<std::tuple<Cid, PeerId, std::uint32_t>, std::pair<PeerId, PeerId>> edge;
    for (const auto& s : rec.sent) {
        if (s.message.type() != MessageType::WantForward || !s.message.walk()) continue;
        const auto key = std::make_tuple(s.message.cid(), s.message.walk()->origin, s.message.walk()->hops);
        auto [it, fresh] = edge.try_emplace(key, s.from, s.to);
        if (!fresh && it->second != std::make_pair(s.from, s.to))
            return "walk of " + s.message.walk()->origin.str() + " hop " +
                   std::to_string(s.message.walk()->hops) + " changed edge on re-transmission";
    }
    return {};
}

/// A requester sends WANT-HAVE for its own CID only where it also acted as proxy.
inline std::string check_requester_silent(const Recorder& rec, const GroundTruth& truth) {
    std::set<std::pair<PeerId, Cid>> proxied;
    for (const auto& p : rec.events_of(ProtocolEvent::Kind::ProxyStarted))
        proxied.emplace(p.event.node, p.event.cid);
    for (const auto& s : rec.sent_of(MessageType::WantHave)) {
        auto it = truth.interests.find(s.from);
        if (it == truth.interests.end() || it->second != s.message.cid()) continue;
        if (!proxied.contains({s.from, s.message.cid()}))
            return "requester " + s.from.str() + " broadcast WANT-HAVE for its own CID";
    }
    return {};
}

/// Each WANT-HAVE recipient gets exactly one CANCEL per WANT-HAVE round, and no
/// node is left holding a pending want.
inline std::string check_cancel(const Recorder& rec, const std::vector<BitswapNode*>& nodes) {
    std::map<std::tuple<PeerId, PeerId, Cid>, int> wants, cancels;
    for (const auto& s : rec.sent) {
        const auto key = std::make_tuple(s.from, s.to, s.message.cid());
        if (s.message.type() == MessageType::WantHave) wants[key] = 1;
        if (s.message.type() == MessageType::Cancel) ++cancels[key];
    }
    for (const auto& [key, n] : cancels) {
        if (!wants.contains(key))
            return "CANCEL " + std::get<0>(key).str() + "->" + std::get<1>(key).str() +
                   " without a prior WANT-HAVE";
        if (n != 1)
            return "CANCEL " + std::get<0>(key).str() + "->" + std::get<1>(key).str() +
                   " sent " + std::to_string(n) + " times";
    }
    for (const auto& [key, n] : wants)
        if (!cancels.contains(key))
            return "WANT-HAVE " + std::get<0>(key).str() + "->" + std::get<1>(key).str() +
                   " never cancelled";
    for (auto* node : nodes)
        if (node != nullptr && !node->pending_wants().empty())
            return "node " + node->id().str() + " still holds pending wants";
    return {};
}

/// Deliveries on each directed link happen in send order.
inline std::string check_fifo(const Recorder& rec) {
    std::map<std::pair<PeerId, PeerId>, Millis> last;
    for (const auto& s : rec.sent) {
        auto [it, fresh] = last.try_emplace({s.from, s.to}, s.deliver_at);
        if (!fresh) {
            if (s.deliver_at < it->second)
                return "link " + s.from.str() + "->" + s.to.str() + " reorders messages";
            it->second = s.deliver_at;
        }
    }
    std::map<std::pair<PeerId, PeerId>, std::vector<const Message*>> sent_order, delivered_order;
    for (const auto& s : rec.sent) sent_order[{s.from, s.to}].push_back(&s.message);
    for (const auto& d : rec.delivered) delivered_order[{d.from, d.to}].push_back(&d.message);
    for (const auto& [link, msgs] : delivered_order) {
        const auto& sent = sent_order[link];
        for (std::size_t i = 0; i < msgs.size(); ++i)
            if (i >= sent.size() || msgs[i]->type() != sent[i]->type() || msgs[i]->cid() != sent[i]->cid())
                return "link " + link.first.str() + "->" + link.second.str() +
                       " delivered out of order";
    }
    return {};
}

/// Sum of wire sizes of every sent message equals the recorded byte total.
inline std::string check_bytes(const Recorder& rec, std::uint64_t bytes_total, std::uint64_t sim_bytes) {
    std::uint64_t sum = 0;
    for (const auto& s : rec.sent) {
        if (s.bytes != wire_size(s.message)) return "send recorded with a size other than its wire size";
        sum += wire_size(s.message);
    }
    if (sum != bytes_total || sum != sim_bytes)
        return "byte totals disagree: wire " + std::to_string(sum) + ", metrics " +
               std::to_string(bytes_total) + ", simulator " + std::to_string(sim_bytes);
    return {};
}

/// A recorded full-network run.
struct RecordedRun {
    std::unique_ptr<RunContext> ctx;
    Recorder rec;
    RunResult result;
    std::vector<BitswapNode*> nodes;
};

inline std::unique_ptr<RecordedRun> record_run(const ExperimentConfig& config, std::size_t run_index) {
    auto out = std::make_unique<RecordedRun>();
    out->ctx = std::make_unique<RunContext>(config, run_index);
    out->ctx->sim().add_observer(&out->rec);
    out->result = out->ctx->execute();
    for (std::uint32_t i = 0; i < out->ctx->sim().size(); ++i)
        out->nodes.push_back(&out->ctx->engine(PeerId{i}));
    return out;
}

}  // namespace rawa::testing
