// Small hand-wired networks for scenario tests and the acceptance checks.

#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "rawa/adversary.hpp"
#include "rawa/bitswap.hpp"
#include "rawa/dht.hpp"
#include "rawa/metrics.hpp"
#include "rawa/netsim.hpp"
#include "rawa/rawa.hpp"
#include "rawa/topology.hpp"
#include "rawa/vanilla.hpp"

namespace rawa::testing {

inline LinkSpec exact_link() { return LinkSpec{100.0, 0.0, 1048576.0}; }

/// Every send, delivery, drop and protocol event, in emission order.
struct Recorder : Observer {
    struct Sent {
        Millis time;
        PeerId from, to;
        Message message;
        std::size_t bytes;
        Millis deliver_at;
    };
    struct Delivered {
        Millis time;
        PeerId from, to;
        Message message;
    };
    struct Protocol {
        Millis time;
        ProtocolEvent event;
    };
    std::vector<Sent> sent;
    std::vector<Delivered> delivered;
    std::vector<Delivered> dropped;
    std::vector<Protocol> protocol;

    void on_send(Millis now, PeerId from, PeerId to, const Message& m, std::size_t bytes,
                 Millis deliver_at) override {
        sent.push_back({now, from, to, m, bytes, deliver_at});
    }
    void on_deliver(Millis now, std::uint64_t, PeerId from, PeerId to, const Message& m) override {
        delivered.push_back({now, from, to, m});
    }
    void on_drop(Millis now, PeerId from, PeerId to, const Message& m) override {
        dropped.push_back({now, from, to, m});
    }
    void on_protocol(Millis now, const ProtocolEvent& e) override { protocol.push_back({now, e}); }

    [[nodiscard]] std::vector<Sent> sent_of(MessageType t) const {
        std::vector<Sent> out;
        for (const auto& s : sent)
            if (s.message.type() == t) out.push_back(s);
        return out;
    }
    [[nodiscard]] std::vector<Protocol> events_of(ProtocolEvent::Kind k) const {
        std::vector<Protocol> out;
        for (const auto& p : protocol)
            if (p.event.kind == k) out.push_back(p);
        return out;
    }
};

inline Topology make_topology(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    Topology t;
    for (std::size_t i = 0; i < n; ++i) t.add_node(NodeRole::Honest);
    for (auto [a, b] : edges) t.add_edge(PeerId{a}, PeerId{b});
    return t;
}

inline Block random_block(std::size_t size, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<std::uint8_t> bytes(size);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.below(256));
    return Block(std::move(bytes));
}

/// Simulator plus engines over a fixed topology.
struct Harness {
    DummyDht dht;
    std::unique_ptr<Simulator> sim;
    Recorder rec;
    MetricsCollector metrics;
    std::vector<BitswapNode*> nodes;

    explicit Harness(Topology topology, SimConfig config = SimConfig{exact_link(), 1.0, 10'000'000},
                     std::uint64_t seed = 7, DhtConfig dht_config = {})
        : dht(dht_config) {
        nodes.resize(topology.size(), nullptr);
        sim = std::make_unique<Simulator>(config, std::move(topology), RngStream(seed));
        sim->set_dht(&dht);
        sim->add_observer(&rec);
        sim->add_observer(&metrics);
    }

    template <class Engine, class... Args>
    Engine& add(std::uint32_t index, Args&&... args) {
        auto node = std::make_unique<Engine>(*sim, PeerId{index}, std::forward<Args>(args)...);
        Engine& ref = *node;
        nodes.at(index) = node.get();
        sim->attach(PeerId{index}, std::move(node));
        return ref;
    }

    template <class Engine, class... Args>
    void fill(Args... args) {
        for (std::uint32_t i = 0; i < nodes.size(); ++i)
            if (nodes[i] == nullptr) add<Engine>(i, args...);
    }

    void start() {
        for (auto* n : nodes) n->start();
    }

    /// Stores a fresh block at `holder`, registers it with the DHT and returns its CID.
    Cid give(std::uint32_t holder, std::size_t size = 1025, std::uint64_t seed = 99) {
        const Cid cid = nodes.at(holder)->store().put(random_block(size, seed));
        dht.provide(cid, PeerId{holder});
        return cid;
    }

    BitswapNode& node(std::uint32_t i) { return *nodes.at(i); }
    template <class Engine>
    Engine& as(std::uint32_t i) {
        return dynamic_cast<Engine&>(*nodes.at(i));
    }
};

/// One-way delay of an `bytes`-byte message on a jitter-free default link.
inline double hop(std::size_t bytes) { return 100.0 + static_cast<double>(bytes) / 1048576.0 * 1000.0; }

}  // namespace rawa::testing
