// Deterministic discrete-event network: virtual clock, link delay model,
// dial/disconnect and delivery between node engines.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rawa/core.hpp"
#include "rawa/dht.hpp"
#include "rawa/rng.hpp"
#include "rawa/topology.hpp"

namespace rawa {

struct LinkSpec {
    Millis latency{100.0};
    /// Half-width of the symmetric uniform perturbation.
    Millis jitter{10.0};
    /// Bytes per second.
    double bandwidth{1024.0 * 1024.0};

    /// Throws std::invalid_argument unless latency > jitter >= 0 and bandwidth > 0.
    void validate() const;
};

[[nodiscard]] Millis serialization_delay(const LinkSpec& link, std::size_t bytes);

/// latency + U(-jitter, +jitter) + bytes/bandwidth, with `unit` in [0, 1)
/// mapped onto the jitter interval. Per-link FIFO is applied by the simulator
/// on top of this.
[[nodiscard]] Millis link_delay(const LinkSpec& link, std::size_t bytes, double unit);

using TimerId = std::uint64_t;

class Simulator;

/// Protocol engine attached to one simulated node. Handlers run synchronously
/// inside the event loop.
class Node {
public:
    virtual ~Node() = default;

    virtual void on_message(PeerId from, const Message& message) = 0;
    virtual void on_timer(TimerId id) = 0;
    virtual void on_dial(PeerId target, bool ok) = 0;
    virtual void on_dht_result(const Cid& cid, std::vector<ProviderRecord> providers) = 0;
};

/// Protocol-level notifications forwarded to observers.
struct ProtocolEvent {
    enum class Kind {
        RequestStarted,
        RequestCompleted,
        RequestFailed,
        ProxyStarted,
        BlockRejected,
        StrayForwardHave,
    };
    Kind kind;
    PeerId node;
    Cid cid;
    std::optional<WalkTag> walk;
};

class Observer {
public:
    virtual ~Observer() = default;
    virtual void on_send(Millis /*now*/, PeerId /*from*/, PeerId /*to*/, const Message&,
                         std::size_t /*bytes*/, Millis /*deliver_at*/) {}
    virtual void on_deliver(Millis /*now*/, std::uint64_t /*seq*/, PeerId /*from*/,
                            PeerId /*to*/, const Message&) {}
    virtual void on_drop(Millis /*now*/, PeerId /*from*/, PeerId /*to*/, const Message&) {}
    virtual void on_protocol(Millis /*now*/, const ProtocolEvent&) {}
};

struct SimConfig {
    LinkSpec link{};
    /// Dial cost in round trips; 0 makes dials complete immediately.
    double dial_rtt_multiplier{1.0};
    std::uint64_t event_cap{10'000'000};
};

struct RunStats {
    std::uint64_t events{0};
    bool livelock{false};
};

class Simulator {
public:
    /// Per-node and per-link streams are all derived from `rng.seed()`.
    Simulator(SimConfig config, Topology topology, RngStream rng);
    ~Simulator();

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    void attach(PeerId peer, std::unique_ptr<Node> node);
    void set_dht(const DummyDht* dht) { dht_ = dht; }
    void add_observer(Observer* observer) { observers_.push_back(observer); }
    /// Line-delimited `time_ms,seq,kind,from,to,variant,cid,size` records.
    void set_trace_stream(std::ostream* out) { trace_out_ = out; }

    // Engine-facing API.
    [[nodiscard]] Millis now() const { return now_; }
    /// Engine-side random stream of `node`, independent of every other node.
    [[nodiscard]] RngStream& rng(PeerId node) { return node_rngs_.at(node.index); }
    [[nodiscard]] const std::set<PeerId>& neighbors(PeerId p) const { return adj_.at(p.index); }
    [[nodiscard]] bool connected(PeerId a, PeerId b) const;
    [[nodiscard]] bool alive(PeerId p) const { return alive_.at(p.index); }
    [[nodiscard]] std::size_t size() const { return adj_.size(); }
    [[nodiscard]] const Topology& initial_topology() const { return topology_; }

    /// Schedules delivery. Returns false (and sends nothing) if not connected.
    bool send(PeerId from, PeerId to, Message message);
    void dial(PeerId from, PeerId to);
    TimerId set_timer(PeerId node, Millis delay);
    void dht_lookup(PeerId node, const Cid& cid);
    void schedule_departure(PeerId node, Millis at);
    /// Runs `action` at virtual time `at` (test and scenario scripting).
    void schedule_call(Millis at, std::function<void()> action);
    void notify(const ProtocolEvent& event);

    /// Pops events in (time, seq) order until the queue drains or the next
    /// event lies beyond `until`.
    RunStats run(std::optional<Millis> until = std::nullopt);

    [[nodiscard]] Node* node(PeerId p) { return nodes_.at(p.index).get(); }
    /// FNV-1a over every executed event record.
    [[nodiscard]] std::uint64_t trace_hash() const { return trace_hash_; }
    [[nodiscard]] std::uint64_t messages_sent() const { return messages_sent_; }
    [[nodiscard]] std::uint64_t bytes_sent() const { return bytes_sent_; }
    [[nodiscard]] std::uint64_t drops() const { return drops_; }

private:
    struct Deliver {
        PeerId from, to;
        Message message;
        std::size_t bytes;
    };
    struct Timer {
        PeerId node;
        TimerId id;
    };
    struct Departure {
        PeerId node;
    };
    struct DialComplete {
        PeerId from, to;
        bool immediate;
    };
    struct DhtResult {
        PeerId node;
        Cid cid;
        std::vector<ProviderRecord> providers;
    };
    struct Call {
        std::function<void()> action;
    };
    using Action = std::variant<Deliver, Timer, Departure, DialComplete, DhtResult, Call>;

    struct Event {
        Millis time;
        std::uint64_t seq;
        Action action;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    void schedule(Millis at, Action action);
    void dispatch(const Event& event);
    void record(const Event& event, std::string_view kind, std::optional<PeerId> from,
                std::optional<PeerId> to, const Message* message, std::size_t size);
    void disconnect(PeerId a, PeerId b);

    SimConfig config_;
    Topology topology_;
    std::uint64_t seed_;
    std::vector<RngStream> node_rngs_;
    // Dial jitter and DHT delays, per initiating node.
    std::vector<RngStream> net_rngs_;
    std::unordered_map<std::uint64_t, std::uint64_t> link_sends_;
    const DummyDht* dht_{nullptr};
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<std::set<PeerId>> adj_;
    std::vector<bool> alive_;
    std::unordered_map<std::uint64_t, Millis> last_delivery_;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::vector<Observer*> observers_;
    std::ostream* trace_out_{nullptr};
    Millis now_{0};
    std::uint64_t next_seq_{0};
    TimerId next_timer_{1};
    std::uint64_t trace_hash_{0xcbf29ce484222325ULL};
    std::uint64_t messages_sent_{0};
    std::uint64_t bytes_sent_{0};
    std::uint64_t drops_{0};
};

}  // namespace rawa
