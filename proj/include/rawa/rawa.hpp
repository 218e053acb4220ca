// RaWa-Bitswap: random-walk proxy selection in front of Bitswap discovery.
//
// A request runs through four phases. The requester hands a WANT-FORWARD to
// one privacy-subgraph successor (privacy phase); each receiver relays it with
// probability 1-p or becomes the proxy with probability p. The proxy runs a
// Vanilla discovery without fetching (proxy phase) and sends the providers back
// along the reversed walk in a FORWARD-HAVE (return phase). The requester then
// dials a provider and fetches the block itself (exchange phase).

#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "rawa/bitswap.hpp"

namespace rawa {

/// Out-degree value meaning "every neighbor is a successor".
inline constexpr std::size_t kEtaMax = std::numeric_limits<std::size_t>::max();

struct RaWaConfig {
    /// Proxy transition probability, in (0, 1].
    double p{0.2};
    /// Requester re-transmit interval.
    Millis t0{1000.0};
    /// Proxy DHT fallback.
    Millis t1{1000.0};
    /// Requester DHT fallback.
    Millis u{2000.0};
    std::size_t eta{kEtaMax};
    /// Privacy-subgraph reconstruction interval.
    Millis r{540000.0};
    /// Ask the chosen provider with WANT-HAVE before sending WANT-BLOCK.
    bool verify_provider{false};
    /// How long a proxy keeps collecting HAVEs before answering; 0 answers on the first.
    Millis aggregation_window{0.0};
    Millis relay_ttl{60000.0};
    Millis give_up{30000.0};
    /// A selected provider that stays silent this long is treated as DONT-HAVE.
    Millis exchange_timeout{5000.0};

    /// Throws std::invalid_argument listing every violated constraint.
    void validate() const;
};

/// Probability that a walk has reached its proxy within `hops` hops: 1-(1-p)^hops.
/// Throws std::domain_error unless 0 < p <= 1 and hops >= 1.
[[nodiscard]] double path_length_probability(double p, int hops);

struct ForwardGraph {
    std::vector<PeerId> successors;  // sorted
    Millis built_at{0};

    bool operator==(const ForwardGraph&) const = default;
};

/// Uniform sample without replacement of min(eta, |neighbors|) successors.
[[nodiscard]] ForwardGraph build_forward_graph(const std::set<PeerId>& neighbors, std::size_t eta,
                                               RngStream& rng, Millis now = 0.0);

enum class WalkRole { Relay, Proxy };

struct RelayEntry {
    WalkRole role{WalkRole::Relay};
    PeerId successor{};
    WalkTag tag{};
    Millis created_at{0};
};

class RaWaEngine : public BitswapNode {
public:
    RaWaEngine(Simulator& sim, PeerId self, RaWaConfig config = {});

    void start() override;
    void request(const Cid& cid) override;
    [[nodiscard]] RequestState request_state(const Cid& cid) const override;

    void on_dial(PeerId target, bool ok) override;
    void on_dht_result(const Cid& cid, std::vector<ProviderRecord> providers) override;

    /// Current privacy subgraph; rebuilt lazily once `r` has elapsed.
    [[nodiscard]] const ForwardGraph& forward_graph();
    /// Forces a rebuild with fresh randomness.
    void reconstruct_graph();

    [[nodiscard]] const RaWaConfig& config() const { return config_; }
    [[nodiscard]] const std::map<std::pair<Cid, PeerId>, RelayEntry>& relay_table() const {
        return relays_;
    }
    /// Successors this node ever used for `cid`.
    [[nodiscard]] std::set<PeerId> sent_history(const Cid& cid) const;
    /// First hops the requester session for `cid` has used, in order.
    [[nodiscard]] std::vector<PeerId> first_hops(const Cid& cid) const;

protected:
    void on_have(PeerId from, const Cid& cid) override;
    void on_dont_have(PeerId from, const Cid& cid) override;
    void on_block(PeerId from, const Message& message) override;
    void on_want_forward(PeerId from, const Message& message) override;
    void on_forward_have(PeerId from, const Message& message) override;

    /// Enters the proxy phase for the walk arriving from `predecessor`.
    void become_proxy(const Cid& cid, PeerId predecessor, WalkTag tag);
    /// Providers the requester session should see; merges, then starts or
    /// continues the exchange.
    void offer_providers(const Cid& cid, const std::vector<ProviderRecord>& providers);

private:
    struct RequesterSession {
        Cid cid;
        RequestState state{RequestState::Walking};
        std::optional<PeerId> first_hop;
        std::vector<PeerId> hops_used;
        std::vector<ProviderRecord> candidates;
        std::set<PeerId> tried;
        std::optional<PeerId> target;
        bool awaiting_have{false};
        bool dialing{false};
        Millis started_at{0};
        TimerId retransmit_timer{0};
        TimerId fallback_timer{0};
        TimerId give_up_timer{0};
        TimerId exchange_timer{0};
        bool dht_inflight{false};
    };

    struct ProxySession {
        Cid cid;
        std::vector<std::pair<PeerId, WalkTag>> predecessors;
        std::set<PeerId> queried;
        std::vector<ProviderRecord> found;
        Millis started_at{0};
        TimerId fallback_timer{0};
        TimerId window_timer{0};
        bool answered{false};
        bool gave_up{false};
        bool dht_inflight{false};
    };

    RequesterSession* active_request(const Cid& cid);
    std::vector<PeerId> live_successors();
    void send_walk(RequesterSession& s);
    void retransmit(const Cid& cid);
    void requester_fallback(const Cid& cid);
    void begin_exchange(RequesterSession& s);
    void probe_target(RequesterSession& s);
    void fail_target(RequesterSession& s);
    void finish(RequesterSession& s, bool ok);

    void proxy_start_search(ProxySession& ps);
    void proxy_answer(ProxySession& ps);
    void proxy_reply(const ProxySession& ps, PeerId predecessor, WalkTag tag);
    void proxy_fallback(const Cid& cid);

    RaWaConfig config_;
    ForwardGraph graph_;
    std::map<Cid, RequesterSession> requests_;
    std::map<Cid, ProxySession> proxies_;
    std::map<std::pair<Cid, PeerId>, RelayEntry> relays_;
    std::map<Cid, std::set<PeerId>> sent_history_;
};

}  // namespace rawa
