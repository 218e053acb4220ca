// Baseline Bitswap: WANT-HAVE broadcast, DHT fallback after t1, WANT-BLOCK
// retrieval and CANCEL on completion.

#pragma once

#include <map>
#include <set>
#include <vector>

#include "rawa/bitswap.hpp"

namespace rawa {

struct VanillaConfig {
    Millis t1{1000.0};
    Millis give_up{30000.0};
    std::size_t immediate_block_limit{1024};
};

class VanillaEngine : public BitswapNode {
public:
    VanillaEngine(Simulator& sim, PeerId self, VanillaConfig config = {})
        : BitswapNode(sim, self), config_(config) {}

    void request(const Cid& cid) override;
    [[nodiscard]] RequestState request_state(const Cid& cid) const override;

    void on_dial(PeerId target, bool ok) override;
    void on_dht_result(const Cid& cid, std::vector<ProviderRecord> providers) override;

    /// Peers that received our WANT-HAVE for `cid`.
    [[nodiscard]] std::set<PeerId> queried(const Cid& cid) const;

protected:
    void on_have(PeerId from, const Cid& cid) override;
    void on_dont_have(PeerId from, const Cid& cid) override;
    void on_block(PeerId from, const Message& message) override;
    [[nodiscard]] std::size_t immediate_block_limit() const override {
        return config_.immediate_block_limit;
    }

private:
    struct Session {
        Cid cid;
        RequestState state{RequestState::Probing};
        std::set<PeerId> queried;
        /// Discovery order; first responder is tried first.
        std::vector<PeerId> candidates;
        std::set<PeerId> tried;
        std::optional<PeerId> target;
        Millis started_at{0};
        TimerId fallback_timer{0};
        TimerId give_up_timer{0};
        bool dht_inflight{false};
    };

    Session* active(const Cid& cid);
    void add_candidate(Session& s, PeerId peer);
    void fetch_from(Session& s, PeerId provider);
    void try_next(Session& s);
    void fallback(const Cid& cid);
    void finish(Session& s, bool ok);

    VanillaConfig config_;
    std::map<Cid, Session> sessions_;
};

}  // namespace rawa
