// Provider-side Bitswap behavior shared by the Vanilla and RaWa engines.

#pragma once

#include <functional>
#include <map>
#include <set>
#include <utility>

#include "rawa/core.hpp"
#include "rawa/netsim.hpp"

namespace rawa {

/// Only blocks that validate against their CID are admitted.
class BlockStore {
public:
    /// Returns the CID. Throws std::invalid_argument on a CID collision with a
    /// different payload.
    Cid put(const Block& block);
    /// Returns false if the block does not match the CID.
    bool put(const Cid& cid, const Block& block);

    [[nodiscard]] bool has(const Cid& cid) const { return blocks_.contains(cid); }
    [[nodiscard]] const Block* get(const Cid& cid) const;
    [[nodiscard]] std::size_t size() const { return blocks_.size(); }
    [[nodiscard]] const std::map<Cid, Block>& blocks() const { return blocks_; }

private:
    std::map<Cid, Block> blocks_;
};

enum class RequestState { Idle, Probing, AwaitingBlock, Walking, Exchanging, Done, Failed };

class BitswapNode : public Node {
public:
    BitswapNode(Simulator& sim, PeerId self) : sim_(sim), self_(self) {}

    [[nodiscard]] PeerId id() const { return self_; }
    [[nodiscard]] BlockStore& store() { return store_; }
    [[nodiscard]] const BlockStore& store() const { return store_; }

    /// Called once at t=0 after the overlay is wired.
    virtual void start() {}
    /// Starts retrieval of `cid`. Duplicate requests for an active CID are ignored.
    virtual void request(const Cid& cid) = 0;
    [[nodiscard]] virtual RequestState request_state(const Cid& cid) const = 0;

    /// WANT-HAVE senders still awaiting our CANCEL.
    [[nodiscard]] const std::set<std::pair<PeerId, Cid>>& pending_wants() const {
        return pending_wants_;
    }

    void on_message(PeerId from, const Message& message) final;
    void on_timer(TimerId id) final;

protected:
    virtual void on_want_have(PeerId from, const Cid& cid);
    virtual void on_want_block(PeerId from, const Cid& cid);
    virtual void on_cancel(PeerId from, const Cid& cid);
    virtual void on_have(PeerId /*from*/, const Cid& /*cid*/) {}
    virtual void on_dont_have(PeerId /*from*/, const Cid& /*cid*/) {}
    virtual void on_block(PeerId /*from*/, const Message& /*message*/) {}
    virtual void on_want_forward(PeerId /*from*/, const Message& /*message*/) {}
    virtual void on_forward_have(PeerId /*from*/, const Message& /*message*/) {}

    /// Blocks at or below this size are pushed in reply to WANT-HAVE.
    /// Engines without the shortcut return 0.
    [[nodiscard]] virtual std::size_t immediate_block_limit() const { return 0; }

    bool send(PeerId to, Message message) { return sim_.send(self_, to, std::move(message)); }
    TimerId arm(Millis delay, std::function<void()> action);
    void disarm(TimerId& id);
    void notify(ProtocolEvent::Kind kind, const Cid& cid, std::optional<WalkTag> walk = {});

    Simulator& sim_;
    PeerId self_;
    BlockStore store_;
    std::set<std::pair<PeerId, Cid>> pending_wants_;

private:
    std::map<TimerId, std::function<void()>> timers_;
};

}  // namespace rawa
