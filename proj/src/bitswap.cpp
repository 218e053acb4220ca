#include "rawa/bitswap.hpp"

#include <stdexcept>

namespace rawa {

Cid BlockStore::put(const Block& block) {
    const Cid cid = derive_cid(block);
    auto [it, inserted] = blocks_.emplace(cid, block);
    if (!inserted && !(it->second == block))
        throw std::invalid_argument("CID collision for " + cid.short_hex());
    return cid;
}

bool BlockStore::put(const Cid& cid, const Block& block) {
    if (!validate_block(cid, block)) return false;
    blocks_.emplace(cid, block);
    return true;
}

const Block* BlockStore::get(const Cid& cid) const {
    auto it = blocks_.find(cid);
    return it == blocks_.end() ? nullptr : &it->second;
}

void BitswapNode::on_message(PeerId from, const Message& message) {
    const Cid& cid = message.cid();
    switch (message.type()) {
        case MessageType::WantHave: on_want_have(from, cid); break;
        case MessageType::WantBlock: on_want_block(from, cid); break;
        case MessageType::Cancel: on_cancel(from, cid); break;
        case MessageType::Have: on_have(from, cid); break;
        case MessageType::DontHave: on_dont_have(from, cid); break;
        case MessageType::Block: on_block(from, message); break;
        case MessageType::WantForward: on_want_forward(from, message); break;
        case MessageType::ForwardHave: on_forward_have(from, message); break;
    }
}

void BitswapNode::on_timer(TimerId id) {
    auto it = timers_.find(id);
    if (it == timers_.end()) return;
    auto action = std::move(it->second);
    timers_.erase(it);
    action();
}

TimerId BitswapNode::arm(Millis delay, std::function<void()> action) {
    const TimerId id = sim_.set_timer(self_, delay);
    timers_.emplace(id, std::move(action));
    return id;
}

void BitswapNode::disarm(TimerId& id) {
    if (id != 0) timers_.erase(id);
    id = 0;
}

void BitswapNode::notify(ProtocolEvent::Kind kind, const Cid& cid, std::optional<WalkTag> walk) {
    sim_.notify(ProtocolEvent{kind, self_, cid, walk});
}

void BitswapNode::on_want_have(PeerId from, const Cid& cid) {
    const Block* block = store_.get(cid);
    if (block == nullptr) {
        pending_wants_.emplace(from, cid);
        send(from, Message::dont_have(cid));
        return;
    }
    if (block->size() <= immediate_block_limit()) {
        send(from, Message::block(cid, *block));
        return;
    }
    pending_wants_.emplace(from, cid);
    send(from, Message::have(cid));
}

void BitswapNode::on_want_block(PeerId from, const Cid& cid) {
    if (const Block* block = store_.get(cid))
        send(from, Message::block(cid, *block));
    else
        send(from, Message::dont_have(cid));
}

void BitswapNode::on_cancel(PeerId from, const Cid& cid) { pending_wants_.erase({from, cid}); }

}  // namespace rawa
