#include "rawa/vanilla.hpp"

#include <algorithm>

namespace rawa {

void VanillaEngine::request(const Cid& cid) {
    if (auto it = sessions_.find(cid); it != sessions_.end()) {
        const auto st = it->second.state;
        if (st != RequestState::Done && st != RequestState::Failed) return;
    }
    Session& s = sessions_[cid] = Session{};
    s.cid = cid;
    s.started_at = sim_.now();
    notify(ProtocolEvent::Kind::RequestStarted, cid);

    if (store_.has(cid)) {
        finish(s, true);
        return;
    }
    for (const auto& peer : sim_.neighbors(self_)) {
        if (send(peer, Message::want_have(cid))) s.queried.insert(peer);
    }
    s.fallback_timer = arm(config_.t1, [this, cid] { fallback(cid); });
    s.give_up_timer = arm(config_.give_up, [this, cid] {
        if (Session* s = active(cid)) finish(*s, false);
    });
}

RequestState VanillaEngine::request_state(const Cid& cid) const {
    auto it = sessions_.find(cid);
    return it == sessions_.end() ? RequestState::Idle : it->second.state;
}

std::set<PeerId> VanillaEngine::queried(const Cid& cid) const {
    auto it = sessions_.find(cid);
    return it == sessions_.end() ? std::set<PeerId>{} : it->second.queried;
}

VanillaEngine::Session* VanillaEngine::active(const Cid& cid) {
    auto it = sessions_.find(cid);
    if (it == sessions_.end()) return nullptr;
    const auto st = it->second.state;
    if (st == RequestState::Done || st == RequestState::Failed) return nullptr;
    return &it->second;
}

void VanillaEngine::add_candidate(Session& s, PeerId peer) {
    if (peer == self_ || s.tried.contains(peer)) return;
    if (std::ranges::find(s.candidates, peer) == s.candidates.end()) s.candidates.push_back(peer);
}

void VanillaEngine::on_have(PeerId from, const Cid& cid) {
    Session* s = active(cid);
    if (s == nullptr) return;
    add_candidate(*s, from);
    if (s->state == RequestState::Probing) fetch_from(*s, from);
}

void VanillaEngine::on_dont_have(PeerId from, const Cid& cid) {
    Session* s = active(cid);
    if (s == nullptr || s->state != RequestState::AwaitingBlock || s->target != from) return;
    s->tried.insert(from);
    try_next(*s);
}

void VanillaEngine::on_block(PeerId from, const Message& message) {
    Session* s = active(message.cid());
    if (s == nullptr || !message.payload()) return;
    if (!store_.put(message.cid(), *message.payload())) {
        notify(ProtocolEvent::Kind::BlockRejected, message.cid());
        if (s->state == RequestState::AwaitingBlock && s->target == from) {
            s->tried.insert(from);
            try_next(*s);
        }
        return;
    }
    finish(*s, true);
}

void VanillaEngine::fetch_from(Session& s, PeerId provider) {
    s.state = RequestState::AwaitingBlock;
    s.target = provider;
    if (sim_.connected(self_, provider))
        send(provider, Message::want_block(s.cid));
    else
        sim_.dial(self_, provider);
}

void VanillaEngine::on_dial(PeerId target, bool ok) {
    for (auto& [cid, s] : sessions_) {
        if (s.state != RequestState::AwaitingBlock || s.target != target) continue;
        if (ok) {
            send(target, Message::want_block(cid));
        } else {
            s.tried.insert(target);
            try_next(s);
        }
    }
}

void VanillaEngine::try_next(Session& s) {
    s.target.reset();
    for (const auto& peer : s.candidates) {
        if (!s.tried.contains(peer)) {
            fetch_from(s, peer);
            return;
        }
    }
    s.state = RequestState::Probing;
    if (s.fallback_timer == 0) {
        const Cid cid = s.cid;
        s.fallback_timer = arm(config_.t1, [this, cid] { fallback(cid); });
    }
}

void VanillaEngine::fallback(const Cid& cid) {
    Session* s = active(cid);
    if (s == nullptr) return;
    s->fallback_timer = 0;
    if (s->state != RequestState::Probing || s->dht_inflight) return;
    s->dht_inflight = true;
    sim_.dht_lookup(self_, cid);
}

void VanillaEngine::on_dht_result(const Cid& cid, std::vector<ProviderRecord> providers) {
    Session* s = active(cid);
    if (s == nullptr) return;
    s->dht_inflight = false;
    std::vector<PeerId> fresh;
    for (const auto& r : providers) {
        if (r.peer == self_ || s->tried.contains(r.peer)) continue;
        add_candidate(*s, r.peer);
        fresh.push_back(r.peer);
    }
    if (s->state != RequestState::Probing) return;
    if (fresh.empty()) {
        s->fallback_timer = arm(config_.t1, [this, cid] { fallback(cid); });
        return;
    }
    fetch_from(*s, sim_.rng(self_).pick(fresh));
}

void VanillaEngine::finish(Session& s, bool ok) {
    s.state = ok ? RequestState::Done : RequestState::Failed;
    disarm(s.fallback_timer);
    disarm(s.give_up_timer);
    s.target.reset();
    if (ok) {
        for (const auto& peer : s.queried) send(peer, Message::cancel(s.cid));
    }
    notify(ok ? ProtocolEvent::Kind::RequestCompleted : ProtocolEvent::Kind::RequestFailed, s.cid);
}

}  // namespace rawa
