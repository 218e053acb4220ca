#include "rawa/rawa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rawa {

void RaWaConfig::validate() const {
    std::string errors;
    auto fail = [&](const std::string& e) { errors += (errors.empty() ? "" : "; ") + e; };
    if (!(p > 0.0 && p <= 1.0)) fail("p must be in (0, 1]");
    if (!(t0 > 0.0)) fail("t0 must be positive");
    if (!(t1 > 0.0)) fail("t1 must be positive");
    if (!(u > t0)) fail("u must exceed t0");
    if (!(u > t1)) fail("u must exceed t1");
    if (eta == 0) fail("eta must be >= 1 or max");
    if (!(r > 0.0)) fail("r must be positive");
    if (aggregation_window < 0.0) fail("aggregation_window must be >= 0");
    if (!(give_up > 0.0)) fail("give_up must be positive");
    if (!(exchange_timeout > 0.0)) fail("exchange_timeout must be positive");
    if (!errors.empty()) throw std::invalid_argument(errors);
}

double path_length_probability(double p, int hops) {
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("p must be in (0, 1]");
    if (hops < 1) throw std::domain_error("hop count must be >= 1");
    return 1.0 - std::pow(1.0 - p, hops);
}

ForwardGraph build_forward_graph(const std::set<PeerId>& neighbors, std::size_t eta,
                                 RngStream& rng, Millis now) {
    ForwardGraph g;
    g.built_at = now;
    g.successors = rng.sample(std::vector<PeerId>(neighbors.begin(), neighbors.end()), eta);
    std::ranges::sort(g.successors);
    return g;
}

RaWaEngine::RaWaEngine(Simulator& sim, PeerId self, RaWaConfig config)
    : BitswapNode(sim, self), config_(config) {
    config_.validate();
}

void RaWaEngine::start() { reconstruct_graph(); }

void RaWaEngine::reconstruct_graph() {
    graph_ = build_forward_graph(sim_.neighbors(self_), config_.eta, sim_.rng(self_), sim_.now());
}

const ForwardGraph& RaWaEngine::forward_graph() {
    if (sim_.now() - graph_.built_at >= config_.r) reconstruct_graph();
    return graph_;
}

std::vector<PeerId> RaWaEngine::live_successors() {
    std::vector<PeerId> out;
    for (const auto& p : forward_graph().successors)
        if (sim_.connected(self_, p)) out.push_back(p);
    return out;
}

std::set<PeerId> RaWaEngine::sent_history(const Cid& cid) const {
    auto it = sent_history_.find(cid);
    return it == sent_history_.end() ? std::set<PeerId>{} : it->second;
}

std::vector<PeerId> RaWaEngine::first_hops(const Cid& cid) const {
    auto it = requests_.find(cid);
    return it == requests_.end() ? std::vector<PeerId>{} : it->second.hops_used;
}

RequestState RaWaEngine::request_state(const Cid& cid) const {
    auto it = requests_.find(cid);
    return it == requests_.end() ? RequestState::Idle : it->second.state;
}

RaWaEngine::RequesterSession* RaWaEngine::active_request(const Cid& cid) {
    auto it = requests_.find(cid);
    if (it == requests_.end()) return nullptr;
    const auto st = it->second.state;
    if (st == RequestState::Done || st == RequestState::Failed) return nullptr;
    return &it->second;
}

// ---- requester session ----------------------------------------------------

void RaWaEngine::request(const Cid& cid) {
    if (active_request(cid) != nullptr) return;
    RequesterSession& s = requests_[cid] = RequesterSession{};
    s.cid = cid;
    s.started_at = sim_.now();
    notify(ProtocolEvent::Kind::RequestStarted, cid);

    if (store_.has(cid)) {
        finish(s, true);
        return;
    }
    send_walk(s);
    s.retransmit_timer = arm(config_.t0, [this, cid] { retransmit(cid); });
    s.fallback_timer = arm(config_.u, [this, cid] { requester_fallback(cid); });
    s.give_up_timer = arm(config_.give_up, [this, cid] {
        if (RequesterSession* rs = active_request(cid)) finish(*rs, false);
    });
}

void RaWaEngine::send_walk(RequesterSession& s) {
    if (!s.first_hop || !sim_.connected(self_, *s.first_hop)) {
        const auto successors = live_successors();
        if (successors.empty()) {
            s.first_hop.reset();
            return;
        }
        s.first_hop = sim_.rng(self_).pick(successors);
        if (std::ranges::find(s.hops_used, *s.first_hop) == s.hops_used.end())
            s.hops_used.push_back(*s.first_hop);
        sent_history_[s.cid].insert(*s.first_hop);
    }
    send(*s.first_hop, Message::want_forward(s.cid, WalkTag{self_, 1}));
}

void RaWaEngine::retransmit(const Cid& cid) {
    RequesterSession* s = active_request(cid);
    if (s == nullptr) return;
    if (s->state == RequestState::Walking) send_walk(*s);
    s->retransmit_timer = arm(config_.t0, [this, cid] { retransmit(cid); });
}

void RaWaEngine::requester_fallback(const Cid& cid) {
    RequesterSession* s = active_request(cid);
    if (s == nullptr) return;
    if (s->state == RequestState::Walking && !s->dht_inflight) {
        s->dht_inflight = true;
        sim_.dht_lookup(self_, cid);
    }
    s->fallback_timer = arm(config_.u, [this, cid] { requester_fallback(cid); });
}

void RaWaEngine::offer_providers(const Cid& cid, const std::vector<ProviderRecord>& providers) {
    RequesterSession* s = active_request(cid);
    if (s == nullptr) return;
    for (const auto& r : providers) {
        if (r.peer == self_ || s->tried.contains(r.peer)) continue;
        auto it = std::ranges::find_if(s->candidates,
                                       [&](const ProviderRecord& c) { return c.peer == r.peer; });
        if (it == s->candidates.end())
            s->candidates.push_back(r);
        else if (!it->address && r.address)
            it->address = r.address;
    }
    if (s->state == RequestState::Walking) begin_exchange(*s);
}

void RaWaEngine::begin_exchange(RequesterSession& s) {
    std::vector<PeerId> untried;
    for (const auto& c : s.candidates)
        if (!s.tried.contains(c.peer)) untried.push_back(c.peer);
    if (untried.empty()) {
        s.state = RequestState::Walking;
        return;
    }
    s.state = RequestState::Exchanging;
    s.target = sim_.rng(self_).pick(untried);
    if (sim_.connected(self_, *s.target)) {
        probe_target(s);
    } else {
        s.dialing = true;
        sim_.dial(self_, *s.target);
    }
}

void RaWaEngine::on_dial(PeerId target, bool ok) {
    for (auto& [cid, s] : requests_) {
        if (s.state != RequestState::Exchanging || s.target != target || !s.dialing) continue;
        s.dialing = false;
        if (ok)
            probe_target(s);
        else
            fail_target(s);
    }
}

void RaWaEngine::probe_target(RequesterSession& s) {
    const PeerId target = *s.target;
    if (config_.verify_provider) {
        s.awaiting_have = true;
        send(target, Message::want_have(s.cid));
    } else {
        send(target, Message::want_block(s.cid));
    }
    const Cid cid = s.cid;
    disarm(s.exchange_timer);
    s.exchange_timer = arm(config_.exchange_timeout, [this, cid, target] {
        RequesterSession* rs = active_request(cid);
        if (rs == nullptr) return;
        rs->exchange_timer = 0;
        if (rs->state == RequestState::Exchanging && rs->target == target) fail_target(*rs);
    });
}

void RaWaEngine::fail_target(RequesterSession& s) {
    if (s.target) s.tried.insert(*s.target);
    s.target.reset();
    s.awaiting_have = false;
    s.dialing = false;
    disarm(s.exchange_timer);
    begin_exchange(s);
}

void RaWaEngine::finish(RequesterSession& s, bool ok) {
    s.state = ok ? RequestState::Done : RequestState::Failed;
    s.target.reset();
    disarm(s.retransmit_timer);
    disarm(s.fallback_timer);
    disarm(s.give_up_timer);
    disarm(s.exchange_timer);
    notify(ok ? ProtocolEvent::Kind::RequestCompleted : ProtocolEvent::Kind::RequestFailed, s.cid);
}

void RaWaEngine::on_have(PeerId from, const Cid& cid) {
    if (RequesterSession* s = active_request(cid);
        s != nullptr && s->state == RequestState::Exchanging && s->target == from &&
        s->awaiting_have) {
        s->awaiting_have = false;
        send(from, Message::want_block(cid));
    }

    auto it = proxies_.find(cid);
    if (it == proxies_.end() || it->second.gave_up) return;
    ProxySession& ps = it->second;
    if (std::ranges::none_of(ps.found, [&](const ProviderRecord& r) { return r.peer == from; }))
        ps.found.push_back(ProviderRecord{from, std::nullopt});
    if (ps.answered) return;
    if (config_.aggregation_window <= 0.0) {
        proxy_answer(ps);
    } else if (ps.window_timer == 0) {
        ps.window_timer = arm(config_.aggregation_window, [this, cid] {
            auto pit = proxies_.find(cid);
            if (pit == proxies_.end()) return;
            pit->second.window_timer = 0;
            if (!pit->second.answered) proxy_answer(pit->second);
        });
    }
}

void RaWaEngine::on_dont_have(PeerId from, const Cid& cid) {
    RequesterSession* s = active_request(cid);
    if (s != nullptr && s->state == RequestState::Exchanging && s->target == from && !s->dialing)
        fail_target(*s);
}

void RaWaEngine::on_block(PeerId from, const Message& message) {
    RequesterSession* s = active_request(message.cid());
    if (s == nullptr || !message.payload()) return;
    if (!store_.put(message.cid(), *message.payload())) {
        notify(ProtocolEvent::Kind::BlockRejected, message.cid());
        if (s->state == RequestState::Exchanging && s->target == from) fail_target(*s);
        return;
    }
    finish(*s, true);
}

// ---- relay manager ----------------------------------------------------------

void RaWaEngine::on_want_forward(PeerId from, const Message& message) {
    const Cid& cid = message.cid();
    const WalkTag tag = message.walk().value_or(WalkTag{from, 0});
    const WalkTag next_tag{tag.origin, tag.hops + 1};
    const auto key = std::make_pair(cid, from);

    if (auto it = relays_.find(key);
        it != relays_.end() && sim_.now() - it->second.created_at <= config_.relay_ttl) {
        RelayEntry& entry = it->second;
        if (entry.role == WalkRole::Relay) {
            if (sim_.connected(self_, entry.successor)) {
                send(entry.successor, Message::want_forward(cid, next_tag));
                return;
            }
            // Successor is gone: the walk ends here.
            become_proxy(cid, from, entry.tag);
            return;
        }
        auto pit = proxies_.find(cid);
        if (pit == proxies_.end()) {
            become_proxy(cid, from, entry.tag);
        } else if (pit->second.answered) {
            proxy_reply(pit->second, from, entry.tag);
        } else if (pit->second.gave_up) {
            proxy_start_search(pit->second);
        }
        return;
    }

    if (sim_.rng(self_).bernoulli(config_.p)) {
        become_proxy(cid, from, tag);
        return;
    }
    const auto successors = live_successors();
    auto& history = sent_history_[cid];
    std::vector<PeerId> eligible;
    for (const auto& s : successors)
        if (s != from && !history.contains(s)) eligible.push_back(s);
    if (eligible.empty() && history.empty()) eligible = successors;
    if (eligible.empty()) {
        become_proxy(cid, from, tag);
        return;
    }
    const PeerId next = sim_.rng(self_).pick(eligible);
    history.insert(next);
    relays_[key] = RelayEntry{WalkRole::Relay, next, tag, sim_.now()};
    send(next, Message::want_forward(cid, next_tag));
}

void RaWaEngine::on_forward_have(PeerId from, const Message& message) {
    const Cid& cid = message.cid();
    bool matched = false;
    for (auto it = relays_.lower_bound({cid, PeerId{0}}); it != relays_.end() && it->first.first == cid;
         ++it) {
        const RelayEntry& e = it->second;
        if (e.role != WalkRole::Relay || e.successor != from) continue;
        if (sim_.now() - e.created_at > config_.relay_ttl) continue;
        send(it->first.second, Message::forward_have(cid, message.providers(), e.tag));
        matched = true;
    }
    if (auto it = requests_.find(cid); it != requests_.end()) {
        const auto& hops = it->second.hops_used;
        if (std::ranges::find(hops, from) != hops.end()) {
            matched = true;
            offer_providers(cid, message.providers());
        }
    }
    if (!matched) notify(ProtocolEvent::Kind::StrayForwardHave, cid, message.walk());
}

// ---- proxy session ----------------------------------------------------------

void RaWaEngine::become_proxy(const Cid& cid, PeerId predecessor, WalkTag tag) {
    relays_[{cid, predecessor}] = RelayEntry{WalkRole::Proxy, PeerId{}, tag, sim_.now()};
    notify(ProtocolEvent::Kind::ProxyStarted, cid, tag);

    auto [it, created] = proxies_.try_emplace(cid);
    ProxySession& ps = it->second;
    auto pred = std::ranges::find_if(ps.predecessors, [&](const auto& pt) { return pt.first == predecessor; });
    if (pred == ps.predecessors.end())
        ps.predecessors.emplace_back(predecessor, tag);
    else
        pred->second = tag;

    if (created) {
        ps.cid = cid;
        proxy_start_search(ps);
    } else if (ps.answered) {
        proxy_reply(ps, predecessor, tag);
    } else if (ps.gave_up) {
        proxy_start_search(ps);
    }
}

void RaWaEngine::proxy_start_search(ProxySession& ps) {
    ps.started_at = sim_.now();
    ps.gave_up = false;
    ps.answered = false;
    if (store_.has(ps.cid)) {
        ps.found = {ProviderRecord{self_, std::nullopt}};
        proxy_answer(ps);
        return;
    }
    for (const auto& peer : sim_.neighbors(self_))
        if (send(peer, Message::want_have(ps.cid))) ps.queried.insert(peer);
    const Cid cid = ps.cid;
    ps.fallback_timer = arm(config_.t1, [this, cid] { proxy_fallback(cid); });
}

void RaWaEngine::proxy_reply(const ProxySession& ps, PeerId predecessor, WalkTag tag) {
    if (ps.found.empty()) return;
    send(predecessor, Message::forward_have(ps.cid, ps.found, tag));
}

void RaWaEngine::proxy_answer(ProxySession& ps) {
    ps.answered = true;
    disarm(ps.fallback_timer);
    disarm(ps.window_timer);
    for (const auto& [pred, tag] : ps.predecessors) proxy_reply(ps, pred, tag);
    for (const auto& peer : ps.queried) send(peer, Message::cancel(ps.cid));
    ps.queried.clear();
}

void RaWaEngine::proxy_fallback(const Cid& cid) {
    auto it = proxies_.find(cid);
    if (it == proxies_.end()) return;
    ProxySession& ps = it->second;
    ps.fallback_timer = 0;
    if (ps.answered || ps.gave_up || ps.dht_inflight) return;
    ps.dht_inflight = true;
    sim_.dht_lookup(self_, cid);
}

void RaWaEngine::on_dht_result(const Cid& cid, std::vector<ProviderRecord> providers) {
    if (RequesterSession* s = active_request(cid); s != nullptr && s->dht_inflight) {
        s->dht_inflight = false;
        offer_providers(cid, providers);
    }

    auto it = proxies_.find(cid);
    if (it == proxies_.end() || !it->second.dht_inflight) return;
    ProxySession& ps = it->second;
    ps.dht_inflight = false;
    for (const auto& r : providers) {
        auto f = std::ranges::find_if(ps.found, [&](const ProviderRecord& x) { return x.peer == r.peer; });
        if (f == ps.found.end())
            ps.found.push_back(r);
        else if (!f->address)
            f->address = r.address;
    }
    if (ps.answered) return;
    if (!ps.found.empty()) {
        proxy_answer(ps);
    } else if (sim_.now() - ps.started_at < config_.give_up) {
        ps.fallback_timer = arm(config_.t1, [this, cid] { proxy_fallback(cid); });
    } else {
        ps.gave_up = true;
        for (const auto& peer : ps.queried) send(peer, Message::cancel(cid));
        ps.queried.clear();
    }
}

}  // namespace rawa
