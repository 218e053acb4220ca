#include "rawa/netsim.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace rawa {

namespace {

std::uint64_t link_key(PeerId from, PeerId to) {
    return (static_cast<std::uint64_t>(from.index) << 32) | to.index;
}

void fnv1a(std::uint64_t& h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
}

}  // namespace

void LinkSpec::validate() const {
    if (!(jitter >= 0.0)) throw std::invalid_argument("link jitter must be >= 0");
    if (!(latency > jitter)) throw std::invalid_argument("link latency must exceed jitter");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("link bandwidth must be positive");
}

Millis serialization_delay(const LinkSpec& link, std::size_t bytes) {
    return static_cast<double>(bytes) / link.bandwidth * 1000.0;
}

Millis link_delay(const LinkSpec& link, std::size_t bytes, double unit) {
    return link.latency + serialization_delay(link, bytes) + link.jitter * (2.0 * unit - 1.0);
}

Simulator::Simulator(SimConfig config, Topology topology, RngStream rng)
    : config_(config), topology_(std::move(topology)), seed_(rng.seed()) {
    config_.link.validate();
    if (config_.dial_rtt_multiplier < 0.0)
        throw std::invalid_argument("dial_rtt_multiplier must be >= 0");
    const auto n = topology_.size();
    nodes_.resize(n);
    alive_.assign(n, true);
    adj_.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        adj_.push_back(topology_.neighbors(PeerId{i}));
        node_rngs_.push_back(RngStream::derive(seed_, 2 * std::uint64_t{i}));
        net_rngs_.push_back(RngStream::derive(seed_, 2 * std::uint64_t{i} + 1));
    }
}

Simulator::~Simulator() = default;

void Simulator::attach(PeerId peer, std::unique_ptr<Node> node) {
    nodes_.at(peer.index) = std::move(node);
}

bool Simulator::connected(PeerId a, PeerId b) const {
    return alive_.at(a.index) && alive_.at(b.index) && adj_.at(a.index).contains(b);
}

bool Simulator::send(PeerId from, PeerId to, Message message) {
    if (!connected(from, to)) return false;
    const auto bytes = wire_size(message);
    const auto key = link_key(from, to);
    // The k-th message on a directed link always draws the same jitter.
    const double unit = keyed_unit(seed_, key, link_sends_[key]++);
    Millis at = now_ + link_delay(config_.link, bytes, unit);
    auto& last = last_delivery_[key];
    at = std::max(at, last);
    last = at;
    ++messages_sent_;
    bytes_sent_ += bytes;
    for (auto* o : observers_) o->on_send(now_, from, to, message, bytes, at);
    schedule(at, Deliver{from, to, std::move(message), bytes});
    return true;
}

void Simulator::dial(PeerId from, PeerId to) {
    if (connected(from, to) || !alive(to)) {
        schedule(now_, DialComplete{from, to, true});
        return;
    }
    Millis rtt = 0.0;
    for (int leg = 0; leg < 2; ++leg) {
        rtt += config_.link.latency;
        if (config_.link.jitter > 0.0) rtt += net_rngs_[from.index].uniform(-config_.link.jitter, config_.link.jitter);
    }
    schedule(now_ + config_.dial_rtt_multiplier * rtt, DialComplete{from, to, false});
}

TimerId Simulator::set_timer(PeerId node, Millis delay) {
    const TimerId id = next_timer_++;
    schedule(now_ + std::max(0.0, delay), Timer{node, id});
    return id;
}

void Simulator::dht_lookup(PeerId node, const Cid& cid) {
    if (dht_ == nullptr) throw std::logic_error("no DHT attached to simulator");
    auto answer = dht_->lookup(cid, net_rngs_[node.index]);
    schedule(now_ + answer.delay, DhtResult{node, cid, std::move(answer.providers)});
}

void Simulator::schedule_departure(PeerId node, Millis at) {
    schedule(std::max(at, now_), Departure{node});
}

void Simulator::schedule_call(Millis at, std::function<void()> action) {
    schedule(std::max(at, now_), Call{std::move(action)});
}

void Simulator::notify(const ProtocolEvent& event) {
    for (auto* o : observers_) o->on_protocol(now_, event);
}

void Simulator::schedule(Millis at, Action action) {
    queue_.push(Event{at, next_seq_++, std::move(action)});
}

void Simulator::disconnect(PeerId a, PeerId b) {
    adj_[a.index].erase(b);
    adj_[b.index].erase(a);
}

RunStats Simulator::run(std::optional<Millis> until) {
    RunStats stats;
    while (!queue_.empty()) {
        if (until && queue_.top().time > *until) break;
        if (stats.events >= config_.event_cap) {
            stats.livelock = true;
            break;
        }
        Event event = queue_.top();
        queue_.pop();
        now_ = event.time;
        ++stats.events;
        dispatch(event);
    }
    if (until && !stats.livelock) now_ = std::max(now_, *until);
    return stats;
}

void Simulator::record(const Event& event, std::string_view kind, std::optional<PeerId> from,
                       std::optional<PeerId> to, const Message* message, std::size_t size) {
    char buf[256];
    const int n = std::snprintf(
        buf, sizeof buf, "%.6f,%llu,%.*s,%s,%s,%.*s,%s,%zu\n", event.time,
        static_cast<unsigned long long>(event.seq), static_cast<int>(kind.size()), kind.data(),
        from ? from->str().c_str() : "", to ? to->str().c_str() : "",
        message ? static_cast<int>(to_string(message->type()).size()) : 0,
        message ? to_string(message->type()).data() : "",
        message ? message->cid().short_hex().c_str() : "", size);
    const std::string_view line(buf, static_cast<std::size_t>(std::min<int>(n, sizeof buf - 1)));
    fnv1a(trace_hash_, line);
    if (trace_out_ != nullptr) *trace_out_ << line;
}

void Simulator::dispatch(const Event& event) {
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Deliver>) {
                if (!connected(a.from, a.to)) {
                    ++drops_;
                    record(event, "drop", a.from, a.to, &a.message, a.bytes);
                    for (auto* o : observers_) o->on_drop(now_, a.from, a.to, a.message);
                    return;
                }
                record(event, "deliver", a.from, a.to, &a.message, a.bytes);
                for (auto* o : observers_) o->on_deliver(now_, event.seq, a.from, a.to, a.message);
                if (auto* n = nodes_[a.to.index].get()) n->on_message(a.from, a.message);
            } else if constexpr (std::is_same_v<T, Timer>) {
                if (!alive(a.node)) return;
                record(event, "timer", a.node, std::nullopt, nullptr, 0);
                if (auto* n = nodes_[a.node.index].get()) n->on_timer(a.id);
            } else if constexpr (std::is_same_v<T, Departure>) {
                if (!alive(a.node)) return;
                record(event, "depart", a.node, std::nullopt, nullptr, 0);
                alive_[a.node.index] = false;
                const auto peers = adj_[a.node.index];
                for (const auto& p : peers) disconnect(a.node, p);
            } else if constexpr (std::is_same_v<T, DialComplete>) {
                if (!alive(a.from)) return;
                const bool ok = alive(a.to);
                if (ok && !a.immediate) {
                    adj_[a.from.index].insert(a.to);
                    adj_[a.to.index].insert(a.from);
                }
                record(event, ok ? "dial" : "dial-failed", a.from, a.to, nullptr, 0);
                if (auto* n = nodes_[a.from.index].get()) n->on_dial(a.to, ok);
            } else if constexpr (std::is_same_v<T, DhtResult>) {
                if (!alive(a.node)) return;
                std::vector<ProviderRecord> live;
                for (const auto& r : a.providers)
                    if (alive(r.peer)) live.push_back(r);
                record(event, "dht", a.node, std::nullopt, nullptr, live.size());
                if (auto* n = nodes_[a.node.index].get()) n->on_dht_result(a.cid, std::move(live));
            } else if constexpr (std::is_same_v<T, Call>) {
                record(event, "call", std::nullopt, std::nullopt, nullptr, 0);
                a.action();
            }
        },
        event.action);
}

}  // namespace rawa
