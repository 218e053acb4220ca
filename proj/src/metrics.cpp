#include "rawa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rawa {

PrecisionRecall precision_recall(const Prediction& prediction, const GroundTruth& truth) {
    std::size_t correct = 0;
    for (const auto& [peer, cid] : prediction.links) {
        auto it = truth.interests.find(peer);
        if (it == truth.interests.end())
            throw std::invalid_argument("prediction links non-requester " + peer.str());
        if (it->second == cid) ++correct;
    }
    for (const auto& peer : prediction.abstained)
        if (!truth.interests.contains(peer))
            throw std::invalid_argument("prediction abstains on non-requester " + peer.str());

    PrecisionRecall pr;
    if (!prediction.links.empty())
        pr.precision = static_cast<double>(correct) / static_cast<double>(prediction.links.size());
    if (!truth.interests.empty())
        pr.recall = static_cast<double>(correct) / static_cast<double>(truth.interests.size());
    return pr;
}

std::uint64_t RunMetrics::msgs_total() const {
    return std::accumulate(msg_counts.begin(), msg_counts.end(), std::uint64_t{0});
}

double RunMetrics::resolved_fraction() const {
    if (ttfb.empty()) return 1.0;
    const auto resolved = std::ranges::count_if(ttfb, [](const auto& kv) { return kv.second.has_value(); });
    return static_cast<double>(resolved) / static_cast<double>(ttfb.size());
}

std::vector<double> RunMetrics::resolved_ttfb() const {
    std::vector<double> out;
    for (const auto& [peer, t] : ttfb)
        if (t) out.push_back(*t);
    return out;
}

void MetricsCollector::on_send(Millis, PeerId, PeerId, const Message& message, std::size_t bytes,
                               Millis) {
    ++counts_[static_cast<std::size_t>(message.type())];
    bytes_ += bytes;
}

void MetricsCollector::on_protocol(Millis now, const ProtocolEvent& event) {
    using K = ProtocolEvent::Kind;
    const auto key = std::make_pair(event.node, event.cid);
    switch (event.kind) {
        case K::RequestStarted: requests_[key] = RequestRecord{now, std::nullopt, false}; break;
        case K::RequestCompleted:
            if (auto it = requests_.find(key); it != requests_.end() && !it->second.completed)
                it->second.completed = now;
            break;
        case K::RequestFailed:
            if (auto it = requests_.find(key); it != requests_.end()) it->second.failed = true;
            break;
        case K::ProxyStarted:
            if (event.walk) walk_hops_.try_emplace(event.walk->origin, event.walk->hops);
            break;
        case K::BlockRejected:
        case K::StrayForwardHave: break;
    }
}

std::optional<Millis> MetricsCollector::ttfb(PeerId requester, const Cid& cid) const {
    const auto& r = requests_.at({requester, cid});
    if (!r.completed) return std::nullopt;
    return *r.completed - r.started;
}

RunMetrics MetricsCollector::finish() const {
    RunMetrics m;
    for (const auto& [key, r] : requests_) {
        std::optional<Millis> t;
        if (r.completed) t = *r.completed - r.started;
        m.ttfb[key.first] = t;
    }
    for (const auto& [origin, hops] : walk_hops_) m.walk_lengths.push_back(hops);
    m.msg_counts = counts_;
    m.bytes_total = bytes_;
    return m;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::ranges::sort(v);
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

Stats summarize(std::vector<double> values) {
    Stats s;
    s.n = values.size();
    if (values.empty()) return s;
    std::ranges::sort(values);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0;
        for (double x : values) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    s.median = percentile(values, 0.5);
    s.p5 = percentile(values, 0.05);
    s.p95 = percentile(values, 0.95);
    return s;
}

Summary aggregate(std::span<const RunMetrics> runs) {
    if (runs.empty()) throw std::invalid_argument("aggregate needs at least one run");
    Summary out;
    out.runs = runs.size();
    std::vector<double> precision, recall, ttfb;
    std::size_t resolved = 0, requests = 0;
    double msgs = 0, bytes = 0;
    for (const auto& r : runs) {
        if (r.precision) precision.push_back(*r.precision);
        if (r.recall) recall.push_back(*r.recall);
        for (double t : r.resolved_ttfb()) ttfb.push_back(t);
        for (const auto& [peer, t] : r.ttfb) {
            ++requests;
            if (t) ++resolved;
        }
        for (auto hops : r.walk_lengths) ++out.walk_histogram[hops];
        msgs += static_cast<double>(r.msgs_total());
        bytes += static_cast<double>(r.bytes_total);
    }
    out.precision = summarize(std::move(precision));
    out.recall = summarize(std::move(recall));
    out.ttfb = summarize(std::move(ttfb));
    out.resolved_fraction = requests == 0 ? 1.0 : static_cast<double>(resolved) / static_cast<double>(requests);
    out.msgs_mean = msgs / static_cast<double>(runs.size());
    out.bytes_mean = bytes / static_cast<double>(runs.size());
    return out;
}

}  // namespace rawa
