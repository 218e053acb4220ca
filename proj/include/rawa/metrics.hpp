// Ground truth, privacy scores, time-to-first-block and load accounting.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rawa/adversary.hpp"
#include "rawa/core.hpp"
#include "rawa/netsim.hpp"

namespace rawa {

struct GroundTruth {
    std::map<PeerId, Cid> interests;
};

struct PrecisionRecall {
    /// Unset when the prediction made no links.
    std::optional<double> precision;
    double recall{0};
};

/// Set-based scores: correct / |links| and correct / |truth|. Throws
/// std::invalid_argument if the prediction names a peer outside the truth.
[[nodiscard]] PrecisionRecall precision_recall(const Prediction& prediction,
                                               const GroundTruth& truth);

struct RunMetrics {
    std::optional<double> precision;
    std::optional<double> recall;
    /// Per requester; unset means unresolved.
    std::map<PeerId, std::optional<Millis>> ttfb;
    std::vector<std::uint32_t> walk_lengths;
    std::array<std::uint64_t, kMessageTypeCount> msg_counts{};
    std::uint64_t bytes_total{0};

    [[nodiscard]] std::uint64_t msgs_total() const;
    [[nodiscard]] double resolved_fraction() const;
    [[nodiscard]] std::vector<double> resolved_ttfb() const;
};

/// Observer that records request lifecycles, walk lengths and traffic.
class MetricsCollector : public Observer {
public:
    void on_send(Millis now, PeerId from, PeerId to, const Message& message, std::size_t bytes,
                 Millis deliver_at) override;
    void on_protocol(Millis now, const ProtocolEvent& event) override;

    /// Time from request start to the first accepted BLOCK; unset if the
    /// request never resolved. Throws std::out_of_range for unknown requests.
    [[nodiscard]] std::optional<Millis> ttfb(PeerId requester, const Cid& cid) const;
    /// Hop count of the first proxy reached by each requester's walk.
    [[nodiscard]] const std::map<PeerId, std::uint32_t>& walk_hops() const { return walk_hops_; }

    [[nodiscard]] RunMetrics finish() const;

private:
    struct RequestRecord {
        Millis started{0};
        std::optional<Millis> completed;
        bool failed{false};
    };
    std::map<std::pair<PeerId, Cid>, RequestRecord> requests_;
    std::map<PeerId, std::uint32_t> walk_hops_;
    std::array<std::uint64_t, kMessageTypeCount> counts_{};
    std::uint64_t bytes_{0};
};

struct Stats {
    std::size_t n{0};
    double mean{0}, median{0}, stddev{0}, p5{0}, p95{0};
};

/// Sample statistics; percentiles interpolate linearly between order statistics.
[[nodiscard]] Stats summarize(std::vector<double> values);
[[nodiscard]] double percentile(std::vector<double> sorted_values, double q);

struct Summary {
    std::size_t runs{0};
    Stats precision, recall, ttfb;
    double resolved_fraction{0};
    std::map<std::uint32_t, std::uint64_t> walk_histogram;
    double msgs_mean{0};
    double bytes_mean{0};
};

/// Pools TTFB samples and walk lengths across runs; precision and recall are
/// averaged per run. Throws std::invalid_argument on an empty input.
[[nodiscard]] Summary aggregate(std::span<const RunMetrics> runs);

}  // namespace rawa
