#include <catch_amalgamated.hpp>

#include "scenario.hpp"

using namespace rawa;
using namespace rawa::testing;

namespace {

Cid cid_of(std::uint64_t seed) { return derive_cid(random_block(64, seed)); }

GroundTruth truth_of(std::size_t n) {
    GroundTruth t;
    for (std::uint32_t i = 0; i < n; ++i) t.interests[PeerId{i}] = cid_of(i);
    return t;
}

RunMetrics with_scores(double p, double r) {
    RunMetrics m;
    m.precision = p;
    m.recall = r;
    return m;
}

}  // namespace

TEST_CASE("precision and recall") {
    const auto truth = truth_of(3);
    Prediction all;
    for (const auto& [peer, c] : truth.interests) all.links[peer] = c;
    auto pr = precision_recall(all, truth);
    REQUIRE(*pr.precision == 1.0);
    REQUIRE(pr.recall == 1.0);

    Prediction wrong;
    for (std::uint32_t i = 0; i < 3; ++i) wrong.links[PeerId{i}] = cid_of(100 + i);
    pr = precision_recall(wrong, truth);
    REQUIRE(*pr.precision == 0.0);
    REQUIRE(pr.recall == 0.0);

    Prediction half;
    half.links[PeerId{0}] = truth.interests.at(PeerId{0});
    half.links[PeerId{1}] = cid_of(77);
    half.abstained.insert(PeerId{2});
    pr = precision_recall(half, truth);
    REQUIRE(*pr.precision == 0.5);
    REQUIRE(pr.recall == Catch::Approx(1.0 / 3.0));

    Prediction stranger;
    stranger.links[PeerId{9}] = cid_of(1);
    REQUIRE_THROWS_AS(precision_recall(stranger, truth), std::invalid_argument);
}

TEST_CASE("ttfb lookups") {
    Harness h(make_topology(2, {{0, 1}}));
    h.fill<VanillaEngine>(VanillaConfig{});
    h.start();
    const Cid local = h.give(0);
    h.node(0).request(local);
    h.sim->run();
    REQUIRE(h.metrics.ttfb(PeerId{0}, local) == 0.0);
    REQUIRE_THROWS_AS(h.metrics.ttfb(PeerId{1}, local), std::out_of_range);

    MetricsCollector m;
    const Cid c = cid_of(5);
    m.on_protocol(10.0, ProtocolEvent{ProtocolEvent::Kind::RequestStarted, PeerId{3}, c, std::nullopt});
    m.on_protocol(90.0, ProtocolEvent{ProtocolEvent::Kind::RequestFailed, PeerId{3}, c, std::nullopt});
    REQUIRE_FALSE(m.ttfb(PeerId{3}, c).has_value());
    const auto run = m.finish();
    REQUIRE(run.resolved_fraction() == 0.0);
    REQUIRE(run.resolved_ttfb().empty());
}

TEST_CASE("traffic accounting") {
    MetricsCollector m;
    const Cid c = cid_of(1);
    m.on_send(0, PeerId{0}, PeerId{1}, Message::want_have(c), 44, 100);
    m.on_send(0, PeerId{1}, PeerId{0}, Message::have(c), 44, 100);
    m.on_send(0, PeerId{1}, PeerId{0}, Message::have(c), 44, 100);
    const auto run = m.finish();
    REQUIRE(run.msgs_total() == 3);
    REQUIRE(run.bytes_total == 132);
    REQUIRE(run.msg_counts[static_cast<std::size_t>(MessageType::Have)] == 2);
}

TEST_CASE("aggregation") {
    const std::vector<RunMetrics> same(5, with_scores(0.7, 0.7));
    auto s = aggregate(same);
    REQUIRE(s.runs == 5);
    REQUIRE(s.precision.mean == Catch::Approx(0.7));
    REQUIRE(s.precision.stddev == 0.0);

    const std::vector<RunMetrics> two{with_scores(0.4, 0.4), with_scores(0.6, 0.6)};
    s = aggregate(two);
    REQUIRE(s.precision.mean == Catch::Approx(0.5));
    REQUIRE(s.recall.mean == Catch::Approx(0.5));

    // Runs with an unset precision are left out of the precision statistics.
    std::vector<RunMetrics> mixed{with_scores(0.4, 0.4), RunMetrics{}};
    mixed[1].recall = 0.0;
    s = aggregate(mixed);
    REQUIRE(s.precision.n == 1);
    REQUIRE(s.recall.n == 2);

    REQUIRE_THROWS_AS(aggregate(std::span<const RunMetrics>{}), std::invalid_argument);
}

TEST_CASE("pooled ttfb and walk histogram") {
    RunMetrics a, b;
    a.ttfb[PeerId{0}] = 100.0;
    a.ttfb[PeerId{1}] = std::nullopt;
    b.ttfb[PeerId{0}] = 300.0;
    a.walk_lengths = {1, 2};
    b.walk_lengths = {1};
    const std::vector<RunMetrics> runs{a, b};
    const auto s = aggregate(runs);
    REQUIRE(s.ttfb.n == 2);
    REQUIRE(s.ttfb.mean == 200.0);
    REQUIRE(s.resolved_fraction == Catch::Approx(2.0 / 3.0));
    REQUIRE(s.walk_histogram.at(1) == 2);
    REQUIRE(s.walk_histogram.at(2) == 1);
}

TEST_CASE("percentiles interpolate between order statistics") {
    REQUIRE(percentile({4, 1, 3, 2}, 0.5) == 2.5);
    REQUIRE(percentile({1, 2, 3, 4, 5}, 0.95) == Catch::Approx(4.8));
    REQUIRE(percentile({7}, 0.05) == 7.0);
    const auto s = summarize({1, 2, 3, 4});
    REQUIRE(s.median == 2.5);
    REQUIRE(s.stddev == Catch::Approx(1.2909944));
}
