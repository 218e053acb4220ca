#include <catch_amalgamated.hpp>

#include "rawa/dht.hpp"

using namespace rawa;

namespace {
Cid cid_of(std::uint8_t b) { return derive_cid(Block(std::vector<std::uint8_t>{b})); }
}  // namespace

TEST_CASE("provide has set semantics and lookup returns every provider") {
    DummyDht dht;
    RngStream rng(1);
    dht.provide(cid_of(1), PeerId{3});
    dht.provide(cid_of(1), PeerId{3});
    dht.provide(cid_of(1), PeerId{8});
    const auto answer = dht.lookup(cid_of(1), rng);
    REQUIRE(answer.providers.size() == 2);
    REQUIRE(answer.providers[0].peer == PeerId{3});
    REQUIRE(answer.providers[1].peer == PeerId{8});
    REQUIRE(answer.providers[1].address == DummyDht::address_of(PeerId{8}));
}

TEST_CASE("lookup delay lies in 622 ms +- 10 % with the right mean") {
    DummyDht dht;
    RngStream rng(2);
    dht.provide(cid_of(1), PeerId{0});
    double sum = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto a = dht.lookup(i % 2 ? cid_of(1) : cid_of(2), rng);
        REQUIRE(a.delay >= 559.8 - 1e-9);
        REQUIRE(a.delay <= 684.2 + 1e-9);
        sum += a.delay;
    }
    REQUIRE(sum / n >= 615.0);
    REQUIRE(sum / n <= 629.0);
}

TEST_CASE("unknown CID yields an empty answer") {
    DummyDht dht;
    RngStream rng(3);
    const auto a = dht.lookup(cid_of(5), rng);
    REQUIRE(a.providers.empty());
    REQUIRE(a.delay >= 559.8);
}
