// Omniscient provider index standing in for the Kademlia DHT.

#pragma once

#include <map>
#include <set>
#include <vector>

#include "rawa/core.hpp"
#include "rawa/rng.hpp"

namespace rawa {

struct DhtConfig {
    Millis base_delay{622.0};
    double delay_spread{0.10};
};

struct DhtAnswer {
    std::vector<ProviderRecord> providers;
    Millis delay{0};
};

class DummyDht {
public:
    explicit DummyDht(DhtConfig config = {}) : config_(config) {}

    void provide(const Cid& cid, PeerId peer) { table_[cid].insert(peer); }

    /// All registered providers, with addresses, and a delay drawn from
    /// U(base*(1-spread), base*(1+spread)). Departed peers are filtered by the
    /// simulator when the answer is delivered.
    DhtAnswer lookup(const Cid& cid, RngStream& rng) const;

    [[nodiscard]] const DhtConfig& config() const { return config_; }

    /// Simulated contact address handed out with DHT provider records.
    [[nodiscard]] static std::string address_of(PeerId peer);

private:
    DhtConfig config_;
    std::map<Cid, std::set<PeerId>> table_;
};

}  // namespace rawa
