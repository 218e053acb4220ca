#include "rawa/dht.hpp"

#include <string>

namespace rawa {

std::string DummyDht::address_of(PeerId peer) {
    return "/sim/" + std::to_string(peer.index);
}

DhtAnswer DummyDht::lookup(const Cid& cid, RngStream& rng) const {
    DhtAnswer answer;
    answer.delay = rng.uniform(config_.base_delay * (1.0 - config_.delay_spread),
                               config_.base_delay * (1.0 + config_.delay_spread));
    if (auto it = table_.find(cid); it != table_.end()) {
        for (const auto& peer : it->second)
            answer.providers.push_back(ProviderRecord{peer, address_of(peer)});
    }
    return answer;
}

}  // namespace rawa
