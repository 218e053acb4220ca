// Adversary models: the passive first-spy estimator (FSE), the WANT-FORWARD
// exploiter (WFE) and its subgraph-aware variant (SAWFE), as node behaviors
// plus the offline classifiers that turn their observations into predictions.

#pragma once

#include <map>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "rawa/bitswap.hpp"
#include "rawa/dht.hpp"
#include "rawa/netsim.hpp"
#include "rawa/rng.hpp"

namespace rawa {

struct ExploiterConfig {
    /// Also claim HAVE towards peers that dialed us to verify a fake provider.
    bool fake_have_on_verify{true};
};

/// Active exploiter wrapped around an honest engine. Answers every
/// WANT-FORWARD with a FORWARD-HAVE naming only itself, claims HAVE for every
/// WANT-HAVE and turns WANT-BLOCKs (the deanonymizing signal) into DONT-HAVE.
/// Everything else is delegated to the honest engine.
template <class Honest>
class Exploiter : public Honest {
public:
    template <class... Args>
    Exploiter(Simulator& sim, PeerId self, ExploiterConfig config, Args&&... args)
        : Honest(sim, self, std::forward<Args>(args)...), exploit_(config) {}

    void start() override {
        Honest::start();
        initial_neighbors_ = this->sim_.neighbors(this->self_);
    }

protected:
    void on_want_forward(PeerId from, const Message& message) override {
        this->send(from, Message::forward_have(
                             message.cid(),
                             {ProviderRecord{this->self_, DummyDht::address_of(this->self_)}},
                             message.walk()));
    }

    void on_want_have(PeerId from, const Cid& cid) override {
        if (exploit_.fake_have_on_verify || initial_neighbors_.contains(from)) {
            this->send(from, Message::have(cid));
            return;
        }
        Honest::on_want_have(from, cid);
    }

    void on_want_block(PeerId from, const Cid& cid) override {
        this->send(from, Message::dont_have(cid));
    }

private:
    ExploiterConfig exploit_;
    std::set<PeerId> initial_neighbors_;
};

struct Observation {
    Millis time{0};
    std::uint64_t seq{0};
    PeerId adversary;
    PeerId sender;
    Message message;
};

/// Messages received by any controlled node, merged in (time, seq) order.
struct ObservationLog {
    std::vector<Observation> records;
};

/// Taps deliveries to controlled nodes. Traffic between controlled nodes is ignored.
class ObservationRecorder : public Observer {
public:
    explicit ObservationRecorder(std::set<PeerId> adversaries)
        : adversaries_(std::move(adversaries)) {}

    void on_deliver(Millis now, std::uint64_t seq, PeerId from, PeerId to,
                    const Message& message) override;

    [[nodiscard]] const ObservationLog& log() const { return log_; }

private:
    std::set<PeerId> adversaries_;
    ObservationLog log_;
};

struct Prediction {
    std::map<PeerId, Cid> links;
    std::set<PeerId> abstained;
};

/// CIDs of every request-type message in the log.
[[nodiscard]] std::set<Cid> observed_cids(const ObservationLog& log);

/// First request-type message seen from each peer.
[[nodiscard]] Prediction fse_classify(const ObservationLog& log, std::span<const PeerId> population,
                                      const std::set<Cid>& observed, RngStream& rng);

/// First WANT-BLOCK seen from each peer.
[[nodiscard]] Prediction wfe_classify(const ObservationLog& log, std::span<const PeerId> population,
                                      const std::set<Cid>& observed, RngStream& rng);

/// Successor sets of every node, handed to the SAWFE as an oracle.
using SubgraphMap = std::map<PeerId, std::vector<PeerId>>;

/// WFE stage, then each WANT-HAVE sender is treated as a proxy and its CID is
/// assigned to one uniformly chosen unclassified subgraph predecessor.
[[nodiscard]] Prediction sawfe_classify(const ObservationLog& log, const SubgraphMap& subgraph,
                                        std::span<const PeerId> population,
                                        const std::set<Cid>& observed, RngStream& rng);

}  // namespace rawa
