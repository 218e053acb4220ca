#include "rawa/core.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <stdexcept>

namespace rawa {

namespace {

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

}  // namespace

std::string PeerId::str() const { return "P" + std::to_string(index); }

std::string Cid::short_hex() const { return to_hex(std::span(digest).first(4)); }

std::string Cid::hex() const { return to_hex(digest); }

Block::Block(std::vector<std::uint8_t> payload) {
    if (payload.empty()) throw std::invalid_argument("block payload must not be empty");
    bytes_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(payload));
}

bool operator==(const Block& a, const Block& b) {
    if (a.bytes_ == b.bytes_) return true;
    return std::ranges::equal(*a.bytes_, *b.bytes_);
}

std::string_view to_string(MessageType t) {
    switch (t) {
        case MessageType::WantHave: return "WANT-HAVE";
        case MessageType::WantBlock: return "WANT-BLOCK";
        case MessageType::Cancel: return "CANCEL";
        case MessageType::Have: return "HAVE";
        case MessageType::DontHave: return "DONT-HAVE";
        case MessageType::Block: return "BLOCK";
        case MessageType::WantForward: return "WANT-FORWARD";
        case MessageType::ForwardHave: return "FORWARD-HAVE";
    }
    return "?";
}

bool is_request(MessageType t) {
    return t == MessageType::WantHave || t == MessageType::WantBlock ||
           t == MessageType::WantForward;
}

Message Message::block(const Cid& cid, Block payload) {
    Message m(MessageType::Block, cid);
    m.payload_ = std::move(payload);
    return m;
}

Message Message::want_forward(const Cid& cid, WalkTag tag) {
    Message m(MessageType::WantForward, cid);
    m.walk_ = tag;
    return m;
}

Message Message::forward_have(const Cid& cid, std::vector<ProviderRecord> providers,
                              std::optional<WalkTag> tag) {
    if (providers.empty()) throw std::invalid_argument("FORWARD-HAVE requires at least one provider");
    Message m(MessageType::ForwardHave, cid);
    m.providers_ = std::move(providers);
    m.walk_ = tag;
    return m;
}

Cid derive_cid(const Block& block) {
    Cid cid;
    auto payload = block.payload();
    SHA256(payload.data(), payload.size(), cid.digest.data());
    return cid;
}

bool validate_block(const Cid& cid, const Block& block) { return derive_cid(block) == cid; }

std::size_t wire_size(const Message& message) {
    std::size_t size = wire::kEnvelope + wire::kCidEntry;
    size += message.providers().size() * wire::kProviderRecord;
    if (message.payload()) size += message.payload()->size();
    return size;
}

}  // namespace rawa
