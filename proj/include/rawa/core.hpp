// Content-addressing primitives and the Bitswap message vocabulary.

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rawa {

/// Virtual time in milliseconds.
using Millis = double;

/// Dense per-run node index. Rendered as "P<index>".
struct PeerId {
    std::uint32_t index{0};

    auto operator<=>(const PeerId&) const = default;
    [[nodiscard]] std::string str() const;
};

/// SHA-256 digest of a block payload. Codec and multihash prefixes are not modeled.
struct Cid {
    std::array<std::uint8_t, 32> digest{};

    auto operator<=>(const Cid&) const = default;
    /// First 8 hex characters, used in logs and traces.
    [[nodiscard]] std::string short_hex() const;
    [[nodiscard]] std::string hex() const;
};

/// Immutable byte payload. Copies share the underlying buffer.
class Block {
public:
    /// Throws std::invalid_argument on an empty payload.
    explicit Block(std::vector<std::uint8_t> payload);

    [[nodiscard]] std::span<const std::uint8_t> payload() const { return *bytes_; }
    [[nodiscard]] std::size_t size() const { return bytes_->size(); }

    friend bool operator==(const Block& a, const Block& b);

private:
    std::shared_ptr<const std::vector<std::uint8_t>> bytes_;
};

struct ProviderRecord {
    PeerId peer;
    /// Contact address. Populated when the sender learned it from the DHT.
    std::optional<std::string> address;

    bool operator==(const ProviderRecord&) const = default;
};

enum class MessageType : std::uint8_t {
    WantHave,
    WantBlock,
    Cancel,
    Have,
    DontHave,
    Block,
    WantForward,
    ForwardHave,
};

inline constexpr std::size_t kMessageTypeCount = 8;

[[nodiscard]] std::string_view to_string(MessageType t);
[[nodiscard]] bool is_request(MessageType t);

/// Simulation-only walk metadata. Never read by protocol engines and not
/// counted in wire size; the observer uses it to check walk/return fidelity.
struct WalkTag {
    PeerId origin;
    std::uint32_t hops{0};

    bool operator==(const WalkTag&) const = default;
};

/// One Bitswap envelope carrying exactly one entry.
class Message {
public:
    static Message want_have(const Cid& cid) { return Message(MessageType::WantHave, cid); }
    static Message want_block(const Cid& cid) { return Message(MessageType::WantBlock, cid); }
    static Message cancel(const Cid& cid) { return Message(MessageType::Cancel, cid); }
    static Message have(const Cid& cid) { return Message(MessageType::Have, cid); }
    static Message dont_have(const Cid& cid) { return Message(MessageType::DontHave, cid); }
    static Message block(const Cid& cid, Block payload);
    static Message want_forward(const Cid& cid, WalkTag tag);
    /// Throws std::invalid_argument if providers is empty.
    static Message forward_have(const Cid& cid, std::vector<ProviderRecord> providers,
                                std::optional<WalkTag> tag = std::nullopt);

    [[nodiscard]] MessageType type() const { return type_; }
    [[nodiscard]] const Cid& cid() const { return cid_; }
    [[nodiscard]] const std::optional<Block>& payload() const { return payload_; }
    [[nodiscard]] const std::vector<ProviderRecord>& providers() const { return providers_; }
    [[nodiscard]] const std::optional<WalkTag>& walk() const { return walk_; }

    bool operator==(const Message&) const = default;

private:
    Message(MessageType type, const Cid& cid) : type_(type), cid_(cid) {}

    MessageType type_;
    Cid cid_;
    std::optional<Block> payload_;
    std::vector<ProviderRecord> providers_;
    std::optional<WalkTag> walk_;
};

[[nodiscard]] Cid derive_cid(const Block& block);
[[nodiscard]] bool validate_block(const Cid& cid, const Block& block);

namespace wire {
inline constexpr std::size_t kEnvelope = 4;
inline constexpr std::size_t kCidEntry = 40;
inline constexpr std::size_t kProviderRecord = 38;
}  // namespace wire

/// Bytes charged to the bandwidth model for one message.
[[nodiscard]] std::size_t wire_size(const Message& message);

}  // namespace rawa
