#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace netobs {

/// Opaque anonymized node identifier. Ordering is arbitrary but total, so ids
/// can key sorted containers; it carries no meaning about the address.
class NodeId {
public:
    constexpr NodeId() = default;
    constexpr explicit NodeId(std::uint64_t v) : value_(v) {}

    constexpr std::uint64_t value() const noexcept { return value_; }

    /// Exactly 16 lowercase hex digits.
    std::string hex() const;

    /// Parses the 16-digit lowercase hex form; nullopt for anything else.
    static std::optional<NodeId> from_hex(std::string_view text);

    friend constexpr auto operator<=>(NodeId, NodeId) = default;

private:
    std::uint64_t value_ = 0;
};

}  // namespace netobs

template <>
struct std::hash<netobs::NodeId> {
    std::size_t operator()(netobs::NodeId id) const noexcept {
        // ids are already keyed-hash outputs; mix anyway for hex-loaded test ids
        std::uint64_t x = id.value();
        x ^= x >> 33;
        x *= 0xff51afd7ed558ccdULL;
        x ^= x >> 33;
        return static_cast<std::size_t>(x);
    }
};
