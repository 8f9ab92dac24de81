#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "netobs/node_id.hpp"

namespace netobs {

/// Keyed relabeling of IPv4/IPv6 addresses into NodeIds.
///
/// The salt is stretched into a 128-bit SipHash key once; each address is
/// reduced to its canonical binary form (family tag + network-order bytes) and
/// hashed, so textual variants of the same address ("::1" vs "0::1") map to
/// the same id.
class Anonymizer {
public:
    explicit Anonymizer(std::string_view salt);

    /// Throws ParseError naming the offending text when it is not an address.
    NodeId operator()(std::string_view raw_addr) const;
    /// Same id as the dotted-quad text of `host_order`, without parsing.
    NodeId ipv4(std::uint32_t host_order) const;

private:
    NodeId hash_canonical(const unsigned char* canon, std::size_t len) const;

    std::array<unsigned char, 16> key_{};
};

/// One-shot convenience; prefer Anonymizer when hashing many addresses.
NodeId anonymize(std::string_view raw_addr, std::string_view salt);

}  // namespace netobs
