#include "netobs/node_id.hpp"

#include <cstdio>

namespace netobs {

std::string NodeId::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value_));
    return std::string(buf, 16);
}

std::optional<NodeId> NodeId::from_hex(std::string_view text) {
    if (text.size() != 16) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : text) {
        unsigned digit;
        if (c >= '0' && c <= '9')
            digit = static_cast<unsigned>(c - '0');
        else if (c >= 'a' && c <= 'f')
            digit = static_cast<unsigned>(c - 'a' + 10);
        else
            return std::nullopt;
        v = (v << 4) | digit;
    }
    return NodeId{v};
}

}  // namespace netobs
