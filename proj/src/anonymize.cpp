#include "netobs/anonymize.hpp"

#include <arpa/inet.h>
#include <sodium.h>

#include <cstring>
#include <string>

#include "netobs/error.hpp"

namespace netobs {

namespace {

void ensure_sodium() {
    static const bool ready = sodium_init() >= 0;
    if (!ready) throw Error("libsodium initialisation failed");
}

}  // namespace

Anonymizer::Anonymizer(std::string_view salt) {
    if (salt.empty()) throw ParameterError("anonymize: salt must be non-empty");
    ensure_sodium();
    static_assert(sizeof key_ == crypto_shorthash_KEYBYTES);
    crypto_generichash(key_.data(), key_.size(),
                       reinterpret_cast<const unsigned char*>(salt.data()), salt.size(),
                       nullptr, 0);
}

NodeId Anonymizer::operator()(std::string_view raw_addr) const {
    // inet_pton needs a terminated string; addresses are short
    if (raw_addr.empty() || raw_addr.size() >= INET6_ADDRSTRLEN)
        throw ParseError("malformed address in field raw_addr: '" + std::string(raw_addr) + "'");
    char text[INET6_ADDRSTRLEN];
    std::memcpy(text, raw_addr.data(), raw_addr.size());
    text[raw_addr.size()] = '\0';

    unsigned char canon[17];
    std::size_t len = 0;
    if (inet_pton(AF_INET, text, canon + 1) == 1) {
        canon[0] = 4;
        len = 5;
    } else if (inet_pton(AF_INET6, text, canon + 1) == 1) {
        canon[0] = 6;
        len = 17;
    } else {
        throw ParseError("malformed address in field raw_addr: '" + std::string(raw_addr) + "'");
    }

    return hash_canonical(canon, len);
}

NodeId Anonymizer::ipv4(std::uint32_t host_order) const {
    const unsigned char canon[5] = {4, static_cast<unsigned char>(host_order >> 24),
                                    static_cast<unsigned char>(host_order >> 16),
                                    static_cast<unsigned char>(host_order >> 8),
                                    static_cast<unsigned char>(host_order)};
    return hash_canonical(canon, sizeof canon);
}

NodeId Anonymizer::hash_canonical(const unsigned char* canon, std::size_t len) const {
    unsigned char out[crypto_shorthash_BYTES];
    crypto_shorthash(out, canon, len, key_.data());
    std::uint64_t v = 0;
    for (unsigned char b : out) v = (v << 8) | b;
    return NodeId{v};
}

NodeId anonymize(std::string_view raw_addr, std::string_view salt) {
    return Anonymizer(salt)(raw_addr);
}

}  // namespace netobs
