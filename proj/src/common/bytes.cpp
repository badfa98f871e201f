#include "common/bytes.hpp"

namespace evov {

namespace {
constexpr char hex_digits[] = "0123456789abcdef";

int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
}  // namespace

std::string to_hex(byte_view data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(hex_digits[b >> 4]);
        out.push_back(hex_digits[b & 0x0f]);
    }
    return out;
}

std::string to_hex(const hash256& h) { return to_hex(byte_view(h.data(), h.size())); }

bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw error("from_hex: odd length");
    bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_val(hex[i]), lo = hex_val(hex[i + 1]);
        if (hi < 0 || lo < 0) throw error("from_hex: bad digit");
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

hash256 hash_from_hex(std::string_view hex) {
    bytes b = from_hex(hex);
    if (b.size() != 32) throw error("hash_from_hex: need 32 bytes");
    hash256 h;
    std::copy(b.begin(), b.end(), h.begin());
    return h;
}

bytes str_bytes(std::string_view s) { return bytes(s.begin(), s.end()); }

std::string bytes_str(byte_view data) { return std::string(data.begin(), data.end()); }

}  // namespace evov
