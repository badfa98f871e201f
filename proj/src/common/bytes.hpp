#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evov {

using bytes = std::vector<std::uint8_t>;
using byte_view = std::span<const std::uint8_t>;
using hash256 = std::array<std::uint8_t, 32>;

// Root of every error thrown by the library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string to_hex(byte_view data);
std::string to_hex(const hash256& h);
bytes from_hex(std::string_view hex);
hash256 hash_from_hex(std::string_view hex);

bytes str_bytes(std::string_view s);
std::string bytes_str(byte_view data);

inline byte_view as_view(const bytes& b) { return byte_view(b.data(), b.size()); }
inline byte_view as_view(const hash256& h) { return byte_view(h.data(), h.size()); }

}  // namespace evov
