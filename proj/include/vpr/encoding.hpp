#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace vpr {

std::string base64_encode(std::string_view bytes);
// Throws ParseError on characters outside the standard alphabet or bad padding.
std::string base64_decode(std::string_view text);

// 64-bit FNV-1a; stable across platforms, used for cache keys and seeding.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t value);

}  // namespace vpr
