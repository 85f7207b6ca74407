#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace conex {

/// 64-bit FNV-1a. Stable across platforms, which std::hash is not.
std::uint64_t fnv1a64(std::string_view data);

/// fnv1a64 as 16 lowercase hex digits.
std::string digest_hex(std::string_view data);

}  // namespace conex
