#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sagnac {

// FNV-1a 64-bit; manifest integrity checksums (not cryptographic).
std::uint64_t fnv1a64(std::string_view data);
std::uint64_t fnv1a64_file(const std::string& path);
std::string to_hex(std::uint64_t v);

}  // namespace sagnac
