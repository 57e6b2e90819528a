#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bbci {

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);
std::string file_digest_hex(const std::string& path);

}  // namespace bbci
