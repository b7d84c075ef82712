#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mpq {

uint64_t fnv1a64(std::string_view bytes);
std::string hex64(uint64_t v);

}  // namespace mpq
