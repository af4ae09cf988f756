#pragma once

namespace ratchet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ratchet
