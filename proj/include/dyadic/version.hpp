#pragma once

namespace dyadic {

inline constexpr const char* version = "0.1.0";

} // namespace dyadic
