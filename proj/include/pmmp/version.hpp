#pragma once

namespace pmmp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pmmp
