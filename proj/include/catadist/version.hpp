#pragma once

namespace catadist {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace catadist
