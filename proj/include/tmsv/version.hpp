#pragma once

namespace tmsv {
inline constexpr const char* version = "0.1.0";
}
