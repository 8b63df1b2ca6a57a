#pragma once

namespace lcfuse {

inline constexpr const char* kToolVersion = "0.1.0";

}
