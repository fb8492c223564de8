#pragma once

namespace scvi {
inline constexpr const char* kVersion = "0.1.0";
}
