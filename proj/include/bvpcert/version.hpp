#pragma once

namespace bvpcert {

inline constexpr const char* kVersion = "0.1.0";

} // namespace bvpcert
