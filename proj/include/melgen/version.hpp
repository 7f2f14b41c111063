#pragma once

namespace melgen {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kManifestVersion = 1;

}  // namespace melgen
