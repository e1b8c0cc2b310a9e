#pragma once

namespace cfdiff {

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace cfdiff
