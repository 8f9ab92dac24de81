#pragma once

namespace netobs {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Bumped whenever the on-disk layout of the named file changes.
inline constexpr int kFlowFormatVersion = 1;
inline constexpr int kMatrixFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kBaselineFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;

}  // namespace netobs
