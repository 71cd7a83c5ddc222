#ifndef SENTMTL_VERSION_HPP
#define SENTMTL_VERSION_HPP

namespace sentmtl {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever the checkpoint or manifest layout changes.
inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;

}  // namespace sentmtl

#endif  // SENTMTL_VERSION_HPP
