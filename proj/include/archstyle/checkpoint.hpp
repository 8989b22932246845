#pragma once

#include <string>

#include "archstyle/network.hpp"

namespace archstyle {

inline constexpr char kCheckpointMagic[8] = {'A', 'R', 'S', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Writes config echo, every parameter and both optimizers' state. See
/// docs/checkpoint_format.md for the byte layout.
void save_checkpoint(const TranslatorBundle& b, const std::string& path);

/// Throws CheckpointError on bad magic, version, truncation, or any
/// name/shape mismatch against the network the stored config describes.
TranslatorBundle load_checkpoint(const std::string& path);

}  // namespace archstyle
