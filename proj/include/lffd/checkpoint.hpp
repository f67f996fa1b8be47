#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lffd/model.hpp"

namespace lffd {

// On-disk model format ("LFFD"): magic bytes, format version (u32 LE),
// header length (u32 LE), UTF-8 JSON header (architecture id, training
// metadata, tensor directory with payload-relative byte offsets), then the
// raw IEEE-754 32-bit little-endian tensor payloads in directory order.
// The round trip is bitwise lossless.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
    int epochs = 0;
    std::uint64_t seed = 0;
    double final_val_accuracy = -1.0;
    std::vector<std::string> class_names; // class-index order
};

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
    Model<float> model;
    CheckpointMeta meta;
};

// Validates magic, format version, architecture id, tensor directory, and
// file size; any inconsistency raises CheckpointError without producing a
// partial model.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

} // namespace lffd
