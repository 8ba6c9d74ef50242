#pragma once

#include <cstdint>
#include <string>

#include "arch.hpp"
#include "dataset.hpp"
#include "loss.hpp"

namespace lc {

/// Everything needed to rebuild the model and reproduce its preprocessing at
/// prediction time.
struct CheckpointMeta {
    ArchKind arch = ArchKind::alexnet_like;
    int r = 32;
    float sigma = 8.0f;
    int s_r = 8;
    int s_e = 8;
    double resize_factor = 0.125;
    TargetMode target_mode = TargetMode::local_count;
    LossKind loss = LossKind::l1;
    float delta = 1.0f;
    ChannelMeans means;
    std::uint64_t seed = 0;
    int epochs_completed = 0;
    float base_lr = 0.01f;
    float momentum = 0.9f;
    int batch_size = 256;
};

/// Binary format: magic + version, a text metadata block, every layer's
/// tensors (including batch-norm running statistics) as little-endian float32
/// with shape headers, and a trailing CRC-32 of the whole stream. Files are
/// written atomically (temp file + rename).
void save_checkpoint(const NetworkModel& model, const CheckpointMeta& meta,
                     const std::string& path);

struct LoadedCheckpoint {
    NetworkModel model;
    CheckpointMeta meta;
};

/// Errors on magic/version mismatch, truncation or checksum failure.
LoadedCheckpoint load_checkpoint(const std::string& path);

/// CRC-32 (the widely used reflected 0xEDB88320 polynomial).
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

}  // namespace lc
