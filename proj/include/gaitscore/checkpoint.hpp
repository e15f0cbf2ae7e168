#pragma once

#include <cstdint>
#include <string>

#include "gaitscore/params.hpp"

namespace gaitscore {

/// Checkpoint file format (all integers and floats little-endian):
///
///   bytes 0..3   magic "GSC1"
///   u32          format version (currently 1)
///   u64          seed
///   u32          epoch
///   u64          config hash (FNV-1a of config.lock, 0 if none)
///   u32          tensor count
///   per tensor:  u32 name length, name bytes,
///                u32 rank, u32 dims[rank], f32 data[numel]
///
/// Tensors appear in ParamSet manifest order. save/load round-trips are
/// bit-identical; load validates every name and shape against the manifest
/// implied by the stored conv/head shapes.
struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::uint32_t epoch = 0;
    std::uint64_t config_hash = 0;
};

void save_checkpoint(const ParamSet& params, const std::string& path,
                     const CheckpointMeta& meta = {});

struct LoadedCheckpoint {
    ParamSet params;
    CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Exact on-disk size in bytes of a checkpoint for this architecture.
std::size_t checkpoint_byte_size(const EncoderArch& arch);

/// FNV-1a 64-bit, used for the config hash stored in checkpoints.
std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace gaitscore
