#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vmflow/params.hpp"

namespace vmflow {

// Binary layout, all integers little-endian:
//   "VMFCKPT1" | u32 count | count x { u16 name_len | name (UTF-8) | u8 rank |
//   rank x u64 dim | f32 data[numel] }
inline constexpr char kCheckpointMagic[8] = {'V', 'M', 'F', 'C', 'K', 'P', 'T', '1'};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

// Copies values for every parameter in `params` from `tensors` by name.
// Throws if a parameter is missing or its shape differs.
void assign_params(ParamStore& params, const std::vector<NamedTensor>& tensors);

}  // namespace vmflow
