#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stdsh/tensor.hpp"

namespace stdsh {

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Binary parameter file:
//   "STDSH1"
//   repeated until EOF:
//     u16 name length, name bytes, u8 rank, rank x u32 dims,
//     numel x f64 values
// All integers and reals are little-endian.
inline constexpr char kCheckpointMagic[] = "STDSH1";

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

// Copies values from `source` into same-named, same-shaped tensors of `target`.
// Every target name must be present.
void assign_checkpoint(const std::vector<NamedTensor>& source, std::vector<NamedTensor>& target);

}  // namespace stdsh
